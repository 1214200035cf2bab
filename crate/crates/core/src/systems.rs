//! Thermodynamic models: simple systems with friction on `T*ℝⁿ × ℝ` and two
//! heat-exchanging subsystems on `T*(Q₁ × Q₂) × ℝ²`.
//!
//! A [`ModelSpec`] bundles the energy `H` with its layout and, for composed
//! models, the thermal conductivity `k`. Its [`StructureMatrix`] is the
//! contact bivector `Λ` for simple systems and the almost-Poisson tensor
//! `Λ_K = Λ_{Q₁} + Λ_{Q₂} + K ∂/∂S₁ ∧ ∂/∂S₂` for composed ones, where
//! `K = k(1/T₁ − 1/T₂)` is the Fourier factor.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{check_dim, positive, Error, Result};
use crate::field::ScalarField;
use crate::lagrangian::MechanicalLagrangian;
use crate::state::{dot, Covector, Layout, Tangent};

/// Temperatures at or below this value are rejected.
pub const T_MIN: f64 = 1e-12;

/// A configuration potential `V(q)` with its gradient.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64]) -> Vec<f64>;

    /// The matrix `A` if `V(q) = ½ qᵀAq` exactly.
    fn quadratic_form(&self) -> Option<&[f64]> {
        None
    }
}

/// `V(q) = ½ qᵀAq`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPotential {
    dim: usize,
    matrix: Vec<f64>,
}

impl QuadraticPotential {
    /// Row-major `A`; must be symmetric.
    pub fn new(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        check_dim(dim * dim, matrix.len())?;
        if !is_symmetric(dim, &matrix) {
            return Err(Error::Parameter {
                name: "potential",
                reason: "quadratic form must be symmetric".into(),
            });
        }
        Ok(Self { dim, matrix })
    }

    /// `½ κ |q|²`.
    pub fn harmonic(dim: usize, stiffness: f64) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = stiffness;
        }
        Self { dim, matrix }
    }

    pub fn zero(dim: usize) -> Self {
        Self::harmonic(dim, 0.0)
    }

    /// Two walls and a coupling spring:
    /// `½ κ_a q_a² + ½ κ_b q_b² + ½ κ_c (q_a − q_b)²`.
    pub fn coupled_springs(k_a: f64, k_b: f64, k_c: f64) -> Self {
        Self {
            dim: 2,
            matrix: vec![k_a + k_c, -k_c, -k_c, k_b + k_c],
        }
    }
}

impl Potential for QuadraticPotential {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, q: &[f64]) -> f64 {
        0.5 * dot(q, &self.gradient(q))
    }

    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| dot(&self.matrix[i * n..(i + 1) * n], q)).collect()
    }

    fn quadratic_form(&self) -> Option<&[f64]> {
        Some(&self.matrix)
    }
}

type PotentialValue = dyn Fn(&[f64]) -> f64 + Send + Sync;
type PotentialGradient = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A potential given by a value closure and a gradient closure.
#[derive(Clone)]
pub struct FnPotential {
    dim: usize,
    value: Arc<PotentialValue>,
    gradient: Arc<PotentialGradient>,
}

impl FnPotential {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

impl Potential for FnPotential {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }
    fn gradient(&self, q: &[f64]) -> Vec<f64> {
        (self.gradient)(q)
    }
}

fn is_symmetric(n: usize, a: &[f64]) -> bool {
    (0..n).all(|i| (0..i).all(|j| a[i * n + j] == a[j * n + i]))
}

/// A point-dependent skew-symmetric matrix `M` with `♯(α) = Mα`, so that the
/// flow of `H` is `ẋ = M(x)∇H(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureMatrix(DMatrix<f64>);

impl StructureMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    /// Writes `M[i][j] = v` and `M[j][i] = −v`.
    pub fn set_skew(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] = v;
        self.0[(j, i)] = -v;
    }

    /// Overwrites a single entry without mirroring it. Only useful for
    /// exercising the skew-symmetry audit.
    #[doc(hidden)]
    pub fn inject_entry(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] = v;
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn sharp(&self, alpha: &[f64]) -> Tangent {
        let v = &self.0 * DVector::from_column_slice(alpha);
        Tangent::new(v.as_slice().to_vec())
    }

    /// `Λ(α, β) = ⟨β, ♯(α)⟩`.
    pub fn pair(&self, alpha: &[f64], beta: &[f64]) -> f64 {
        dot(beta, &self.sharp(alpha))
    }

    /// Bitwise `M = −Mᵀ`.
    pub fn is_skew_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..=i).all(|j| self.0[(i, j)] == -self.0[(j, i)]))
    }
}

/// Which family a model was built from, with its parameters.
#[derive(Clone)]
pub enum ModelFamily {
    /// `H = |p|²/2m + V(q) + γS`.
    Damped {
        mass: f64,
        gamma: f64,
        potential: Arc<dyn Potential>,
    },
    /// `H = ½ gⁱʲ pᵢ pⱼ + V(q, S)`.
    QuadraticMetric {
        /// `gⁱʲ` is positive semidefinite, so `Δ_Q(H) ≥ 0` everywhere.
        second_law_guaranteed: bool,
    },
    /// `H = ½(|p_a|²/m_a + |p_b|²/m_b) + V(q_a, q_b) + c_a e^{S_a/c_a} + c_b e^{S_b/c_b}`;
    /// the thermo-particle models are the cases without mechanics.
    ThermoSprings {
        masses: [f64; 2],
        capacities: [f64; 2],
    },
    Custom,
}

impl fmt::Debug for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelFamily::Damped { mass, gamma, .. } => f
                .debug_struct("Damped")
                .field("mass", mass)
                .field("gamma", gamma)
                .finish_non_exhaustive(),
            ModelFamily::QuadraticMetric {
                second_law_guaranteed,
            } => f
                .debug_struct("QuadraticMetric")
                .field("second_law_guaranteed", second_law_guaranteed)
                .finish(),
            ModelFamily::ThermoSprings { masses, capacities } => f
                .debug_struct("ThermoSprings")
                .field("masses", masses)
                .field("capacities", capacities)
                .finish(),
            ModelFamily::Custom => f.write_str("Custom"),
        }
    }
}

/// Parameter record reported alongside results.
#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct ModelParams(pub Vec<(String, f64)>);

/// An immutable thermodynamic model.
#[derive(Clone)]
pub struct ModelSpec {
    name: String,
    layout: Layout,
    energy: Arc<dyn ScalarField>,
    conductivity: Option<f64>,
    family: ModelFamily,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("layout", &self.layout)
            .field("conductivity", &self.conductivity)
            .field("family", &self.family)
            .finish_non_exhaustive()
    }
}

impl ModelSpec {
    /// A simple system on `T*ℝⁿ × ℝ` with a user-supplied energy.
    pub fn simple(name: impl Into<String>, n: usize, energy: Arc<dyn ScalarField>) -> Self {
        Self {
            name: name.into(),
            layout: Layout::simple(n),
            energy,
            conductivity: None,
            family: ModelFamily::Custom,
        }
    }

    /// Two subsystems of mechanical dimension `n1`, `n2` exchanging heat with
    /// conductivity `k ≥ 0`.
    pub fn composed(
        name: impl Into<String>,
        n1: usize,
        n2: usize,
        conductivity: f64,
        energy: Arc<dyn ScalarField>,
    ) -> Result<Self> {
        non_negative("k", conductivity)?;
        Ok(Self {
            name: name.into(),
            layout: Layout::composed(n1, n2),
            energy,
            conductivity: Some(conductivity),
            family: ModelFamily::Custom,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn family(&self) -> &ModelFamily {
        &self.family
    }

    pub fn conductivity(&self) -> Option<f64> {
        self.conductivity
    }

    pub fn is_composed(&self) -> bool {
        self.layout.thermal_count() == 2
    }

    pub fn energy_field(&self) -> &dyn ScalarField {
        self.energy.as_ref()
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        self.energy.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Covector {
        self.energy.gradient(x)
    }

    pub fn params(&self) -> ModelParams {
        let mut out = Vec::new();
        match &self.family {
            ModelFamily::Damped { mass, gamma, .. } => {
                out.push(("mass".into(), *mass));
                out.push(("gamma".into(), *gamma));
            }
            ModelFamily::ThermoSprings { masses, capacities } => {
                out.push(("m_a".into(), masses[0]));
                out.push(("m_b".into(), masses[1]));
                out.push(("c_a".into(), capacities[0]));
                out.push(("c_b".into(), capacities[1]));
            }
            ModelFamily::QuadraticMetric { .. } | ModelFamily::Custom => {}
        }
        if let Some(k) = self.conductivity {
            out.push(("k".into(), k));
        }
        ModelParams(out)
    }

    /// `T_α = ∂H/∂S_α`.
    pub fn temperature(&self, x: &[f64], subsystem: usize) -> Result<f64> {
        self.layout.check(x)?;
        if subsystem >= self.layout.thermal_count() {
            return Err(Error::Contract(format!(
                "subsystem index {subsystem} out of range for {} subsystem(s)",
                self.layout.thermal_count()
            )));
        }
        Ok(self.energy.partial(x, self.layout.s_index(subsystem)))
    }

    pub fn temperatures(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.layout.check(x)?;
        let grad = self.energy.gradient(x);
        Ok(self.layout.s_indices().into_iter().map(|i| grad[i]).collect())
    }

    /// `K = k(1/T₁ − 1/T₂)`.
    pub fn fourier_factor(&self, x: &[f64]) -> Result<f64> {
        let k = self.conductivity.ok_or_else(|| {
            Error::Contract("the Fourier factor needs a composed model".into())
        })?;
        let t = self.temperatures(x)?;
        fourier_from_temperatures(k, t[0], t[1])
    }

    /// Coordinate matrix of `Λ` (simple) or `Λ_K` (composed) at `x`.
    pub fn structure_matrix(&self, x: &[f64]) -> Result<StructureMatrix> {
        self.layout.check(x)?;
        let mut m = StructureMatrix::zeros(self.layout.dim());
        for (iq, ip) in self.layout.canonical_pairs() {
            m.set_skew(iq, ip, 1.0);
        }
        match self.conductivity {
            None => {
                let s = self.layout.s_index(0);
                for ip in self.layout.p_range(0) {
                    m.set_skew(s, ip, x[ip]);
                }
            }
            Some(_) => {
                let s = self.layout.s_indices();
                m.set_skew(s[0], s[1], self.fourier_factor(x)?);
            }
        }
        Ok(m)
    }

    /// The evolution vector field `♯(dH)` at `x`.
    pub fn evolution(&self, x: &[f64]) -> Result<Tangent> {
        let m = self.structure_matrix(x)?;
        Ok(m.sharp(&self.gradient(x)))
    }

    /// Sum of all entropy rates along the evolution field.
    pub fn entropy_rate(&self, x: &[f64]) -> Result<f64> {
        let v = self.evolution(x)?;
        Ok(self.layout.s_indices().into_iter().map(|i| v[i]).sum())
    }

    /// `Δ_Q(H) = Σ pᵢ ∂H/∂pᵢ`, the entropy production indicator of simple models.
    pub fn liouville_rate(&self, x: &[f64]) -> Result<f64> {
        self.layout.check(x)?;
        let grad = self.gradient(x);
        Ok(self
            .layout
            .canonical_pairs()
            .into_iter()
            .map(|(_, ip)| x[ip] * grad[ip])
            .sum())
    }

    /// The contact Lagrangian `L = ½m|q̇|² − V(q) − γS` of damped models.
    pub fn lagrangian(&self) -> Option<MechanicalLagrangian> {
        match &self.family {
            ModelFamily::Damped {
                mass,
                gamma,
                potential,
            } => Some(MechanicalLagrangian::new(*mass, *gamma, potential.clone())),
            _ => None,
        }
    }

    /// `γ` if this is the unit damped harmonic oscillator `p²/2 + q²/2 + γS`.
    pub fn unit_oscillator_gamma(&self) -> Option<f64> {
        match &self.family {
            ModelFamily::Damped {
                mass,
                gamma,
                potential,
            } if *mass == 1.0 && potential.dim() == 1 => {
                (potential.quadratic_form() == Some(&[1.0][..])).then_some(*gamma)
            }
            _ => None,
        }
    }

    /// `(c_a, c_b)` for thermo-particle and thermo-spring models.
    pub fn heat_capacities(&self) -> Option<[f64; 2]> {
        match &self.family {
            ModelFamily::ThermoSprings { capacities, .. } => Some(*capacities),
            _ => None,
        }
    }
}

pub(crate) fn fourier_from_temperatures(k: f64, t1: f64, t2: f64) -> Result<f64> {
    for (subsystem, value) in [(1, t1), (2, t2)] {
        if value.is_nan() || value <= T_MIN {
            return Err(Error::Temperature { subsystem, value });
        }
    }
    Ok(k * (1.0 / t1 - 1.0 / t2))
}

fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if value >= 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parameter {
            name,
            reason: format!("must be non-negative and finite, got {value}"),
        })
    }
}

struct DampedEnergy {
    mass: f64,
    gamma: f64,
    potential: Arc<dyn Potential>,
}

impl ScalarField for DampedEnergy {
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.potential.dim();
        let (q, p) = (&x[..n], &x[n..2 * n]);
        dot(p, p) / (2.0 * self.mass) + self.potential.value(q) + self.gamma * x[2 * n]
    }

    fn gradient(&self, x: &[f64]) -> Covector {
        let n = self.potential.dim();
        let mut g = self.potential.gradient(&x[..n]);
        g.extend(x[n..2 * n].iter().map(|p| p / self.mass));
        g.push(self.gamma);
        Covector::new(g)
    }
}

/// Simple system with viscous friction, `H = |p|²/2m + V(q) + γS`.
///
/// The bath temperature is `∂H/∂S = γ`, so `γ` must be positive.
pub fn damped_system(mass: f64, gamma: f64, potential: Arc<dyn Potential>) -> Result<ModelSpec> {
    positive("mass", mass)?;
    positive("gamma", gamma)?;
    let n = potential.dim();
    Ok(ModelSpec {
        name: "damped".into(),
        layout: Layout::simple(n),
        energy: Arc::new(DampedEnergy {
            mass,
            gamma,
            potential: potential.clone(),
        }),
        conductivity: None,
        family: ModelFamily::Damped {
            mass,
            gamma,
            potential,
        },
    })
}

struct MetricEnergy {
    n: usize,
    g_inv: Vec<f64>,
    potential: Arc<dyn ScalarField>,
}

impl MetricEnergy {
    fn qs(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut qs = x[..n].to_vec();
        qs.push(x[2 * n]);
        qs
    }

    fn g_p(&self, p: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| dot(&self.g_inv[i * n..(i + 1) * n], p)).collect()
    }
}

impl ScalarField for MetricEnergy {
    fn value(&self, x: &[f64]) -> f64 {
        let p = &x[self.n..2 * self.n];
        0.5 * dot(p, &self.g_p(p)) + self.potential.value(&self.qs(x))
    }

    fn gradient(&self, x: &[f64]) -> Covector {
        let n = self.n;
        let dv = self.potential.gradient(&self.qs(x));
        let mut g = dv[..n].to_vec();
        g.extend(self.g_p(&x[n..2 * n]));
        g.push(dv[n]);
        Covector::new(g)
    }
}

/// `H = ½ gⁱʲ pᵢ pⱼ + V(q, S)`. `potential` is evaluated on `(q, S) ∈ ℝⁿ⁺¹`.
///
/// Indefinite `gⁱʲ` is accepted; the family then records that the second
/// law is not guaranteed.
pub fn quadratic_metric_system(
    g_inv: &[Vec<f64>],
    potential: Arc<dyn ScalarField>,
) -> Result<ModelSpec> {
    let n = g_inv.len();
    if g_inv.iter().any(|row| row.len() != n) {
        return Err(Error::Parameter {
            name: "g_inv",
            reason: "must be a square matrix".into(),
        });
    }
    let flat: Vec<f64> = g_inv.iter().flatten().copied().collect();
    if !is_symmetric(n, &flat) {
        return Err(Error::Parameter {
            name: "g_inv",
            reason: "must be symmetric".into(),
        });
    }
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &flat));
    let second_law_guaranteed = eig.eigenvalues.iter().all(|&l| l >= 0.0);
    Ok(ModelSpec {
        name: "quadratic-metric".into(),
        layout: Layout::simple(n),
        energy: Arc::new(MetricEnergy {
            n,
            g_inv: flat,
            potential,
        }),
        conductivity: None,
        family: ModelFamily::QuadraticMetric {
            second_law_guaranteed,
        },
    })
}

struct ThermoSpringEnergy {
    layout: Layout,
    masses: [f64; 2],
    capacities: [f64; 2],
    potential: Arc<dyn Potential>,
}

impl ThermoSpringEnergy {
    fn positions(&self, x: &[f64]) -> Vec<f64> {
        let mut q = x[self.layout.q_range(0)].to_vec();
        q.extend_from_slice(&x[self.layout.q_range(1)]);
        q
    }
}

impl ScalarField for ThermoSpringEnergy {
    fn value(&self, x: &[f64]) -> f64 {
        let mut h = self.potential.value(&self.positions(x));
        for a in 0..2 {
            let p = &x[self.layout.p_range(a)];
            let c = self.capacities[a];
            h += dot(p, p) / (2.0 * self.masses[a]) + c * (x[self.layout.s_index(a)] / c).exp();
        }
        h
    }

    fn gradient(&self, x: &[f64]) -> Covector {
        let mut g = Covector::zeros(x.len());
        let dv = self.potential.gradient(&self.positions(x));
        let n1 = self.layout.mechanical_dims()[0];
        for a in 0..2 {
            let dv_a = if a == 0 { &dv[..n1] } else { &dv[n1..] };
            for (iq, d) in self.layout.q_range(a).zip(dv_a) {
                g[iq] = *d;
            }
            for ip in self.layout.p_range(a) {
                g[ip] = x[ip] / self.masses[a];
            }
            let s = self.layout.s_index(a);
            g[s] = (x[s] / self.capacities[a]).exp();
        }
        g
    }

    fn partial(&self, x: &[f64], i: usize) -> f64 {
        match self.layout.s_indices().iter().position(|&s| s == i) {
            Some(a) => (x[i] / self.capacities[a]).exp(),
            None => self.gradient(x)[i],
        }
    }
}

/// Parameters of [`thermo_springs`].
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoSpringParams {
    pub masses: [f64; 2],
    pub capacities: [f64; 2],
    pub conductivity: f64,
    /// Mechanical dimensions `(dim Q_a, dim Q_b)`.
    pub dims: (usize, usize),
}

impl Default for ThermoSpringParams {
    fn default() -> Self {
        Self {
            masses: [1.0, 1.0],
            capacities: [1.0, 1.0],
            conductivity: 1.0,
            dims: (1, 1),
        }
    }
}

/// Two particles at rest exchanging heat, `H = c_a e^{S_a/c_a} + c_b e^{S_b/c_b}`.
pub fn thermo_particles(c_a: f64, c_b: f64, k: f64) -> Result<ModelSpec> {
    let params = ThermoSpringParams {
        masses: [1.0, 1.0],
        capacities: [c_a, c_b],
        conductivity: k,
        dims: (0, 0),
    };
    let mut model = thermo_springs(&params, Arc::new(QuadraticPotential::zero(0)))?;
    model.name = "thermo-particles".into();
    Ok(model)
}

/// Two thermo-springs coupled through `V(q_a, q_b)` and Fourier heat exchange.
/// `potential` acts on the concatenated positions `(q_a, q_b)`.
pub fn thermo_springs(params: &ThermoSpringParams, potential: Arc<dyn Potential>) -> Result<ModelSpec> {
    positive("m_a", params.masses[0])?;
    positive("m_b", params.masses[1])?;
    positive("c_a", params.capacities[0])?;
    positive("c_b", params.capacities[1])?;
    non_negative("k", params.conductivity)?;
    let (n1, n2) = params.dims;
    check_dim(n1 + n2, potential.dim())?;
    let layout = Layout::composed(n1, n2);
    Ok(ModelSpec {
        name: "thermo-springs".into(),
        layout: layout.clone(),
        energy: Arc::new(ThermoSpringEnergy {
            layout,
            masses: params.masses,
            capacities: params.capacities,
            potential,
        }),
        conductivity: Some(params.conductivity),
        family: ModelFamily::ThermoSprings {
            masses: params.masses,
            capacities: params.capacities,
        },
    })
}

/// Entropy giving temperature `t` for heat capacity `c`, inverting `T = e^{S/c}`.
pub fn entropy_for_temperature(c: f64, t: f64) -> f64 {
    c * t.ln()
}
