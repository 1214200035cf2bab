//! Randomised invariant suite, deterministic for a given seed.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::disc_grad::{discrete_gradient, DiscreteGradientKind};
use crate::error::{Error, Result};
use crate::field::{central_difference, FnField, QuadraticField, ScalarField};
use crate::geom::{self, BracketKind, Projection};
use crate::integrators::{dg_step, StepperConfig};
use crate::state::{Covector, State, Tangent};
use crate::systems::{
    damped_system, quadratic_metric_system, thermo_particles, thermo_springs, ModelSpec, QuadraticPotential,
    ThermoSpringParams,
};

pub const DEFAULT_SEED: u64 = 20_190_601;

const SAMPLES: usize = 200;

/// Deliberate corruption used to check that the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectedFault {
    /// Adds a non-skew entry to every structure matrix before the skew check.
    StructureMatrix,
}

impl FromStr for InjectedFault {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structure-matrix" | "skew" => Ok(InjectedFault::StructureMatrix),
            other => Err(Error::Unknown {
                what: "fault",
                name: other.into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub samples: usize,
    /// Largest scaled deviation observed.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "selftest seed {}", self.seed)?;
        for c in &self.checks {
            writeln!(
                f,
                "{} {:<34} worst {:.3e} tol {:.1e} ({} samples)",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.worst,
                c.tolerance,
                c.samples
            )?;
        }
        Ok(())
    }
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    samples: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            samples: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, deviation: f64, scale: f64) {
        let d = deviation.abs() / scale.max(1.0);
        // NaN counts as a failure
        self.worst = if d.is_nan() { f64::INFINITY } else { self.worst.max(d) };
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            samples: self.samples,
            worst: self.worst,
            tolerance: self.tolerance,
            passed: self.worst <= self.tolerance,
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Smooth energies on `(q₁, q₂, p₁, p₂, S)` with exact gradients.
pub fn sample_hamiltonians(rng: &mut ChaCha8Rng) -> Vec<(&'static str, Arc<dyn ScalarField>)> {
    let gamma = rng.random_range(0.05..1.0);
    let a = uniform(rng, 25, -1.0, 1.0);
    let b = uniform(rng, 5, -1.0, 1.0);
    vec![
        (
            "damped-oscillator",
            Arc::new(FnField::with_gradient(
                move |x: &[f64]| 0.5 * (x[2] * x[2] + x[3] * x[3] + x[0] * x[0] + x[1] * x[1]) + gamma * x[4],
                move |x: &[f64]| vec![x[0], x[1], x[2], x[3], gamma],
            )),
        ),
        ("quadratic", Arc::new(QuadraticField::new(5, a, b, 0.3))),
        (
            "exponential-entropy",
            Arc::new(FnField::with_gradient(
                |x: &[f64]| 0.5 * (x[2] * x[2] + x[3] * x[3]) + x[4].exp() * (1.0 + x[0] * x[0]),
                |x: &[f64]| {
                    let e = x[4].exp();
                    vec![2.0 * x[0] * e, 0.0, x[2], x[3], e * (1.0 + x[0] * x[0])]
                },
            )),
        ),
        (
            "trigonometric",
            Arc::new(FnField::with_gradient(
                |x: &[f64]| (x[0] * x[3]).sin() + x[4].cos() * x[1] + x[2] * x[2],
                |x: &[f64]| {
                    let c = (x[0] * x[3]).cos();
                    vec![x[3] * c, x[4].cos(), 2.0 * x[2], x[0] * c, -x[4].sin() * x[1]]
                },
            )),
        ),
        (
            "cubic-coupling",
            Arc::new(FnField::with_gradient(
                |x: &[f64]| x[2] * x[3] * x[4] + x[0].powi(3) - x[1] * x[4] * x[4],
                |x: &[f64]| {
                    vec![
                        3.0 * x[0] * x[0],
                        -x[4] * x[4],
                        x[3] * x[4],
                        x[2] * x[4],
                        x[2] * x[3] - 2.0 * x[1] * x[4],
                    ]
                },
            )),
        ),
    ]
}

/// Built-in models exercised by the structural checks.
fn builtin_models() -> Vec<ModelSpec> {
    let mut models = vec![
        damped_system(1.0, 0.1, Arc::new(QuadraticPotential::harmonic(1, 1.0))).expect("valid"),
        damped_system(2.0, 0.3, Arc::new(QuadraticPotential::coupled_springs(1.0, 2.0, 0.5))).expect("valid"),
        thermo_particles(1.0, 2.0, 1.0).expect("valid"),
        thermo_springs(
            &ThermoSpringParams::default(),
            Arc::new(QuadraticPotential::coupled_springs(1.0, 1.0, 0.5)),
        )
        .expect("valid"),
    ];
    let v = FnField::with_gradient(
        |z: &[f64]| 0.5 * z[0] * z[0] + z[1].exp(),
        |z: &[f64]| vec![z[0], z[1].exp()],
    );
    models.push(quadratic_metric_system(&[vec![1.0]], Arc::new(v)).expect("valid"));
    models
}

fn random_state(rng: &mut ChaCha8Rng, model: &ModelSpec) -> State {
    let layout = model.layout();
    let mut x = uniform(rng, layout.dim(), -2.0, 2.0);
    if model.is_composed() {
        // positive, moderate temperatures for e^{S/c}
        for i in layout.s_indices() {
            x[i] = rng.random_range(0.5..3.0);
        }
    }
    State::new(x)
}

fn contact_identities(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut t = Tally::new("contact-identities", 1e-12);
    for (_, h) in sample_hamiltonians(rng) {
        for _ in 0..SAMPLES {
            let x = State::new(uniform(rng, 5, -2.0, 2.0));
            let hv = h.value(&x);
            let dh = h.gradient(&x);
            let scale = (1.0 + norm(&x)) * (1.0 + norm(&dh)) * (1.0 + norm(&dh) + hv.abs());
            let e = geom::evolution_vf(h.as_ref(), &x).expect("odd dimension");
            let xh = geom::hamiltonian_vf(h.as_ref(), &x).expect("odd dimension");
            let r = geom::reeb(&x).expect("odd dimension");
            t.record(geom::contact_form(&x, &e).expect("dims"), scale);
            t.record(geom::contact_form(&x, &xh).expect("dims") + hv, scale);
            t.record(dh.pair(&e), scale);
            t.record(dh.pair(&xh) + dh[4] * hv, scale);
            for i in 0..5 {
                t.record(e[i] - xh[i] - hv * r[i], scale);
            }
            t.samples += 1;
        }
    }
    t.finish()
}

fn bracket_decomposition(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut t = Tally::new("bracket-decomposition", 1e-12);
    let fields = sample_hamiltonians(rng);
    for _ in 0..SAMPLES {
        let x = State::new(uniform(rng, 5, -2.0, 2.0));
        let i = rng.random_range(0..fields.len());
        let j = rng.random_range(0..fields.len());
        let (f, g) = (fields[i].1.as_ref(), fields[j].1.as_ref());
        let (df, dg) = (f.gradient(&x), g.gradient(&x));
        let (fv, gv) = (f.value(&x), g.value(&x));
        let scale = (1.0 + norm(&x)) * (1.0 + norm(&df)) * (1.0 + norm(&dg)) * (1.0 + fv.abs() + gv.abs());
        let b = |k| geom::bracket(k, f, g, &x).expect("dims");
        let lambda = geom::bivector(&x, &df, &dg).expect("dims");
        let liouville = geom::liouville(&x).expect("dims");
        let delta_q = dg[4] * df.pair(&liouville) - df[4] * dg.pair(&liouville);
        let poisson0 = df[2] * dg[0] + df[3] * dg[1] - df[0] * dg[2] - df[1] * dg[3];
        t.record(b(BracketKind::Cartan) - lambda, scale);
        t.record(b(BracketKind::Cartan) - b(BracketKind::Poisson0) - b(BracketKind::DeltaQ), scale);
        t.record(b(BracketKind::DeltaQ) - delta_q, scale);
        t.record(b(BracketKind::Poisson0) - poisson0, scale);
        t.record(b(BracketKind::Jacobi) - (lambda - fv * dg[4] + gv * df[4]), scale);
        for k in BracketKind::ALL {
            t.record(b(k) + geom::bracket(k, g, f, &x).expect("dims"), scale);
        }
        t.samples += 1;
    }
    t.finish()
}

fn projectors(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut t = Tally::new("projectors", 1e-12);
    for _ in 0..SAMPLES {
        let x = State::new(uniform(rng, 5, -2.0, 2.0));
        let v = Tangent::new(uniform(rng, 5, -2.0, 2.0));
        let scale = (1.0 + norm(&x)) * (1.0 + norm(&v));
        let ph = geom::project(&x, &v, Projection::Horizontal).expect("dims");
        let pv = geom::project(&x, &v, Projection::Vertical).expect("dims");
        let phh = geom::project(&x, &ph, Projection::Horizontal).expect("dims");
        t.record(geom::contact_form(&x, &ph).expect("dims"), scale);
        for i in 0..5 {
            t.record(ph[i] + pv[i] - v[i], scale);
            t.record(phh[i] - ph[i], scale);
        }
        t.record(pv[..4].iter().map(|c| c.abs()).sum::<f64>(), scale);
        t.samples += 1;
    }
    t.finish()
}

fn structure_matrix_skew(rng: &mut ChaCha8Rng, fault: Option<InjectedFault>) -> CheckResult {
    let mut t = Tally::new("structure-matrix-skew-symmetry", 0.0);
    for model in builtin_models() {
        for _ in 0..SAMPLES / 10 {
            let x = random_state(rng, &model);
            let mut m = model.structure_matrix(&x).expect("admissible state");
            if fault == Some(InjectedFault::StructureMatrix) {
                m.inject_entry(0, 1, 1.0);
            }
            let a = m.as_matrix();
            let worst = (a + a.transpose()).amax();
            t.record(worst, 1.0);
            t.samples += 1;
        }
    }
    t.finish()
}

fn discrete_gradient_identities(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut t = Tally::new("discrete-gradient-identities", 1e-10);
    let fields = sample_hamiltonians(rng);
    for _ in 0..SAMPLES {
        let x = uniform(rng, 5, -1.5, 1.5);
        let y: Vec<f64> = x.iter().map(|xi| xi + rng.random_range(-0.5..0.5)).collect();
        let (_, h) = &fields[rng.random_range(0..fields.len())];
        let dh = h.value(&y) - h.value(&x);
        for kind in DiscreteGradientKind::all() {
            let g = discrete_gradient(kind, h.as_ref(), &x, &y).expect("dims");
            let lhs: f64 = (0..5).map(|i| g[i] * (y[i] - x[i])).sum();
            let scale = dh.abs() + g.iter().zip(&x).zip(&y).map(|((gi, a), b)| (gi * (b - a)).abs()).sum::<f64>();
            t.record(lhs - dh, scale);
            let g0 = discrete_gradient(kind, h.as_ref(), &x, &x).expect("dims");
            let exact = h.gradient(&x);
            for i in 0..5 {
                t.record(g0[i] - exact[i], 1.0 + exact[i].abs());
            }
        }
        t.samples += 1;
    }
    t.finish()
}

/// Quadratic composed energy with positive temperatures on the sampled box.
fn quadratic_composed(rng: &mut ChaCha8Rng) -> (ModelSpec, f64) {
    let k = rng.random_range(0.1..2.0);
    let c1 = rng.random_range(0.5..2.0);
    let c2 = rng.random_range(0.5..2.0);
    let coupling = rng.random_range(0.0..0.1);
    // layout (q1, p1, S1, q2, p2, S2)
    let mut a = vec![0.0; 36];
    for i in [0, 1, 3, 4] {
        a[i * 7] = 1.0;
    }
    a[2 * 7] = 1.0 / c1;
    a[5 * 7] = 1.0 / c2;
    a[2 * 6 + 5] = coupling;
    a[5 * 6 + 2] = coupling;
    let h = QuadraticField::new(6, a, vec![0.0; 6], 0.0);
    (ModelSpec::composed("quadratic-composed", 1, 1, k, Arc::new(h)).expect("k ≥ 0"), k)
}

fn entropy_lemma(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut t = Tally::new("composed-entropy-lemma", 1e-10);
    let cfg = StepperConfig::default();
    for _ in 0..SAMPLES / 4 {
        let (model, k) = quadratic_composed(rng);
        let mut x = uniform(rng, 6, -1.0, 1.0);
        x[2] = rng.random_range(1.0..3.0);
        x[5] = rng.random_range(1.0..3.0);
        let step = match dg_step(&model, DiscreteGradientKind::gonzalez(), &x, &cfg) {
            Ok(s) => s,
            Err(_) => {
                t.record(f64::INFINITY, 1.0);
                continue;
            }
        };
        let y = &step.state;
        let mid: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
        let temps = model.temperatures(&mid).expect("dims");
        let (t1, t2) = (temps[0], temps[1]);
        let predicted = cfg.h * k * (t2 - t1) * (t2 - t1) / (t1 * t2);
        let ds = (y[2] + y[5]) - (x[2] + x[5]);
        t.record(ds - predicted, 1.0);
        t.samples += 1;
    }
    t.finish()
}

fn gradient_check(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut t = Tally::new("analytic-gradients", 1e-6);
    for model in builtin_models() {
        for _ in 0..SAMPLES / 10 {
            let x = random_state(rng, &model);
            let exact: Covector = model.gradient(&x);
            let fd = central_difference(|z| model.energy(z), &x);
            for i in 0..x.len() {
                t.record(exact[i] - fd[i], 1.0 + exact[i].abs());
            }
            t.samples += 1;
        }
    }
    t.finish()
}

/// Runs every check with a generator seeded by `seed`.
pub fn run_selftest(seed: u64, fault: Option<InjectedFault>) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        contact_identities(&mut rng),
        bracket_decomposition(&mut rng),
        projectors(&mut rng),
        structure_matrix_skew(&mut rng, fault),
        discrete_gradient_identities(&mut rng),
        entropy_lemma(&mut rng),
        gradient_check(&mut rng),
    ];
    SelftestReport { seed, checks }
}
