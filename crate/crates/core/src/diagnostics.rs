//! Post-processing of trajectories: thermodynamic law audits, residuals of the
//! continuous equations, convergence orders and equilibration metrics.

use serde::Serialize;

use crate::error::{check_dim, positive, Error, Result};
use crate::integrators::{exact_dho, simulate, Method, StepperConfig, Trajectory};
use crate::lagrangian::MechanicalLagrangian;
use crate::state::{dot, State};
use crate::systems::ModelSpec;

/// Outcome of [`audit_laws`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawReport {
    pub steps: usize,
    /// `max_k |H_k − H_0|`.
    pub max_energy_drift: f64,
    /// `min_k (S_{k+1} − S_k)` of the total entropy; `None` for a single state.
    pub min_entropy_increment: Option<f64>,
    /// Discrete first-law residual per step.
    pub first_law_residuals: Vec<f64>,
    pub max_first_law_residual: f64,
    /// `temperatures[α][k]`.
    pub temperatures: Vec<Vec<f64>>,
    pub tol_energy: f64,
    pub tol_entropy: f64,
    /// Tolerance actually applied to the first-law residual.
    pub tol_first_law: f64,
    pub energy_ok: bool,
    pub entropy_ok: bool,
    pub first_law_ok: bool,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.energy_ok && self.entropy_ok && self.first_law_ok
    }
}

/// Tolerances for [`audit_laws`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditTolerances {
    pub energy: f64,
    pub entropy: f64,
    /// Bound on the first-law residual. `None` scales `energy` by `max(1, max_k ‖x_k‖∞)`,
    /// which suits models whose midpoint residual vanishes identically.
    pub first_law: Option<f64>,
}

impl AuditTolerances {
    pub fn new(energy: f64, entropy: f64) -> Self {
        AuditTolerances {
            energy,
            entropy,
            first_law: None,
        }
    }

    pub fn with_first_law(self, tol: f64) -> Self {
        AuditTolerances {
            first_law: Some(tol),
            ..self
        }
    }
}

impl Default for AuditTolerances {
    fn default() -> Self {
        AuditTolerances::new(1e-9, 1e-12)
    }
}

/// Audits the first and second laws along `traj`.
///
/// Energy passes when the drift is at most `tol.energy`, entropy when every
/// increment of the total entropy is at least `−tol.entropy`. The first-law
/// residual is `ΔS − p̄·Δq` on simple models and `ΔH − ∇H(x̄)·Δx` on composed
/// ones, with `x̄` the midpoint of consecutive states. On composed models with
/// non-quadratic energy the midpoint rule leaves an `O(h³)` residual per step.
pub fn audit_laws(traj: &Trajectory, model: &ModelSpec, tol: &AuditTolerances) -> LawReport {
    let (tol_energy, tol_entropy) = (tol.energy, tol.entropy);
    let layout = model.layout();
    let h0 = traj.energy.first().copied().unwrap_or(0.0);
    let max_energy_drift = traj.energy.iter().fold(0.0_f64, |m, e| m.max((e - h0).abs()));

    let min_entropy_increment = traj
        .total_entropy
        .windows(2)
        .map(|w| w[1] - w[0])
        .reduce(f64::min);

    let first_law_residuals: Vec<f64> = traj
        .states
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let dx: Vec<f64> = a.iter().zip(b.iter()).map(|(u, v)| v - u).collect();
            if model.is_composed() {
                let grad = model.gradient(&a.midpoint(b));
                model.energy(b) - model.energy(a) - dot(&grad, &dx)
            } else {
                let s = layout.s_index(0);
                let power: f64 = layout
                    .canonical_pairs()
                    .into_iter()
                    .map(|(iq, ip)| 0.5 * (a[ip] + b[ip]) * dx[iq])
                    .sum();
                dx[s] - power
            }
        })
        .collect();
    let max_first_law_residual = first_law_residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));

    let scale = traj.states.iter().fold(1.0_f64, |m, x| m.max(x.norm_inf()));
    let tol_first_law = tol.first_law.unwrap_or(tol_energy * scale);

    let n_thermal = layout.thermal_count();
    let temperatures = (0..n_thermal)
        .map(|a| traj.temperatures.iter().map(|t| t[a]).collect())
        .collect();

    LawReport {
        steps: traj.len().saturating_sub(1),
        max_energy_drift,
        min_entropy_increment,
        max_first_law_residual,
        first_law_residuals,
        temperatures,
        tol_energy,
        tol_entropy,
        tol_first_law,
        energy_ok: max_energy_drift <= tol_energy,
        entropy_ok: min_entropy_increment.is_none_or(|d| d >= -tol_entropy),
        first_law_ok: max_first_law_residual <= tol_first_law,
    }
}

/// Residuals of the thermodynamic Herglotz equations along a sampled path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HerglotzResidual {
    /// `max |m q̈ + ∇V(q) + γ m q̇|`.
    pub momentum: f64,
    /// `max |Ṡ − m|q̇|²|`.
    pub entropy: f64,
}

impl HerglotzResidual {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.entropy)
    }
}

/// Central-difference residuals of the Herglotz equations of `lagrangian`
/// over the interior nodes of `traj`, sampled with spacing `h`.
///
/// Only `q` and `S` are read from the states; momenta are not used.
pub fn herglotz_residual(
    lagrangian: &MechanicalLagrangian,
    traj: &Trajectory,
    h: f64,
) -> Result<HerglotzResidual> {
    positive("h", h)?;
    if traj.layout.thermal_count() != 1 {
        return Err(Error::Contract("Herglotz residuals need a simple model".into()));
    }
    let n = lagrangian.dim();
    check_dim(2 * n + 1, traj.layout.dim())?;
    if traj.len() < 3 {
        return Err(Error::Contract(format!(
            "need at least 3 states for central differences, got {}",
            traj.len()
        )));
    }
    let m = lagrangian.mass;
    let gamma = lagrangian.gamma;
    let mut out = HerglotzResidual {
        momentum: 0.0,
        entropy: 0.0,
    };
    for w in traj.states.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let q = &b[..n];
        let v: Vec<f64> = (0..n).map(|i| (c[i] - a[i]) / (2.0 * h)).collect();
        let grad_v = lagrangian.potential.gradient(q);
        for i in 0..n {
            let acc = (c[i] - 2.0 * b[i] + a[i]) / (h * h);
            let r = m * acc + grad_v[i] + gamma * m * v[i];
            out.momentum = out.momentum.max(r.abs());
        }
        let s_dot = (c[2 * n] - a[2 * n]) / (2.0 * h);
        out.entropy = out.entropy.max((s_dot - m * dot(&v, &v)).abs());
    }
    Ok(out)
}

/// Reference solution for [`convergence_study`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Oracle {
    /// Closed-form flow of the unit damped oscillator.
    ExactDho { gamma: f64 },
    /// The same method at a hundredth of the smallest step.
    FineReference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "kebab-case")]
pub enum ConvergenceOrder {
    Estimated(f64),
    /// Some error was zero or non-finite, so no slope exists.
    Undefined,
}

impl ConvergenceOrder {
    pub fn value(self) -> Option<f64> {
        match self {
            ConvergenceOrder::Estimated(p) => Some(p),
            ConvergenceOrder::Undefined => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub step_sizes: Vec<f64>,
    /// `‖x_N − x(t_final)‖∞` for each step size.
    pub errors: Vec<f64>,
    pub order: ConvergenceOrder,
}

fn steps_for(h: f64, t_final: f64) -> Result<usize> {
    let n = (t_final / h).round();
    if n < 1.0 || ((n * h - t_final).abs() > 1e-9 * t_final.max(1.0)) {
        return Err(Error::Parameter {
            name: "h_list",
            reason: format!("step {h} does not divide t_final = {t_final}"),
        });
    }
    Ok(n as usize)
}

fn final_state(
    model: &ModelSpec,
    method: &Method,
    x0: &State,
    h: f64,
    t_final: f64,
    cfg: &StepperConfig,
) -> Result<State> {
    let n = steps_for(h, t_final)?;
    let traj = simulate(model, method, x0, &StepperConfig { h, ..*cfg }, n)?;
    if let Some(f) = traj.failure {
        return Err(f.error);
    }
    Ok(traj.states.last().cloned().expect("non-empty trajectory"))
}

/// Global error at `t_final` for each step in `h_list`, and the least-squares
/// slope of `log(error)` against `log(h)`.
pub fn convergence_study(
    model: &ModelSpec,
    method: &Method,
    x0: &State,
    h_list: &[f64],
    t_final: f64,
    oracle: Oracle,
    cfg: &StepperConfig,
) -> Result<ConvergenceReport> {
    if h_list.len() < 2 {
        return Err(Error::Parameter {
            name: "h_list",
            reason: format!("need at least 2 step sizes, got {}", h_list.len()),
        });
    }
    positive("t_final", t_final)?;
    for &h in h_list {
        positive("h", h)?;
    }
    let reference = match oracle {
        Oracle::ExactDho { gamma } => exact_dho(gamma, x0, t_final)?,
        Oracle::FineReference => {
            let h_min = h_list.iter().copied().fold(f64::INFINITY, f64::min);
            final_state(model, method, x0, h_min / 100.0, t_final, cfg)?
        }
    };
    let errors = h_list
        .iter()
        .map(|&h| {
            let x = final_state(model, method, x0, h, t_final, cfg)?;
            Ok(x.iter()
                .zip(reference.iter())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())))
        })
        .collect::<Result<Vec<f64>>>()?;

    let order = if errors.iter().all(|e| *e > 0.0 && e.is_finite()) {
        let xs: Vec<f64> = h_list.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let k = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        if sxx > 0.0 {
            ConvergenceOrder::Estimated(sxy / sxx)
        } else {
            ConvergenceOrder::Undefined
        }
    } else {
        ConvergenceOrder::Undefined
    };
    Ok(ConvergenceReport {
        step_sizes: h_list.to_vec(),
        errors,
        order,
    })
}

/// Approach to thermal equilibrium of a composed trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Equilibration {
    /// `|T₁ − T₂|` at each node.
    pub gap: Vec<f64>,
    pub final_gap: f64,
    pub gap_non_increasing: bool,
    /// `(c_a T_a(0) + c_b T_b(0)) / (c_a + c_b)` when heat capacities are known.
    pub predicted_temperature: Option<f64>,
    /// `max_α |T_α(final) − T∞|`.
    pub final_offset: Option<f64>,
}

pub fn equilibration_metrics(traj: &Trajectory, model: &ModelSpec) -> Result<Equilibration> {
    if !model.is_composed() || traj.layout.thermal_count() != 2 {
        return Err(Error::Contract("equilibration metrics need a composed model".into()));
    }
    let (first, last) = match (traj.temperatures.first(), traj.temperatures.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Contract("empty trajectory".into())),
    };
    let gap: Vec<f64> = traj.temperatures.iter().map(|t| (t[0] - t[1]).abs()).collect();
    let gap_non_increasing = gap.windows(2).all(|w| w[1] <= w[0]);
    let predicted_temperature = model
        .heat_capacities()
        .map(|[ca, cb]| (ca * first[0] + cb * first[1]) / (ca + cb));
    let final_offset = predicted_temperature.map(|t| (last[0] - t).abs().max((last[1] - t).abs()));
    Ok(Equilibration {
        final_gap: *gap.last().expect("non-empty"),
        gap,
        gap_non_increasing,
        predicted_temperature,
        final_offset,
    })
}
