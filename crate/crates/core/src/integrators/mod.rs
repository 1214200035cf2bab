//! Time steppers and trajectory generation.
//!
//! - [`dg_step`]: the implicit discrete-gradient scheme
//!   `(x₁ − x₀)/h = M((x₀ + x₁)/2) ∇̄H(x₀, x₁)` on `Λ` or `Λ_K`.
//! - [`dg_step_closed_form_dho`]: the same scheme solved by hand for the
//!   unit damped oscillator.
//! - [`herglotz_step`]: the two-step discrete Herglotz scheme.
//! - [`rk4_step`]: classical Runge–Kutta on `ẋ = M(x)∇H(x)`, as a reference.

mod dg;
mod exact;
mod herglotz;
mod rk4;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::disc_grad::DiscreteGradientKind;
use crate::error::{Error, Result};
use crate::lagrangian::{DiscreteLagrangian, MidpointDiscreteLagrangian};
use crate::state::{Layout, State};
use crate::systems::ModelSpec;

pub use dg::{dg_step, dg_step_closed_form_dho, Step};
pub use exact::exact_dho;
pub use herglotz::{herglotz_initial_momentum, herglotz_second_point, herglotz_step, HerglotzStep};
pub use rk4::rk4_step;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Fixed-point iteration, handing over to damped Newton when it stops contracting.
    FixedPoint,
    /// Damped Newton from the first iteration.
    Newton,
}

impl FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-point" | "fixed_point" => Ok(Solver::FixedPoint),
            "newton" => Ok(Solver::Newton),
            other => Err(Error::Unknown {
                what: "solver",
                name: other.into(),
            }),
        }
    }
}

/// Smallest residual that can be resolved when the terms of `F` have
/// magnitude `scale`.
pub(crate) fn residual_floor(scale: f64) -> f64 {
    8.0 * f64::EPSILON * scale.max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub h: f64,
    pub solver: Solver,
    /// Absolute tolerance on the implicit residual `‖F‖∞`.
    pub tol_solve: f64,
    pub max_iter: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            h: 0.1,
            solver: Solver::FixedPoint,
            tol_solve: 1e-12,
            max_iter: 50,
        }
    }
}

impl StepperConfig {
    pub fn with_step(h: f64) -> Self {
        Self {
            h,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::error::positive("h", self.h)?;
        crate::error::positive("tol_solve", self.tol_solve)?;
        if self.max_iter == 0 {
            return Err(Error::Parameter {
                name: "max_iter",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Method {
    DiscreteGradient(DiscreteGradientKind),
    /// Discrete Herglotz with the midpoint discrete Lagrangian. Without `q1`
    /// the second point is recovered from the initial momentum.
    Herglotz { q1: Option<Vec<f64>> },
    Rk4,
    DhoClosedForm,
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::DiscreteGradient(kind) => format!("dg:{kind}"),
            Method::Herglotz { .. } => "herglotz".into(),
            Method::Rk4 => "rk4".into(),
            Method::DhoClosedForm => "dho-closed-form".into(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "herglotz" => Ok(Method::Herglotz { q1: None }),
            "rk4" => Ok(Method::Rk4),
            "dho-closed-form" => Ok(Method::DhoClosedForm),
            _ => match s.strip_prefix("dg:") {
                Some(kind) => Ok(Method::DiscreteGradient(kind.parse()?)),
                None => Err(Error::Unknown {
                    what: "method",
                    name: s.into(),
                }),
            },
        }
    }
}

/// A step that could not be completed.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFailure {
    /// Index of the step that failed (the state it started from).
    pub step: usize,
    pub error: Error,
}

/// States on a uniform time grid with diagnostics recorded at each node.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub layout: Layout,
    pub method: String,
    pub h: f64,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub energy: Vec<f64>,
    pub total_entropy: Vec<f64>,
    pub temperatures: Vec<Vec<f64>>,
    /// Solver iterations spent producing each state (0 for the initial state).
    pub iterations: Vec<usize>,
    pub failure: Option<StepFailure>,
}

impl Trajectory {
    fn new(model: &ModelSpec, method: &Method, h: f64) -> Self {
        Self {
            layout: model.layout().clone(),
            method: method.name(),
            h,
            times: Vec::new(),
            states: Vec::new(),
            energy: Vec::new(),
            total_entropy: Vec::new(),
            temperatures: Vec::new(),
            iterations: Vec::new(),
            failure: None,
        }
    }

    fn push(&mut self, model: &ModelSpec, state: State, iterations: usize) -> Result<()> {
        let k = self.states.len();
        self.times.push(k as f64 * self.h);
        self.energy.push(model.energy(&state));
        self.total_entropy
            .push(self.layout.s_indices().into_iter().map(|i| state[i]).sum());
        self.temperatures.push(model.temperatures(&state)?);
        self.iterations.push(iterations);
        self.states.push(state);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<&State> {
        self.states.last()
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    /// Entropy of subsystem `α` along the trajectory.
    pub fn entropy_series(&self, subsystem: usize) -> Vec<f64> {
        let i = self.layout.s_index(subsystem);
        self.states.iter().map(|x| x[i]).collect()
    }
}

/// Runs `n_steps` steps of `method` from `x0`.
///
/// Invalid inputs are errors. A step that fails mid-run stops the run and is
/// recorded in [`Trajectory::failure`]; the states computed so far are kept.
pub fn simulate(
    model: &ModelSpec,
    method: &Method,
    x0: &State,
    cfg: &StepperConfig,
    n_steps: usize,
) -> Result<Trajectory> {
    cfg.validate()?;
    model.layout().check(x0)?;
    if !x0.is_finite() {
        return Err(Error::Contract("initial state has non-finite entries".into()));
    }
    let mut traj = Trajectory::new(model, method, cfg.h);

    match method {
        Method::DiscreteGradient(kind) => {
            kind.validate()?;
            traj.push(model, x0.clone(), 0)?;
            run_one_step(model, &mut traj, n_steps, |x| dg_step(model, *kind, x, cfg))?;
        }
        Method::Rk4 => {
            traj.push(model, x0.clone(), 0)?;
            run_one_step(model, &mut traj, n_steps, |x| {
                Ok(Step {
                    state: rk4_step(model, x, cfg.h)?,
                    iterations: 0,
                    residual: 0.0,
                })
            })?;
        }
        Method::DhoClosedForm => {
            let gamma = model.unit_oscillator_gamma().ok_or_else(|| {
                Error::Contract("the closed-form scheme needs the unit damped oscillator".into())
            })?;
            traj.push(model, x0.clone(), 0)?;
            run_one_step(model, &mut traj, n_steps, |x| {
                Ok(Step {
                    state: dg_step_closed_form_dho(gamma, cfg.h, x)?,
                    iterations: 0,
                    residual: 0.0,
                })
            })?;
        }
        Method::Herglotz { q1 } => {
            let lagrangian = model.lagrangian().ok_or_else(|| {
                Error::Contract("the Herglotz scheme needs a damped mechanical model".into())
            })?;
            let ld = MidpointDiscreteLagrangian::new(lagrangian, cfg.h);
            run_herglotz(model, &ld, x0, q1.as_deref(), cfg, n_steps, &mut traj)?;
        }
    }
    Ok(traj)
}

fn run_one_step(
    model: &ModelSpec,
    traj: &mut Trajectory,
    n_steps: usize,
    mut step: impl FnMut(&State) -> Result<Step>,
) -> Result<()> {
    for k in 0..n_steps {
        let x = traj.states.last().expect("trajectory starts non-empty");
        match step(x).and_then(|s| {
            if s.state.is_finite() {
                Ok(s)
            } else {
                Err(Error::Contract("step produced non-finite state".into()))
            }
        }) {
            Ok(s) => traj.push(model, s.state, s.iterations)?,
            Err(error) => {
                traj.failure = Some(StepFailure { step: k, error });
                break;
            }
        }
    }
    Ok(())
}

fn run_herglotz(
    model: &ModelSpec,
    ld: &dyn DiscreteLagrangian,
    x0: &State,
    q1: Option<&[f64]>,
    cfg: &StepperConfig,
    n_steps: usize,
    traj: &mut Trajectory,
) -> Result<()> {
    let n = ld.dim();
    let q0 = x0[..n].to_vec();
    let s0 = x0[2 * n];
    let (q1, iters) = match q1 {
        Some(q1) => {
            crate::error::check_dim(n, q1.len())?;
            (q1.to_vec(), 0)
        }
        None => herglotz_second_point(ld, &q0, &x0[n..2 * n], s0, cfg)?,
    };
    let p0 = herglotz_initial_momentum(ld, &q0, &q1, s0);
    let mut first = q0.clone();
    first.extend(p0);
    first.push(s0);
    traj.push(model, State::new(first), 0)?;
    if n_steps == 0 {
        return Ok(());
    }

    let (mut q_prev, mut q_cur, mut s_prev) = (q0, q1, s0);
    let mut pending_iters = iters;
    for k in 0..n_steps {
        // node k+1 from (q_k, q_{k+1}, S_k)
        let p_cur = ld.d2(&q_prev, &q_cur, s_prev);
        let s_cur = s_prev + crate::state::dot(&(0..n).map(|i| q_cur[i] - q_prev[i]).collect::<Vec<_>>(), &p_cur);
        let mut x = q_cur.clone();
        x.extend(&p_cur);
        x.push(s_cur);
        traj.push(model, State::new(x), pending_iters)?;
        if k + 1 == n_steps {
            break;
        }
        match herglotz_step(ld, &q_prev, &q_cur, s_prev, cfg) {
            Ok(step) => {
                pending_iters = step.iterations;
                q_prev = std::mem::replace(&mut q_cur, step.q_next);
                s_prev = step.s_cur;
            }
            Err(error) => {
                traj.failure = Some(StepFailure { step: k + 1, error });
                break;
            }
        }
    }
    Ok(())
}
