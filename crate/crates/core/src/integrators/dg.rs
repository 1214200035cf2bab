use nalgebra::{DMatrix, DVector};

use super::{Solver, StepperConfig};
use crate::disc_grad::{discrete_gradient, DiscreteGradientKind};
use crate::error::{check_dim, positive, Error, Result};
use crate::state::State;
use crate::systems::ModelSpec;

/// Fixed-point iterations allowed to stall before switching to Newton.
const STALL_LIMIT: usize = 10;

/// Result of one implicit step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub state: State,
    pub iterations: usize,
    /// `‖F‖∞` of the last residual evaluated.
    pub residual: f64,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

struct Residual<'a> {
    model: &'a ModelSpec,
    kind: DiscreteGradientKind,
    x: &'a [f64],
    h: f64,
}

impl Residual<'_> {
    /// `F(y) = y − x − h M((x + y)/2) ∇̄H(x, y)`.
    fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mid: Vec<f64> = self.x.iter().zip(y).map(|(a, b)| 0.5 * (a + b)).collect();
        let m = self.model.structure_matrix(&mid)?;
        let g = discrete_gradient(self.kind, self.model.energy_field(), self.x, y)?;
        let v = m.sharp(&g);
        Ok(y.iter()
            .zip(self.x)
            .zip(v.iter())
            .map(|((yi, xi), vi)| yi - xi - self.h * vi)
            .collect())
    }

    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = y.len();
        let mut jac = DMatrix::zeros(n, n);
        let mut z = y.to_vec();
        for j in 0..n {
            let d = 1e-7 * y[j].abs().max(1.0);
            z[j] = y[j] + d;
            let fp = self.eval(&z)?;
            z[j] = y[j] - d;
            let fm = self.eval(&z)?;
            z[j] = y[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * d);
            }
        }
        Ok(jac)
    }
}

/// One step of the discrete-gradient scheme
/// `(x₁ − x₀)/h = M((x₀ + x₁)/2) ∇̄H(x₀, x₁)`.
///
/// Convergence is declared when `‖F(x₁)‖∞ ≤ tol_solve`, or when the residual
/// reaches the rounding floor of its own evaluation (see [`super::residual_floor`]).
pub fn dg_step(
    model: &ModelSpec,
    kind: DiscreteGradientKind,
    x: &[f64],
    cfg: &StepperConfig,
) -> Result<Step> {
    model.layout().check(x)?;
    cfg.validate()?;
    let f = Residual {
        model,
        kind,
        x,
        h: cfg.h,
    };
    let converged = |r: f64, y: &[f64]| r <= cfg.tol_solve.max(super::residual_floor(norm_inf(y)));

    // explicit Euler predictor
    let v0 = model.evolution(x)?;
    let mut y: Vec<f64> = x.iter().zip(v0.iter()).map(|(a, v)| a + cfg.h * v).collect();
    let mut r = f.eval(&y)?;
    let mut r_norm = norm_inf(&r);
    let mut iterations = 0;
    let mut stalls = 0;

    if cfg.solver == Solver::FixedPoint {
        while iterations < cfg.max_iter && stalls < STALL_LIMIT {
            iterations += 1;
            // y ← x + h M ∇̄H  is  y ← y − F(y)
            let y_next: Vec<f64> = y.iter().zip(&r).map(|(a, b)| a - b).collect();
            if converged(r_norm, &y_next) {
                return Ok(Step {
                    state: State::new(y_next),
                    iterations,
                    residual: r_norm,
                });
            }
            let r_next = f.eval(&y_next)?;
            let n_next = norm_inf(&r_next);
            if n_next.is_nan() || n_next >= r_norm {
                stalls += 1;
            }
            y = y_next;
            r = r_next;
            r_norm = n_next;
        }
    }

    while iterations < cfg.max_iter {
        iterations += 1;
        if converged(r_norm, &y) {
            return Ok(Step {
                state: State::new(y),
                iterations,
                residual: r_norm,
            });
        }
        let jac = f.jacobian(&y)?;
        let rhs = -DVector::from_column_slice(&r);
        let delta = jac.lu().solve(&rhs).ok_or(Error::NoConvergence {
            iterations,
            residual: r_norm,
        })?;
        // backtracking on ‖F‖∞
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = y.iter().zip(delta.iter()).map(|(a, d)| a + t * d).collect();
            let r_trial = f.eval(&trial)?;
            let n_trial = norm_inf(&r_trial);
            if n_trial <= (1.0 - 1e-4 * t) * r_norm || t < 1.0 / 1024.0 {
                y = trial;
                r = r_trial;
                r_norm = n_trial;
                break;
            }
            t *= 0.5;
        }
    }
    if converged(r_norm, &y) {
        return Ok(Step {
            state: State::new(y),
            iterations,
            residual: r_norm,
        });
    }
    Err(Error::NoConvergence {
        iterations,
        residual: r_norm,
    })
}

/// The discrete-gradient scheme for `H = p²/2 + q²/2 + γS`, solved in closed form.
pub fn dg_step_closed_form_dho(gamma: f64, h: f64, x: &[f64]) -> Result<State> {
    check_dim(3, x.len())?;
    positive("gamma", gamma)?;
    positive("h", h)?;
    let (q0, p0, s0) = (x[0], x[1], x[2]);
    let g = gamma;
    let den = 2.0 * g * h + h * h + 4.0;
    let q1 = (2.0 * g * h * q0 - h * h * q0 + 4.0 * h * p0 + 4.0 * q0) / den;
    let p1 = -(2.0 * g * h * p0 + h * h * p0 + 4.0 * h * q0 - 4.0 * p0) / den;
    let h2 = h * h;
    let s1 = (s0 * h2 * h2
        + (4.0 * s0 * g + 4.0 * q0 * q0) * h2 * h
        + (4.0 * s0 * g * g - 16.0 * p0 * q0 + 8.0 * s0) * h2
        + (16.0 * s0 * g + 16.0 * p0 * p0) * h
        + 16.0 * s0)
        / (den * den);
    Ok(State::new(vec![q1, p1, s1]))
}
