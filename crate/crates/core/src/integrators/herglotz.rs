use nalgebra::{DMatrix, DVector};

use super::StepperConfig;
use crate::error::{check_dim, Error, Result};
use crate::lagrangian::DiscreteLagrangian;
use crate::state::dot;

#[derive(Clone, Debug, PartialEq)]
pub struct HerglotzStep {
    pub q_next: Vec<f64>,
    /// Entropy at the current node.
    pub s_cur: f64,
    pub iterations: usize,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Newton on `r(z) = 0` with a central-difference Jacobian. `scale` is the
/// magnitude of the terms in `r`, used for the rounding floor.
fn newton(
    r: impl Fn(&[f64]) -> Vec<f64>,
    guess: Vec<f64>,
    scale: f64,
    cfg: &StepperConfig,
) -> Result<(Vec<f64>, usize)> {
    let n = guess.len();
    let tol = cfg.tol_solve.max(super::residual_floor(scale));
    let mut z = guess;
    let mut res = r(&z);
    for it in 0..cfg.max_iter {
        let res_norm = norm_inf(&res);
        if res_norm <= tol {
            return Ok((z, it));
        }
        let mut jac = DMatrix::zeros(n, n);
        let mut w = z.clone();
        for j in 0..n {
            let d = 1e-6 * z[j].abs().max(1.0);
            w[j] = z[j] + d;
            let fp = r(&w);
            w[j] = z[j] - d;
            let fm = r(&w);
            w[j] = z[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * d);
            }
        }
        let delta = jac
            .lu()
            .solve(&-DVector::from_column_slice(&res))
            .ok_or(Error::NoConvergence {
                iterations: it + 1,
                residual: res_norm,
            })?;
        for (zi, di) in z.iter_mut().zip(delta.iter()) {
            *zi += di;
        }
        res = r(&z);
        // a zero update means the residual has hit its rounding floor
        if norm_inf(delta.as_slice()) <= f64::EPSILON * norm_inf(&z).max(1.0) && norm_inf(&res) <= 1e3 * tol {
            return Ok((z, it + 1));
        }
    }
    let res_norm = norm_inf(&res);
    if res_norm <= tol {
        Ok((z, cfg.max_iter))
    } else {
        Err(Error::NoConvergence {
            iterations: cfg.max_iter,
            residual: res_norm,
        })
    }
}

/// One step of the discrete Herglotz scheme.
///
/// The entropy update `S₁ = S₀ + (q₁ − q₀)·D₂L_d(q₀, q₁, S₀)` is explicit, so
/// `S₁` is computed first; `q₂` then solves
/// `D₁L_d(q₁, q₂, S₁) + (1 + D_S L_d(q₁, q₂, S₁))·D₂L_d(q₀, q₁, S₀) = 0`
/// by Newton from `2q₁ − q₀`.
pub fn herglotz_step(
    ld: &dyn DiscreteLagrangian,
    q_prev: &[f64],
    q_cur: &[f64],
    s_prev: f64,
    cfg: &StepperConfig,
) -> Result<HerglotzStep> {
    let n = ld.dim();
    check_dim(n, q_prev.len())?;
    check_dim(n, q_cur.len())?;
    cfg.validate()?;

    let p_cur = ld.d2(q_prev, q_cur, s_prev);
    let dq: Vec<f64> = q_prev.iter().zip(q_cur).map(|(a, b)| b - a).collect();
    let s_cur = s_prev + dot(&dq, &p_cur);

    let residual = |q_next: &[f64]| -> Vec<f64> {
        let d1 = ld.d1(q_cur, q_next, s_cur);
        let factor = 1.0 + ld.ds(q_cur, q_next, s_cur);
        d1.iter().zip(&p_cur).map(|(a, p)| a + factor * p).collect()
    };
    let guess: Vec<f64> = q_prev.iter().zip(q_cur).map(|(a, b)| 2.0 * b - a).collect();
    let (q_next, iterations) = newton(residual, guess, norm_inf(&p_cur), cfg)?;
    Ok(HerglotzStep {
        q_next,
        s_cur,
        iterations,
    })
}

/// Momentum at the first node, `p₀ = −D₁L_d(q₀, q₁, S₀) / (1 + D_S L_d(q₀, q₁, S₀))`.
pub fn herglotz_initial_momentum(ld: &dyn DiscreteLagrangian, q0: &[f64], q1: &[f64], s0: f64) -> Vec<f64> {
    let factor = 1.0 + ld.ds(q0, q1, s0);
    ld.d1(q0, q1, s0).into_iter().map(|d| -d / factor).collect()
}

/// Recovers `q₁` from `(q₀, p₀, S₀)` by inverting [`herglotz_initial_momentum`].
pub fn herglotz_second_point(
    ld: &dyn DiscreteLagrangian,
    q0: &[f64],
    p0: &[f64],
    s0: f64,
    cfg: &StepperConfig,
) -> Result<(Vec<f64>, usize)> {
    check_dim(ld.dim(), q0.len())?;
    check_dim(ld.dim(), p0.len())?;
    let residual = |q1: &[f64]| -> Vec<f64> {
        herglotz_initial_momentum(ld, q0, q1, s0)
            .iter()
            .zip(p0)
            .map(|(a, b)| a - b)
            .collect()
    };
    let guess: Vec<f64> = q0.iter().zip(p0).map(|(q, p)| q + cfg.h * p).collect();
    newton(residual, guess, norm_inf(p0), cfg)
}
