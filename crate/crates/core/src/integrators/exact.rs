use crate::error::{check_dim, Error, Result};
use crate::state::State;

/// Exact flow of `H = p²/2 + q²/2 + γS` under the evolution field, for `0 < γ < 2`.
///
/// `q, p` follow the underdamped oscillator `q̈ + γq̇ + q = 0`; `S` follows from
/// conservation of `H`.
pub fn exact_dho(gamma: f64, x0: &[f64], t: f64) -> Result<State> {
    check_dim(3, x0.len())?;
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::Parameter {
            name: "gamma",
            reason: format!("closed form needs an underdamped oscillator, 0 < γ < 2, got {gamma}"),
        });
    }
    let (q0, p0, s0) = (x0[0], x0[1], x0[2]);
    let omega = (1.0 - 0.25 * gamma * gamma).sqrt();
    let decay = (-0.5 * gamma * t).exp();
    let a = q0;
    let b = (p0 + 0.5 * gamma * q0) / omega;
    let (sin, cos) = (omega * t).sin_cos();
    let q = decay * (a * cos + b * sin);
    let p = decay * ((b * omega - 0.5 * gamma * a) * cos - (a * omega + 0.5 * gamma * b) * sin);
    let s = s0 + (0.5 * (p0 * p0 + q0 * q0) - 0.5 * (p * p + q * q)) / gamma;
    Ok(State::new(vec![q, p, s]))
}
