use crate::error::Result;
use crate::state::State;
use crate::systems::ModelSpec;

/// Classical fourth-order Runge–Kutta step on `ẋ = M(x)∇H(x)`.
pub fn rk4_step(model: &ModelSpec, x: &[f64], h: f64) -> Result<State> {
    model.layout().check(x)?;
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect() };
    let k1 = model.evolution(x)?;
    let k2 = model.evolution(&axpy(0.5 * h, &k1))?;
    let k3 = model.evolution(&axpy(0.5 * h, &k2))?;
    let k4 = model.evolution(&axpy(h, &k3))?;
    Ok(State::new(
        (0..x.len())
            .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect(),
    ))
}
