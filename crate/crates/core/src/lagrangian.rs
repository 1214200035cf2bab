//! Contact Lagrangians `L(q, q̇, S) = ½m|q̇|² − V(q) − γS` and their discretisations.

use std::sync::Arc;

use crate::state::{dot, State};
use crate::systems::Potential;

/// A regular mechanical contact Lagrangian with linear entropy dependence.
#[derive(Clone)]
pub struct MechanicalLagrangian {
    pub mass: f64,
    pub gamma: f64,
    pub potential: Arc<dyn Potential>,
}

impl MechanicalLagrangian {
    pub fn new(mass: f64, gamma: f64, potential: Arc<dyn Potential>) -> Self {
        Self {
            mass,
            gamma,
            potential,
        }
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn value(&self, q: &[f64], v: &[f64], s: f64) -> f64 {
        0.5 * self.mass * dot(v, v) - self.potential.value(q) - self.gamma * s
    }

    /// `∂L/∂q̇ = m q̇`.
    pub fn d_velocity(&self, v: &[f64]) -> Vec<f64> {
        v.iter().map(|vi| self.mass * vi).collect()
    }

    /// `∂L/∂q = −∇V(q)`.
    pub fn d_position(&self, q: &[f64]) -> Vec<f64> {
        self.potential.gradient(q).into_iter().map(|g| -g).collect()
    }

    /// `∂L/∂S = −γ`.
    pub fn d_entropy(&self) -> f64 {
        -self.gamma
    }

    /// `E_L = q̇·∂L/∂q̇ − L`.
    pub fn energy(&self, q: &[f64], v: &[f64], s: f64) -> f64 {
        dot(v, &self.d_velocity(v)) - self.value(q, v, s)
    }

    /// `η_L(δq, δq̇, δS) = δS − (∂L/∂q̇)·δq` at `(q, q̇, S)`.
    pub fn contact_form(&self, v: &[f64], dq: &[f64], ds: f64) -> f64 {
        ds - dot(&self.d_velocity(v), dq)
    }

    /// The Reeb field of `η_L` is `∂/∂S`, since `∂²L/∂q̇∂S = 0`; returned on
    /// `(q, q̇, S)` coordinates.
    pub fn reeb(&self) -> Vec<f64> {
        let n = self.dim();
        let mut r = vec![0.0; 2 * n + 1];
        r[2 * n] = 1.0;
        r
    }

    /// Legendre map `(q, q̇, S) ↦ (q, m q̇, S)`.
    pub fn legendre(&self, q: &[f64], v: &[f64], s: f64) -> State {
        let mut x = q.to_vec();
        x.extend(self.d_velocity(v));
        x.push(s);
        State::new(x)
    }
}

/// A discrete Lagrangian `L_d(q₀, q₁, S₀)` with its partial derivatives.
pub trait DiscreteLagrangian: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, q0: &[f64], q1: &[f64], s0: f64) -> f64;
    /// `D₁L_d`, derivative in the first slot.
    fn d1(&self, q0: &[f64], q1: &[f64], s0: f64) -> Vec<f64>;
    /// `D₂L_d`, derivative in the second slot.
    fn d2(&self, q0: &[f64], q1: &[f64], s0: f64) -> Vec<f64>;
    /// `D_S L_d`.
    fn ds(&self, q0: &[f64], q1: &[f64], s0: f64) -> f64;
}

/// Midpoint-rule discretisation over one step of length `h`:
/// `L_d = m|q₁ − q₀|²/2h − h V((q₀ + q₁)/2) − hγS₀`.
///
/// For the unit oscillator this is `(q₁−q₀)²/2h − h(q₁+q₀)²/8 − hγS₀`.
#[derive(Clone)]
pub struct MidpointDiscreteLagrangian {
    pub lagrangian: MechanicalLagrangian,
    pub h: f64,
}

impl MidpointDiscreteLagrangian {
    pub fn new(lagrangian: MechanicalLagrangian, h: f64) -> Self {
        Self { lagrangian, h }
    }

    fn mid(q0: &[f64], q1: &[f64]) -> Vec<f64> {
        q0.iter().zip(q1).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    fn slot_derivative(&self, q0: &[f64], q1: &[f64], sign: f64) -> Vec<f64> {
        let m = self.lagrangian.mass;
        let h = self.h;
        let dv = self.lagrangian.potential.gradient(&Self::mid(q0, q1));
        q0.iter()
            .zip(q1)
            .zip(dv)
            .map(|((a, b), g)| sign * m * (b - a) / h - 0.5 * h * g)
            .collect()
    }
}

impl DiscreteLagrangian for MidpointDiscreteLagrangian {
    fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    fn value(&self, q0: &[f64], q1: &[f64], s0: f64) -> f64 {
        let l = &self.lagrangian;
        let dq: Vec<f64> = q0.iter().zip(q1).map(|(a, b)| b - a).collect();
        l.mass * dot(&dq, &dq) / (2.0 * self.h)
            - self.h * l.potential.value(&Self::mid(q0, q1))
            - self.h * l.gamma * s0
    }

    fn d1(&self, q0: &[f64], q1: &[f64], _s0: f64) -> Vec<f64> {
        self.slot_derivative(q0, q1, -1.0)
    }

    fn d2(&self, q0: &[f64], q1: &[f64], _s0: f64) -> Vec<f64> {
        self.slot_derivative(q0, q1, 1.0)
    }

    fn ds(&self, _q0: &[f64], _q1: &[f64], _s0: f64) -> f64 {
        -self.h * self.lagrangian.gamma
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::QuadraticPotential;

    fn unit() -> MechanicalLagrangian {
        MechanicalLagrangian::new(1.0, 0.1, Arc::new(QuadraticPotential::harmonic(1, 1.0)))
    }

    #[test]
    fn energy_is_the_hamiltonian_after_legendre() {
        let l = unit();
        let (q, v, s) = ([0.5], [2.0], 3.0);
        let x = l.legendre(&q, &v, s);
        assert_eq!(&*x, &[0.5, 2.0, 3.0]);
        // E_L = v²/2 + q²/2 + γS
        assert!((l.energy(&q, &v, s) - (2.0 + 0.125 + 0.3)).abs() < 1e-15);
        assert_eq!(l.contact_form(&v, &[1.0], 2.0), 0.0);
        assert_eq!(l.contact_form(&v, &[0.0], 1.0), 1.0);
        assert_eq!(l.reeb(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn discrete_partials_match_finite_differences() {
        let ld = MidpointDiscreteLagrangian::new(unit(), 0.1);
        let (q0, q1, s0) = (0.3, 1.1, 2.0);
        let e = 1e-6;
        let fd1 = (ld.value(&[q0 + e], &[q1], s0) - ld.value(&[q0 - e], &[q1], s0)) / (2.0 * e);
        let fd2 = (ld.value(&[q0], &[q1 + e], s0) - ld.value(&[q0], &[q1 - e], s0)) / (2.0 * e);
        let fds = (ld.value(&[q0], &[q1], s0 + e) - ld.value(&[q0], &[q1], s0 - e)) / (2.0 * e);
        assert!((ld.d1(&[q0], &[q1], s0)[0] - fd1).abs() < 1e-7);
        assert!((ld.d2(&[q0], &[q1], s0)[0] - fd2).abs() < 1e-7);
        assert!((ld.ds(&[q0], &[q1], s0) - fds).abs() < 1e-7);
    }

    #[test]
    fn unit_oscillator_discretisation_matches_closed_expression() {
        let (h, g) = (0.1, 0.1);
        let ld = MidpointDiscreteLagrangian::new(unit(), h);
        let (q0, q1, s0) = (0.7, -0.2, 1.5);
        let expect = (q1 - q0) * (q1 - q0) / (2.0 * h) - h * (q1 + q0) * (q1 + q0) / 8.0 - h * g * s0;
        assert!((ld.value(&[q0], &[q1], s0) - expect).abs() < 1e-15);
    }
}
