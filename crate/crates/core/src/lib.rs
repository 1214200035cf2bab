//! Contact-geometric evolution dynamics for isolated thermodynamic systems.
//!
//! States live on `T*Q × ℝ` with coordinates `(q, p, S)` and contact form
//! `η = dS − p·dq`. A model supplies an energy `H` and a structure matrix
//! `M(x)`; its flow is `ẋ = M(x)∇H(x)`, which conserves `H` and produces
//! entropy. Composed models couple two subsystems through Fourier heat
//! exchange.
//!
//! The integrators in [`integrators`] preserve `H` exactly (discrete
//! gradients) or follow a discrete variational principle (Herglotz).

pub mod diagnostics;
pub mod disc_grad;
pub mod error;
pub mod field;
pub mod geom;
pub mod integrators;
pub mod lagrangian;
pub mod selftest;
pub mod state;
pub mod systems;

pub use disc_grad::{discrete_gradient, DiscreteGradientKind};
pub use error::{Error, Result};
pub use field::{FnField, QuadraticField, ScalarField};
pub use integrators::{simulate, Method, Solver, StepperConfig, Trajectory};
pub use state::{Covector, Layout, State, Tangent};
pub use systems::ModelSpec;
