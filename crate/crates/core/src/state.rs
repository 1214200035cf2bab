//! Flat coordinate vectors and the layout that gives them meaning.
//!
//! Every model works on a single flat vector. Subsystem `α` occupies the
//! contiguous block `(q_α, p_α, S_α)`, so a simple system is `(q, p, S)` and a
//! composed one is `(q₁, p₁, S₁, q₂, p₂, S₂)`.

use std::ops::{Deref, DerefMut, Range};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

macro_rules! coordinate_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                Self(values)
            }

            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn norm_inf(&self) -> f64 {
                self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(values: Vec<f64>) -> Self {
                Self(values)
            }
        }

        impl From<&[f64]> for $name {
            fn from(values: &[f64]) -> Self {
                Self(values.to_vec())
            }
        }
    };
}

coordinate_vector!(
    /// A point of phase space.
    State
);
coordinate_vector!(
    /// A tangent vector attached to a [`State`].
    Tangent
);
coordinate_vector!(
    /// A differential (one-form) at a [`State`].
    Covector
);

impl State {
    /// Arithmetic mean of two states.
    pub fn midpoint(&self, other: &State) -> State {
        State(self.iter().zip(other.iter()).map(|(a, b)| 0.5 * (a + b)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl Covector {
    /// The natural pairing `⟨α, v⟩`.
    pub fn pair(&self, v: &Tangent) -> f64 {
        dot(self, v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Block structure of a state vector: one entry per thermodynamic subsystem
/// holding the number of mechanical degrees of freedom.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    mechanical: Vec<usize>,
}

impl Layout {
    /// `(q, p, S)` with `q, p ∈ ℝⁿ`.
    pub fn simple(n: usize) -> Self {
        Self { mechanical: vec![n] }
    }

    /// `(q₁, p₁, S₁, q₂, p₂, S₂)`.
    pub fn composed(n1: usize, n2: usize) -> Self {
        Self {
            mechanical: vec![n1, n2],
        }
    }

    pub fn mechanical_dims(&self) -> &[usize] {
        &self.mechanical
    }

    /// Number of entropy slots (one per subsystem).
    pub fn thermal_count(&self) -> usize {
        self.mechanical.len()
    }

    pub fn dim(&self) -> usize {
        self.mechanical.iter().map(|n| 2 * n + 1).sum()
    }

    fn offset(&self, subsystem: usize) -> usize {
        self.mechanical[..subsystem].iter().map(|n| 2 * n + 1).sum()
    }

    pub fn q_range(&self, subsystem: usize) -> Range<usize> {
        let o = self.offset(subsystem);
        o..o + self.mechanical[subsystem]
    }

    pub fn p_range(&self, subsystem: usize) -> Range<usize> {
        let o = self.offset(subsystem) + self.mechanical[subsystem];
        o..o + self.mechanical[subsystem]
    }

    pub fn s_index(&self, subsystem: usize) -> usize {
        self.offset(subsystem) + 2 * self.mechanical[subsystem]
    }

    /// All entropy slots, in subsystem order.
    pub fn s_indices(&self) -> Vec<usize> {
        (0..self.thermal_count()).map(|a| self.s_index(a)).collect()
    }

    /// Pairs `(q index, p index)` of every mechanical degree of freedom.
    pub fn canonical_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.thermal_count())
            .flat_map(|a| self.q_range(a).zip(self.p_range(a)))
            .collect()
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())
    }

    /// Column names of the flattened state, e.g. `q,p,S` or `S1,S2`.
    pub fn component_names(&self) -> Vec<String> {
        let composed = self.thermal_count() > 1;
        let mut names = Vec::with_capacity(self.dim());
        for (a, &n) in self.mechanical.iter().enumerate() {
            let tag = if composed { format!("{}", a + 1) } else { String::new() };
            for sym in ["q", "p"] {
                for i in 0..n {
                    match (composed, n) {
                        (_, 1) => names.push(format!("{sym}{tag}")),
                        (false, _) => names.push(format!("{sym}{}", i + 1)),
                        (true, _) => names.push(format!("{sym}{tag}_{}", i + 1)),
                    }
                }
            }
            names.push(format!("S{tag}"));
        }
        names
    }
}
