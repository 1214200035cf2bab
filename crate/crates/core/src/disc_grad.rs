//! Discrete gradients: two-point maps `∇̄H(x, x')` with
//! `∇̄H(x, x')·(x' − x) = H(x') − H(x)` and `∇̄H(x, x) = ∇H(x)`.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::field::ScalarField;
use crate::state::{dot, Covector};

/// Default coincidence threshold `ε_dg`.
pub const COINCIDENCE_EPS: f64 = 1e-12;

/// Default Gauss–Legendre order of the mean-value rule (exact to degree 15).
pub const MEAN_VALUE_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum DiscreteGradientKind {
    /// `∫₀¹ ∇H((1−ξ)x + ξx') dξ` by Gauss–Legendre quadrature.
    MeanValue { order: usize },
    /// Gonzalez: `∇H(x̄)` plus a rank-one correction along `x' − x`.
    Midpoint { threshold: f64 },
    /// Itoh–Abe: per-coordinate divided differences.
    CoordinateIncrement { threshold: f64 },
}

impl DiscreteGradientKind {
    pub const fn avf() -> Self {
        DiscreteGradientKind::MeanValue {
            order: MEAN_VALUE_ORDER,
        }
    }

    pub const fn gonzalez() -> Self {
        DiscreteGradientKind::Midpoint {
            threshold: COINCIDENCE_EPS,
        }
    }

    pub const fn itoh_abe() -> Self {
        DiscreteGradientKind::CoordinateIncrement {
            threshold: COINCIDENCE_EPS,
        }
    }

    pub fn all() -> [Self; 3] {
        [Self::avf(), Self::gonzalez(), Self::itoh_abe()]
    }

    pub fn name(&self) -> &'static str {
        match self {
            DiscreteGradientKind::MeanValue { .. } => "avf",
            DiscreteGradientKind::Midpoint { .. } => "gonzalez",
            DiscreteGradientKind::CoordinateIncrement { .. } => "itoh-abe",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DiscreteGradientKind::MeanValue { order } => order > 0,
            DiscreteGradientKind::Midpoint { threshold }
            | DiscreteGradientKind::CoordinateIncrement { threshold } => threshold > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter {
                name: "discrete gradient",
                reason: format!("{self:?} needs a positive parameter"),
            })
        }
    }
}

impl Default for DiscreteGradientKind {
    fn default() -> Self {
        Self::gonzalez()
    }
}

impl fmt::Display for DiscreteGradientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DiscreteGradientKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "avf" | "mean-value" => Ok(Self::avf()),
            "gonzalez" | "midpoint" => Ok(Self::gonzalez()),
            "itoh-abe" | "coordinate-increment" => Ok(Self::itoh_abe()),
            other => Err(Error::Unknown {
                what: "discrete gradient",
                name: other.to_string(),
            }),
        }
    }
}

pub fn discrete_gradient(
    kind: DiscreteGradientKind,
    h: &dyn ScalarField,
    x: &[f64],
    x_next: &[f64],
) -> Result<Covector> {
    check_dim(x.len(), x_next.len())?;
    kind.validate()?;
    Ok(match kind {
        DiscreteGradientKind::MeanValue { order } => mean_value(order, h, x, x_next),
        DiscreteGradientKind::Midpoint { threshold } => gonzalez(threshold, h, x, x_next),
        DiscreteGradientKind::CoordinateIncrement { threshold } => {
            coordinate_increment(threshold, h, x, x_next)
        }
    })
}

fn mean_value(order: usize, h: &dyn ScalarField, x: &[f64], x_next: &[f64]) -> Covector {
    if x == x_next {
        return h.gradient(x);
    }
    // order was validated as positive
    let rule = GaussLegendre::new(NonZeroUsize::new(order).unwrap());
    let mut acc = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    for &(node, weight) in rule.as_node_weight_pairs() {
        // map [-1, 1] → [0, 1]
        let xi = 0.5 * (node + 1.0);
        for ((yi, a), b) in y.iter_mut().zip(x).zip(x_next) {
            *yi = (1.0 - xi) * a + xi * b;
        }
        let g = h.gradient(&y);
        for (s, gi) in acc.iter_mut().zip(g.iter()) {
            *s += 0.5 * weight * gi;
        }
    }
    Covector::new(acc)
}

fn gonzalez(threshold: f64, h: &dyn ScalarField, x: &[f64], x_next: &[f64]) -> Covector {
    let mid: Vec<f64> = x.iter().zip(x_next).map(|(a, b)| 0.5 * (a + b)).collect();
    let mut g = h.gradient(&mid);
    let dx: Vec<f64> = x.iter().zip(x_next).map(|(a, b)| b - a).collect();
    let dist2 = dot(&dx, &dx);
    let scale = 1.0 + dot(x, x).sqrt();
    if dist2.sqrt() < threshold * scale {
        return g;
    }
    let defect = h.value(x_next) - h.value(x) - dot(&g, &dx);
    let c = defect / dist2;
    for (gi, d) in g.iter_mut().zip(&dx) {
        *gi += c * d;
    }
    g
}

fn coordinate_increment(threshold: f64, h: &dyn ScalarField, x: &[f64], x_next: &[f64]) -> Covector {
    // y walks from x to x_next one coordinate at a time
    let mut y = x.to_vec();
    let mut h_prev = h.value(&y);
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let d = x_next[i] - x[i];
        if d.abs() < threshold * (1.0 + x[i].abs()) {
            g.push(h.partial(&y, i));
            y[i] = x_next[i];
            h_prev = h.value(&y);
        } else {
            y[i] = x_next[i];
            let h_next = h.value(&y);
            g.push((h_next - h_prev) / d);
            h_prev = h_next;
        }
    }
    Covector::new(g)
}
