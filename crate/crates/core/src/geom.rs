//! The canonical contact structure on `T*ℝⁿ × ℝ` in Darboux coordinates
//! `(q, p, S)`, with `η = dS − pᵢ dqⁱ` and Reeb field `R = ∂/∂S`.
//!
//! Everything here is a pointwise evaluation; nothing integrates. Functions
//! accept the flat `(q, p, S)` vector of length `2n + 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::state::{Covector, State, Tangent};

/// Number of mechanical degrees of freedom of a `(q, p, S)` vector.
pub fn mechanical_dim(len: usize) -> Result<usize> {
    if len % 2 == 1 {
        Ok(len / 2)
    } else {
        Err(Error::Contract(format!(
            "contact phase space has odd dimension 2n+1, got {len}"
        )))
    }
}

fn same_len(x: &[f64], other: &[f64]) -> Result<usize> {
    let n = mechanical_dim(x.len())?;
    if other.len() != x.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: other.len(),
        });
    }
    Ok(n)
}

/// `η_x(v) = v_S − Σ pᵢ v_{qⁱ}`.
pub fn contact_form(x: &State, v: &Tangent) -> Result<f64> {
    let n = same_len(x, v)?;
    let p = &x[n..2 * n];
    Ok(v[2 * n] - p.iter().zip(&v[..n]).map(|(pi, vi)| pi * vi).sum::<f64>())
}

/// `η` as a covector: `(−p, 0, 1)`.
pub fn contact_covector(x: &State) -> Result<Covector> {
    let n = mechanical_dim(x.len())?;
    let mut eta = Covector::zeros(x.len());
    for i in 0..n {
        eta[i] = -x[n + i];
    }
    eta[2 * n] = 1.0;
    Ok(eta)
}

/// The Reeb field `∂/∂S`.
pub fn reeb(x: &State) -> Result<Tangent> {
    let n = mechanical_dim(x.len())?;
    let mut r = Tangent::zeros(x.len());
    r[2 * n] = 1.0;
    Ok(r)
}

/// The Liouville field `Δ_Q = pᵢ ∂/∂pᵢ`.
pub fn liouville(x: &State) -> Result<Tangent> {
    let n = mechanical_dim(x.len())?;
    let mut d = Tangent::zeros(x.len());
    d[n..2 * n].copy_from_slice(&x[n..2 * n]);
    Ok(d)
}

/// `♭(X) = i_X dη + η(X) η`.
pub fn flat(x: &State, v: &Tangent) -> Result<Covector> {
    let n = same_len(x, v)?;
    let eta_v = contact_form(x, v)?;
    let mut out = Covector::zeros(x.len());
    for i in 0..n {
        // dη = dqⁱ ∧ dpᵢ
        out[i] = -v[n + i] - eta_v * x[n + i];
        out[n + i] = v[i];
    }
    out[2 * n] = eta_v;
    Ok(out)
}

/// Which summand of `TM = ker η ⊕ ⟨R⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// `𝒫 = Id − R ⊗ η`, onto `ker η`.
    Horizontal,
    /// `𝒬 = R ⊗ η`, onto `⟨R⟩`.
    Vertical,
}

pub fn project(x: &State, v: &Tangent, which: Projection) -> Result<Tangent> {
    let n = same_len(x, v)?;
    let eta_v = contact_form(x, v)?;
    Ok(match which {
        Projection::Horizontal => {
            let mut h = v.clone();
            h[2 * n] -= eta_v;
            h
        }
        Projection::Vertical => {
            let mut r = Tangent::zeros(v.len());
            r[2 * n] = eta_v;
            r
        }
    })
}

/// `♯_Λ(α)`, defined by `⟨β, ♯_Λ(α)⟩ = Λ(α, β)` for
/// `Λ = ∂/∂pᵢ ∧ (∂/∂qⁱ + pᵢ ∂/∂S)`.
pub fn bivector_sharp(x: &State, alpha: &Covector) -> Result<Tangent> {
    let n = same_len(x, alpha)?;
    let p = &x[n..2 * n];
    let a_s = alpha[2 * n];
    let mut v = Tangent::zeros(x.len());
    for i in 0..n {
        let a_q = alpha[i];
        let a_p = alpha[n + i];
        v[i] = a_p;
        v[n + i] = -(a_q + p[i] * a_s);
        v[2 * n] += p[i] * a_p;
    }
    Ok(v)
}

/// `Λ(α, β)`.
pub fn bivector(x: &State, alpha: &Covector, beta: &Covector) -> Result<f64> {
    same_len(x, beta)?;
    Ok(beta.pair(&bivector_sharp(x, alpha)?))
}

/// Contact Hamiltonian field `X_f = ♯_Λ(df) − f R`.
pub fn hamiltonian_vf(f: &dyn ScalarField, x: &State) -> Result<Tangent> {
    let n = mechanical_dim(x.len())?;
    let mut v = evolution_vf(f, x)?;
    v[2 * n] -= f.value(x);
    Ok(v)
}

/// Evolution field `𝓔_f = ♯_Λ(df)`:
/// `q̇ = ∂f/∂p`, `ṗ = −∂f/∂q − p ∂f/∂S`, `Ṡ = p·∂f/∂p`.
pub fn evolution_vf(f: &dyn ScalarField, x: &State) -> Result<Tangent> {
    let df = f.gradient(x);
    bivector_sharp(x, &df)
}

/// The four brackets carried by `T*Q × ℝ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BracketKind {
    /// `{f, g} = Λ(df, dg) + f E(g) − g E(f)` with `E = −R`.
    Jacobi,
    /// `[f, g] = Λ(df, dg)`.
    Cartan,
    /// Canonical Poisson bracket of `Λ₀ = ∂/∂pᵢ ∧ ∂/∂qⁱ`.
    Poisson0,
    /// `{f, g}_{Δ_Q} = (∂g/∂S) Δ_Q f − (∂f/∂S) Δ_Q g`.
    DeltaQ,
}

impl BracketKind {
    pub const ALL: [BracketKind; 4] = [
        BracketKind::Jacobi,
        BracketKind::Cartan,
        BracketKind::Poisson0,
        BracketKind::DeltaQ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BracketKind::Jacobi => "jacobi",
            BracketKind::Cartan => "cartan",
            BracketKind::Poisson0 => "poisson0",
            BracketKind::DeltaQ => "deltaQ",
        }
    }
}

impl fmt::Display for BracketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BracketKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BracketKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Contract(format!("unknown bracket kind `{s}`")))
    }
}

pub fn bracket(kind: BracketKind, f: &dyn ScalarField, g: &dyn ScalarField, x: &State) -> Result<f64> {
    let n = mechanical_dim(x.len())?;
    let df = f.gradient(x);
    let dg = g.gradient(x);
    let p = &x[n..2 * n];

    let poisson0: f64 = (0..n).map(|i| df[n + i] * dg[i] - df[i] * dg[n + i]).sum();
    let liouville_f: f64 = (0..n).map(|i| p[i] * df[n + i]).sum();
    let liouville_g: f64 = (0..n).map(|i| p[i] * dg[n + i]).sum();
    let (f_s, g_s) = (df[2 * n], dg[2 * n]);
    let delta_q = g_s * liouville_f - f_s * liouville_g;

    Ok(match kind {
        BracketKind::Poisson0 => poisson0,
        BracketKind::DeltaQ => delta_q,
        BracketKind::Cartan => poisson0 + delta_q,
        BracketKind::Jacobi => {
            let cartan = poisson0 + delta_q;
            cartan - f.value(x) * g_s + g.value(x) * f_s
        }
    })
}

/// `v(f) = ⟨df, v⟩`.
pub fn directional_derivative(f: &dyn ScalarField, x: &State, v: &Tangent) -> f64 {
    f.gradient(x).pair(v)
}
