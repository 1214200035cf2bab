//! Scalar functions on phase space.

use std::sync::Arc;

use crate::state::Covector;

/// A smooth function `f: ℝᴺ → ℝ` together with its differential.
///
/// Implementors that know their gradient in closed form should override
/// [`ScalarField::gradient`]; the default falls back to central differences.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Covector {
        central_difference(|y| self.value(y), x)
    }

    /// `∂f/∂xᵢ`. Override when a single partial is cheaper than the full gradient.
    fn partial(&self, x: &[f64], i: usize) -> f64 {
        self.gradient(x)[i]
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Arc<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Covector {
        (**self).gradient(x)
    }
    fn partial(&self, x: &[f64], i: usize) -> f64 {
        (**self).partial(x, i)
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> Covector {
        (**self).gradient(x)
    }
    fn partial(&self, x: &[f64], i: usize) -> f64 {
        (**self).partial(x, i)
    }
}

/// Relative step used by [`central_difference`].
pub const FD_STEP: f64 = 1e-6;

/// Central-difference gradient with step `h = FD_STEP·max(1, ‖x‖∞)`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Covector {
    let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let h = FD_STEP * scale;
    let mut y = x.to_vec();
    let grad = (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let fp = f(&y);
            y[i] = x[i] - h;
            let fm = f(&y);
            y[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect();
    Covector::new(grad)
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A [`ScalarField`] assembled from closures.
#[derive(Clone)]
pub struct FnField {
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
}

impl std::fmt::Debug for FnField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnField")
            .field("analytic_gradient", &self.gradient.is_some())
            .finish_non_exhaustive()
    }
}

impl FnField {
    /// Value only; the gradient is taken by central differences.
    pub fn new(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
        }
    }
}

impl ScalarField for FnField {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Covector {
        match &self.gradient {
            Some(g) => Covector::new(g(x)),
            None => central_difference(|y| (self.value)(y), x),
        }
    }
}

/// The coordinate function `x ↦ xᵢ`.
#[derive(Clone, Copy, Debug)]
pub struct Coordinate {
    pub index: usize,
}

impl ScalarField for Coordinate {
    fn value(&self, x: &[f64]) -> f64 {
        x[self.index]
    }

    fn gradient(&self, x: &[f64]) -> Covector {
        let mut g = Covector::zeros(x.len());
        g[self.index] = 1.0;
        g
    }

    fn partial(&self, _x: &[f64], i: usize) -> f64 {
        if i == self.index {
            1.0
        } else {
            0.0
        }
    }
}

/// `f(x) = ½ xᵀAx + bᵀx + c` with symmetric `A` (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticField {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl QuadraticField {
    /// `a` is symmetrised on construction.
    pub fn new(dim: usize, a: Vec<f64>, b: Vec<f64>, c: f64) -> Self {
        assert_eq!(a.len(), dim * dim, "quadratic form must be dim×dim");
        assert_eq!(b.len(), dim, "linear term must have length dim");
        let mut sym = a;
        for i in 0..dim {
            for j in 0..i {
                let m = 0.5 * (sym[i * dim + j] + sym[j * dim + i]);
                sym[i * dim + j] = m;
                sym[j * dim + i] = m;
            }
        }
        Self { dim, a: sym, b, c }
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }
}

impl ScalarField for QuadraticField {
    fn value(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += x[i] * self.a[i * n + j] * x[j];
            }
        }
        0.5 * quad + crate::state::dot(&self.b, x) + self.c
    }

    fn gradient(&self, x: &[f64]) -> Covector {
        let n = self.dim;
        Covector::new(
            (0..n)
                .map(|i| crate::state::dot(&self.a[i * n..(i + 1) * n], x) + self.b[i])
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fn_field_without_gradient_uses_central_differences() {
        let f = FnField::new(|x: &[f64]| x[0].sin() * x[1].exp());
        let x = [0.3, -0.7];
        let g = f.gradient(&x);
        assert!((g[0] - 0.3_f64.cos() * (-0.7_f64).exp()).abs() < 1e-9);
        assert!((g[1] - 0.3_f64.sin() * (-0.7_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn quadratic_gradient_matches_finite_differences() {
        let q = QuadraticField::new(3, vec![2.0, 1.0, 0.0, 0.0, 1.0, -1.0, 3.0, 0.5, 4.0], vec![1.0, -2.0, 0.5], 7.0);
        let x = [0.4, -1.1, 2.5];
        let analytic = q.gradient(&x);
        let numeric = central_difference(|y| q.value(y), &x);
        for i in 0..3 {
            assert!((analytic[i] - numeric[i]).abs() < 1e-6 * (1.0 + analytic[i].abs()));
        }
    }

    #[test]
    fn coordinate_field() {
        let s = Coordinate { index: 2 };
        assert_eq!(s.value(&[1.0, 2.0, 3.0]), 3.0);
        assert_eq!(&*s.gradient(&[1.0, 2.0, 3.0]), &[0.0, 0.0, 1.0]);
    }
}
