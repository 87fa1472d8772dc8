use std::sync::Arc;

use crate::linalg::{CholeskyFactor, CsrMatrix, DenseMatrix};

/// A square linear map `x ↦ y`.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `op(x)` into `y`, overwriting it.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }

    /// Materializes the operator column by column.
    fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut out = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        out
    }
}

impl std::fmt::Debug for dyn LinearOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LinearOperator(dim = {})", self.dim())
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        assert!(self.is_square());
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        self.mul_add(1.0, x, y);
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.rows(), self.cols());
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        self.mul_add(1.0, x, y);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// `v ↦ scale · M⁻¹ v` from a Cholesky factor of `M`.
#[derive(Debug, Clone)]
pub struct FactorInverse {
    factor: Arc<CholeskyFactor>,
    scale: f64,
}

impl FactorInverse {
    pub fn new(factor: Arc<CholeskyFactor>) -> Self {
        Self { factor, scale: 1.0 }
    }

    pub fn scaled(factor: Arc<CholeskyFactor>, scale: f64) -> Self {
        Self { factor, scale }
    }
}

impl LinearOperator for FactorInverse {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.factor
            .solve_in_place(y)
            .expect("operator dimension checked by caller");
        if self.scale != 1.0 {
            crate::linalg::scale(self.scale, y);
        }
    }
}

/// `v ↦ scale · inner(v)`
#[derive(Clone)]
pub struct Scaled {
    inner: Arc<dyn LinearOperator>,
    scale: f64,
}

impl Scaled {
    pub fn new(inner: Arc<dyn LinearOperator>, scale: f64) -> Self {
        Self { inner, scale }
    }
}

impl LinearOperator for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        crate::linalg::scale(self.scale, y);
    }
}
