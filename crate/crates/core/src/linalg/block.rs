use super::{CsrMatrix, DenseMatrix};

/// A matrix block of a saddle-point system, stored densely (random
/// experiments) or sparsely (finite-element operators).
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Dense(DenseMatrix),
    Sparse(CsrMatrix),
}

impl Block {
    pub fn rows(&self) -> usize {
        match self {
            Block::Dense(m) => m.rows(),
            Block::Sparse(m) => m.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Block::Dense(m) => m.cols(),
            Block::Sparse(m) => m.cols(),
        }
    }

    /// `y += alpha * B x`
    pub fn mul_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        match self {
            Block::Dense(m) => m.mul_add(alpha, x, y),
            Block::Sparse(m) => m.mul_add(alpha, x, y),
        }
    }

    /// `y += alpha * Bᵀ x`
    pub fn mul_t_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        match self {
            Block::Dense(m) => m.mul_t_add(alpha, x, y),
            Block::Sparse(m) => m.mul_t_add(alpha, x, y),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows()];
        self.mul_add(1.0, x, &mut y);
        y
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.cols()];
        self.mul_t_add(1.0, x, &mut y);
        y
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Block::Dense(m) => m.clone(),
            Block::Sparse(m) => m.to_dense(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Block::Dense(m) => m.frobenius_norm(),
            Block::Sparse(m) => m.frobenius_norm(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Block::Sparse(_))
    }
}

impl From<DenseMatrix> for Block {
    fn from(m: DenseMatrix) -> Self {
        Block::Dense(m)
    }
}

impl From<CsrMatrix> for Block {
    fn from(m: CsrMatrix) -> Self {
        Block::Sparse(m)
    }
}
