use super::{check_len, BandedCholesky, DenseMatrix, CHOLESKY_SYMMETRY_TOL};
use crate::{Error, Result};

/// Dense lower-triangular Cholesky factor.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    l: DenseMatrix,
}

/// Cholesky factorization of an SPD matrix, either dense or banded.
#[derive(Debug, Clone)]
pub enum CholeskyFactor {
    Dense(DenseCholesky),
    Banded(BandedCholesky),
}

/// Factorizes a dense SPD matrix `M = L Lᵀ`.
pub fn cholesky(m: &DenseMatrix) -> Result<DenseCholesky> {
    check_len(m.rows(), m.cols())?;
    m.check_symmetric(CHOLESKY_SYMMETRY_TOL)?;
    let n = m.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = m[(i, j)] - super::dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(DenseCholesky { l })
}

impl DenseCholesky {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.l
    }

    /// Solves `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        for i in 0..b.len() {
            let row = self.l.row(i);
            b[i] = (b[i] - super::dot(&row[..i], &b[..i])) / row[i];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn backward_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        for i in (0..n).rev() {
            b[i] /= self.l[(i, i)];
            let xi = b[i];
            let row = self.l.row(i);
            for k in 0..i {
                b[k] -= row[k] * xi;
            }
        }
    }

    /// Solves `L X = B` for all columns of `B` at once.
    pub fn forward_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows(), self.dim());
        let mut x = b.clone();
        for i in 0..x.rows() {
            for k in 0..i {
                let lik = self.l[(i, k)];
                if lik != 0.0 {
                    let (head, tail) = x_rows_split(&mut x, k, i);
                    super::axpy(-lik, head, tail);
                }
            }
            let d = 1.0 / self.l[(i, i)];
            super::scale(d, x.row_mut(i));
        }
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x.len())?;
        self.forward_in_place(x);
        self.backward_in_place(x);
        Ok(())
    }

    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut x = v.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// `M⁻¹ B` for a dense right-hand side block.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        check_len(self.dim(), b.rows())?;
        let bt = b.transpose();
        let mut out = DenseMatrix::zeros(bt.rows(), bt.cols());
        for c in 0..bt.rows() {
            let mut col = bt.row(c).to_vec();
            self.solve_in_place(&mut col)?;
            out.row_mut(c).copy_from_slice(&col);
        }
        Ok(out.transpose())
    }
}

/// Returns (row k, row i) of `x` as (&, &mut) with k < i.
fn x_rows_split(x: &mut DenseMatrix, k: usize, i: usize) -> (&[f64], &mut [f64]) {
    debug_assert!(k < i);
    let cols = x.cols();
    let (a, b) = x.data_mut().split_at_mut(i * cols);
    (&a[k * cols..(k + 1) * cols], &mut b[..cols])
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        match self {
            CholeskyFactor::Dense(f) => f.dim(),
            CholeskyFactor::Banded(f) => f.dim(),
        }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        match self {
            CholeskyFactor::Dense(f) => f.solve_in_place(x),
            CholeskyFactor::Banded(f) => f.solve_in_place(x),
        }
    }

    /// Solves `M x = v` with the factorized `M`.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut x = v.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }
}

impl From<DenseCholesky> for CholeskyFactor {
    fn from(f: DenseCholesky) -> Self {
        CholeskyFactor::Dense(f)
    }
}

impl From<BandedCholesky> for CholeskyFactor {
    fn from(f: BandedCholesky) -> Self {
        CholeskyFactor::Banded(f)
    }
}

/// Solves with an existing factor; kept as a free function to mirror [`cholesky`].
pub fn solve_with_factor(f: &CholeskyFactor, v: &[f64]) -> Result<Vec<f64>> {
    f.solve(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SeededRng;

    fn random_spd(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = SeededRng::new(seed);
        let r = rng.uniform_matrix(n, n);
        r.transpose().matmul(&r).add_scaled(n as f64, &DenseMatrix::identity(n))
    }

    #[test]
    fn identity_factor() {
        let f = cholesky(&DenseMatrix::identity(4)).unwrap();
        assert_eq!(f.lower(), &DenseMatrix::identity(4));
        assert_eq!(f.solve(&[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn two_by_two_by_hand() {
        let m = DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]);
        let f = cholesky(&m).unwrap();
        assert_eq!(f.lower(), &DenseMatrix::from_rows(&[&[2.0, 0.0], &[1.0, 2.0]]));
        let x = f.solve(&[6.0, 7.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_reconstruction_and_residual() {
        let m = random_spd(50, 7);
        let f = cholesky(&m).unwrap();
        let l = f.lower();
        let rel = l.matmul(&l.transpose()).add_scaled(-1.0, &m).frobenius_norm() / m.frobenius_norm();
        assert!(rel <= 1e-12, "reconstruction error {rel}");

        let v: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&v).unwrap();
        let mut r = m.matvec(&x);
        crate::linalg::axpy(-1.0, &v, &mut r);
        assert!(crate::linalg::norm2(&r) / crate::linalg::norm2(&v) <= 1e-10);
    }

    #[test]
    fn forward_matrix_matches_columnwise() {
        let m = random_spd(8, 2);
        let f = cholesky(&m).unwrap();
        let b = SeededRng::new(3).uniform_matrix(8, 5);
        let x = f.forward_matrix(&b);
        for c in 0..5 {
            let mut col = b.column(c);
            f.forward_in_place(&mut col);
            for i in 0..8 {
                assert!((col[i] - x[(i, c)]).abs() < 1e-13);
            }
        }
        let s = f.solve_matrix(&b).unwrap();
        let back = m.matmul(&s).add_scaled(-1.0, &b).max_abs();
        assert!(back < 1e-12);
    }

    #[test]
    fn errors() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(cholesky(&m), Err(Error::NotPositiveDefinite { index: 1, .. })));
        let m = DenseMatrix::from_rows(&[&[1.0, 0.5], &[0.0, 1.0]]);
        assert!(matches!(cholesky(&m), Err(Error::NotSymmetric(_))));
        let f = cholesky(&DenseMatrix::identity(2)).unwrap();
        assert!(matches!(
            f.solve(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }
}
