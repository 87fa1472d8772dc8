//! Dense, sparse and banded kernels used by every other module.
//!
//! Dense storage is row-major throughout. Symmetry checks use a relative
//! tolerance of `1e-12` for factorizations and `1e-10` for eigensolves.

mod banded;
mod block;
mod cholesky;
mod dense;
mod eigen;
pub mod mtx;
mod rng;
mod sparse;

pub use banded::{BandedCholesky, BandedSpdMatrix};
pub use block::Block;
pub use cholesky::{cholesky, solve_with_factor, CholeskyFactor, DenseCholesky};
pub use dense::DenseMatrix;
pub use eigen::{gen_eigs, gen_eigs_from_inverse, sym_eigs, Spectrum};
pub use rng::SeededRng;
pub use sparse::CsrMatrix;

/// Relative symmetry tolerance accepted by the Cholesky routines.
pub const CHOLESKY_SYMMETRY_TOL: f64 = 1e-12;
/// Relative symmetry tolerance accepted by the eigensolvers.
pub const EIGEN_SYMMETRY_TOL: f64 = 1e-10;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

pub(crate) fn check_len(expected: usize, found: usize) -> crate::Result<()> {
    if expected != found {
        return Err(crate::Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
