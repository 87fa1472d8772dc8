//! Symmetric eigenvalues via Householder tridiagonalization followed by
//! implicit-shift QL iteration, and the generalized problem `P⁻¹A` by
//! Cholesky reduction.

use super::{cholesky, DenseMatrix, EIGEN_SYMMETRY_TOL};
use crate::{Error, Result};

/// QL sweeps allowed per eigenvalue before giving up.
pub const MAX_QL_SWEEPS: usize = 30;

/// Eigenvalues sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn from_unsorted(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| a.total_cmp(b));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.0.last().copied().unwrap_or(f64::NAN)
    }

    /// Smallest eigenvalue magnitude.
    pub fn min_abs(&self) -> f64 {
        self.0.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Number of eigenvalues within `tol` of `target`.
    pub fn count_near(&self, target: f64, tol: f64) -> usize {
        self.0.iter().filter(|v| (*v - target).abs() <= tol).count()
    }
}

/// Reduces a symmetric matrix to tridiagonal form; returns (diagonal, off-diagonal)
/// with `off[i]` coupling `i` and `i + 1` and `off[n - 1] = 0`.
fn tridiagonalize(m: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows();
    let mut a = m.data().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let v = &mut v[..len];
        for i in 0..len {
            v[i] = a[(k + 1 + i) * n + k];
        }
        let xnorm = super::norm2(v);
        if xnorm == 0.0 {
            e[k] = 0.0;
            continue;
        }
        let alpha = if v[0] > 0.0 { -xnorm } else { xnorm };
        v[0] -= alpha;
        let tau = 2.0 / super::dot(v, v);

        // p = tau * A22 v
        let p = &mut p[..len];
        for i in 0..len {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            p[i] = tau * super::dot(row, v);
        }
        let kk = 0.5 * tau * super::dot(v, p);
        for i in 0..len {
            p[i] -= kk * v[i];
        }
        // A22 -= v pᵀ + p vᵀ
        for i in 0..len {
            let (vi, pi) = (v[i], p[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for j in 0..len {
                row[j] -= vi * p[j] + pi * v[j];
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    (d, e)
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigs(m: &DenseMatrix) -> Result<Spectrum> {
    super::check_len(m.rows(), m.cols())?;
    m.check_symmetric(EIGEN_SYMMETRY_TOL)?;
    let (mut d, mut e) = tridiagonalize(m);
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(Spectrum::from_unsorted(d))
}

/// Eigenvalues of `P⁻¹A` for symmetric `A` and SPD `P`, from
/// `P = L Lᵀ` and the symmetric matrix `L⁻¹ A L⁻ᵀ`.
pub fn gen_eigs(a: &DenseMatrix, p: &DenseMatrix) -> Result<Spectrum> {
    super::check_len(a.rows(), p.rows())?;
    a.check_symmetric(EIGEN_SYMMETRY_TOL)?;
    let f = cholesky(p)?;
    let x = f.forward_matrix(a);
    let mut c = f.forward_matrix(&x.transpose());
    c.symmetrize();
    sym_eigs(&c)
}

/// Eigenvalues of `P⁻¹A` when the SPD inverse `P⁻¹ = G Gᵀ` is what is
/// available: they coincide with those of `Gᵀ A G`.
pub fn gen_eigs_from_inverse(a: &DenseMatrix, p_inv: &DenseMatrix) -> Result<Spectrum> {
    super::check_len(a.rows(), p_inv.rows())?;
    a.check_symmetric(EIGEN_SYMMETRY_TOL)?;
    let f = cholesky(p_inv)?;
    let g = f.lower();
    let mut c = g.transpose().matmul(&a.matmul(g));
    c.symmetrize();
    sym_eigs(&c)
}
