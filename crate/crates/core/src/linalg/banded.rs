use super::{check_len, CsrMatrix, DenseMatrix};
use crate::{Error, Result};

/// Symmetric banded matrix; only the lower band is stored.
///
/// Entry `(i, j)` with `i - bw <= j <= i` lives at `band[i * (bw + 1) + (j + bw - i)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSpdMatrix {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandedSpdMatrix {
    pub fn zeros(n: usize, bw: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSystem("banded matrix must have dimension >= 1".into()));
        }
        let bw = bw.min(n - 1);
        Ok(Self {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        })
    }

    /// Takes the lower triangle of `m`; the upper triangle is assumed to mirror it.
    pub fn from_csr(m: &CsrMatrix) -> Result<Self> {
        check_len(m.rows(), m.cols())?;
        let mut out = Self::zeros(m.rows(), m.bandwidth())?;
        for (i, j, v) in m.triplets() {
            if j <= i {
                out.set(i, j, v);
            }
        }
        Ok(out)
    }

    pub fn from_dense(m: &DenseMatrix, bw: usize) -> Result<Self> {
        check_len(m.rows(), m.cols())?;
        let mut out = Self::zeros(m.rows(), bw)?;
        for i in 0..m.rows() {
            for j in i.saturating_sub(out.bw)..=i {
                out.set(i, j, m[(i, j)]);
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Reads `(i, j)` for any position, using symmetry.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.band[self.offset(i, j)]
        }
    }

    /// Writes the lower-band entry `(i, j)`, `j <= i`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j <= i && i - j <= self.bw, "entry outside lower band");
        let o = self.offset(i, j);
        self.band[o] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..i {
                let a = self.band[self.offset(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.band[self.offset(i, i)] * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// Cholesky factorization that stays inside the band.
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let n = self.n;
        let bw = self.bw;
        let mut l = self.band.clone();
        let w = bw + 1;
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let mut sum = l[i * w + (j + bw - i)];
                for k in lo..j {
                    sum -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: sum });
                    }
                    l[i * w + bw] = sum.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = sum / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Lower-triangular banded Cholesky factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + (j + self.bw - i)]
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        check_len(self.n, x.len())?;
        let bw = self.bw;
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.at(i, k) * x[k];
            }
            x[i] = s / self.at(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(self.n) {
                s -= self.at(k, i) * x[k];
            }
            x[i] = s / self.at(i, i);
        }
        Ok(())
    }

    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut x = v.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn lower_dense(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| {
            if j <= i && i - j <= self.bw {
                self.at(i, j)
            } else {
                0.0
            }
        })
    }
}
