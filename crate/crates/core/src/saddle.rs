//! Block tridiagonal multiple saddle-point systems
//!
//! ```text
//!     [ A_0  B_1ᵀ                         ]
//!     [ B_1  -A_1  B_2ᵀ                   ]
//! A = [       B_2   A_2  B_3ᵀ             ]
//!     [              ...   ...    B_kᵀ    ]
//!     [                    B_k  (-1)^k A_k]
//! ```
//!
//! and the Schur complement chain `S_0 = A_0`, `S_j = A_j + B_j S_{j-1}⁻¹ B_jᵀ`.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::{
    cholesky, mtx, BandedSpdMatrix, Block, CholeskyFactor, CsrMatrix, DenseCholesky, DenseMatrix,
    CHOLESKY_SYMMETRY_TOL,
};
use crate::operator::LinearOperator;
use crate::{Error, Result};

/// Relative shift used when testing `A_j` (j ≥ 1) for semi-definiteness.
pub const PSD_SHIFT: f64 = 1e-12;

#[inline]
pub(crate) fn sign(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone)]
pub struct BlockSaddleSystem {
    diag: Vec<Block>,
    off: Vec<Block>,
    offsets: Vec<usize>,
}

impl BlockSaddleSystem {
    /// `diag = [A_0, …, A_k]`, `off = [B_1, …, B_k]` with `B_j` of shape `n_j × n_{j-1}`.
    ///
    /// Checks shapes, symmetry, `A_0` SPD and `A_j` PSD.
    pub fn new(diag: Vec<Block>, off: Vec<Block>) -> Result<Self> {
        let sys = Self::new_unchecked(diag, off)?;
        sys.validate_definiteness()?;
        Ok(sys)
    }

    /// Shape and symmetry checks only.
    pub fn new_unchecked(diag: Vec<Block>, off: Vec<Block>) -> Result<Self> {
        if diag.len() < 2 {
            return Err(Error::InvalidSystem("need k >= 1 (at least two diagonal blocks)".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::InvalidSystem(format!(
                "{} diagonal blocks need {} off-diagonal blocks, got {}",
                diag.len(),
                diag.len() - 1,
                off.len()
            )));
        }
        let mut offsets = vec![0];
        for (j, a) in diag.iter().enumerate() {
            if a.rows() != a.cols() || a.rows() == 0 {
                return Err(Error::InvalidSystem(format!(
                    "A_{j} must be square and non-empty, got {}x{}",
                    a.rows(),
                    a.cols()
                )));
            }
            let asym = match a {
                Block::Dense(m) => m.asymmetry(),
                Block::Sparse(m) => {
                    let scale = m.triplets().fold(0.0f64, |s, t| s.max(t.2.abs()));
                    let worst = m
                        .triplets()
                        .fold(0.0f64, |w, (i, jj, v)| w.max((v - m.get(jj, i)).abs()));
                    if scale == 0.0 {
                        0.0
                    } else {
                        worst / scale
                    }
                }
            };
            if asym > CHOLESKY_SYMMETRY_TOL {
                return Err(Error::NotSymmetric(asym));
            }
            offsets.push(offsets[j] + a.rows());
        }
        for (idx, b) in off.iter().enumerate() {
            let j = idx + 1;
            if b.rows() != diag[j].rows() || b.cols() != diag[j - 1].rows() {
                return Err(Error::InvalidSystem(format!(
                    "B_{j} must be {}x{}, got {}x{}",
                    diag[j].rows(),
                    diag[j - 1].rows(),
                    b.rows(),
                    b.cols()
                )));
            }
        }
        Ok(Self { diag, off, offsets })
    }

    fn validate_definiteness(&self) -> Result<()> {
        factor_block(&self.diag[0], 0.0).map_err(|_| Error::NotPositiveDefinite {
            index: 0,
            pivot: f64::NAN,
        })?;
        for j in 1..self.diag.len() {
            let a = &self.diag[j];
            let norm = a.frobenius_norm();
            if norm == 0.0 {
                continue;
            }
            factor_block(a, PSD_SHIFT * norm).map_err(|_| Error::NotSemiDefinite(j))?;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.diag.len() - 1
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.diag.iter().map(Block::rows).collect()
    }

    pub fn size(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    /// Start offset of each block in the stacked vector, plus the total at the end.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// `A_j`, `0 <= j <= k`.
    pub fn a(&self, j: usize) -> &Block {
        &self.diag[j]
    }

    /// `B_j`, `1 <= j <= k`.
    pub fn b(&self, j: usize) -> &Block {
        &self.off[j - 1]
    }

    pub fn range(&self, j: usize) -> std::ops::Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    /// `(Σ n_even, Σ n_odd)`: the multiplicities of `+1` and `-1` in the
    /// spectrum of the ideally preconditioned matrix.
    pub fn signature_counts(&self) -> (usize, usize) {
        signature_counts(&self.sizes())
    }

    /// Dense copy of the full matrix.
    pub fn assemble_full(&self) -> DenseMatrix {
        let mut full = DenseMatrix::zeros(self.dim(), self.dim());
        for j in 0..=self.k() {
            let o = self.offsets[j];
            full.set_block(o, o, &self.diag[j].to_dense().scaled(sign(j)));
        }
        for j in 1..=self.k() {
            let b = self.b(j).to_dense();
            full.set_block(self.offsets[j], self.offsets[j - 1], &b);
            full.set_block(self.offsets[j - 1], self.offsets[j], &b.transpose());
        }
        full
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut manifest = Manifest {
            k: self.k(),
            sizes: self.sizes(),
            a_files: Vec::new(),
            b_files: Vec::new(),
        };
        for j in 0..=self.k() {
            let name = format!("A{j}.mtx");
            let m = to_csr(&self.diag[j]);
            let sym = m.is_structurally_symmetric_exact();
            mtx::write_file(&dir.join(&name), &m, sym)?;
            manifest.a_files.push(name);
        }
        for j in 1..=self.k() {
            let name = format!("B{j}.mtx");
            mtx::write_file(&dir.join(&name), &to_csr(self.b(j)), false)?;
            manifest.b_files.push(name);
        }
        let f = std::fs::File::create(dir.join(MANIFEST_NAME))?;
        serde_json::to_writer_pretty(f, &manifest)?;
        Ok(())
    }

    /// Loads a system written by [`save_dir`](Self::save_dir); blocks come back sparse.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let f = std::fs::File::open(dir.join(MANIFEST_NAME))?;
        let manifest: Manifest = serde_json::from_reader(std::io::BufReader::new(f))?;
        if manifest.a_files.len() != manifest.k + 1 || manifest.b_files.len() != manifest.k {
            return Err(Error::Parse("manifest file lists do not match k".into()));
        }
        let diag = manifest
            .a_files
            .iter()
            .map(|name| mtx::read_file(&dir.join(name)).map(Block::Sparse))
            .collect::<Result<Vec<_>>>()?;
        let off = manifest
            .b_files
            .iter()
            .map(|name| mtx::read_file(&dir.join(name)).map(Block::Sparse))
            .collect::<Result<Vec<_>>>()?;
        let sys = Self::new(diag, off)?;
        if sys.sizes() != manifest.sizes {
            return Err(Error::Parse("block sizes disagree with manifest".into()));
        }
        Ok(sys)
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// On-disk description of a saved system.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub a_files: Vec<String>,
    pub b_files: Vec<String>,
}

fn to_csr(b: &Block) -> CsrMatrix {
    match b {
        Block::Dense(m) => CsrMatrix::from_dense(m, 0.0),
        Block::Sparse(m) => m.clone(),
    }
}

/// Cholesky of `block + shift·I`, banded for sparse blocks.
pub(crate) fn factor_block(block: &Block, shift: f64) -> Result<CholeskyFactor> {
    match block {
        Block::Dense(m) => {
            let shifted = if shift != 0.0 {
                m.add_scaled(shift, &DenseMatrix::identity(m.rows()))
            } else {
                m.clone()
            };
            Ok(cholesky(&shifted)?.into())
        }
        Block::Sparse(m) => {
            let mut banded = BandedSpdMatrix::from_csr(m)?;
            if shift != 0.0 {
                for i in 0..banded.dim() {
                    let d = banded.get(i, i);
                    banded.set(i, i, d + shift);
                }
            }
            Ok(banded.cholesky()?.into())
        }
    }
}

pub fn signature_counts(sizes: &[usize]) -> (usize, usize) {
    let plus = sizes.iter().step_by(2).sum();
    let minus = sizes.iter().skip(1).step_by(2).sum();
    (plus, minus)
}

impl LinearOperator for BlockSaddleSystem {
    fn dim(&self) -> usize {
        BlockSaddleSystem::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        y.fill(0.0);
        for j in 0..=self.k() {
            let r = self.range(j);
            self.diag[j].mul_add(sign(j), &x[r.clone()], &mut y[r]);
        }
        for j in 1..=self.k() {
            let (prev, cur) = (self.range(j - 1), self.range(j));
            self.off[j - 1].mul_add(1.0, &x[prev.clone()], &mut y[cur.clone()]);
            self.off[j - 1].mul_t_add(1.0, &x[cur], &mut y[prev]);
        }
    }
}

/// Exact Schur complements `S_0 = A_0, S_1, …, S_k`, stored densely with
/// their Cholesky factors.
#[derive(Debug, Clone)]
pub struct SchurChain {
    s: Vec<DenseMatrix>,
    factors: Vec<Arc<CholeskyFactor>>,
}

impl SchurChain {
    pub fn k(&self) -> usize {
        self.s.len() - 1
    }

    /// `S_j`, with `S_0 = A_0`.
    pub fn s(&self, j: usize) -> &DenseMatrix {
        &self.s[j]
    }

    pub fn factor(&self, j: usize) -> &Arc<CholeskyFactor> {
        &self.factors[j]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.s.iter().map(DenseMatrix::rows).collect()
    }

    fn dense_factor(&self, j: usize) -> &DenseCholesky {
        match &*self.factors[j] {
            CholeskyFactor::Dense(f) => f,
            CholeskyFactor::Banded(_) => unreachable!("chain factors are dense"),
        }
    }
}

/// Forms the chain densely; fails with `SchurNotSpd(j)` at the first level
/// that is not positive definite.
pub fn schur_chain(sys: &BlockSaddleSystem) -> Result<SchurChain> {
    let s0 = sys.a(0).to_dense();
    let f0 = cholesky(&s0).map_err(|_| Error::SchurNotSpd(0))?;
    let mut s = vec![s0];
    let mut dense = vec![f0];
    for j in 1..=sys.k() {
        let b = sys.b(j).to_dense();
        let x = dense[j - 1].solve_matrix(&b.transpose())?;
        let mut sj = sys.a(j).to_dense().add_scaled(1.0, &b.matmul(&x));
        sj.symmetrize();
        let fj = cholesky(&sj).map_err(|_| Error::SchurNotSpd(j))?;
        s.push(sj);
        dense.push(fj);
    }
    Ok(SchurChain {
        s,
        factors: dense.into_iter().map(|f| Arc::new(f.into())).collect(),
    })
}

/// Dense block lower-triangular factor with diagonal `(-1)^j D_j` and
/// sub-diagonal `B_j`.
pub fn dense_lower_factor(sys: &BlockSaddleSystem, diag: &[DenseMatrix]) -> DenseMatrix {
    let n = sys.dim();
    let mut pl = DenseMatrix::zeros(n, n);
    for j in 0..=sys.k() {
        let o = sys.offsets()[j];
        pl.set_block(o, o, &diag[j].scaled(sign(j)));
        if j > 0 {
            pl.set_block(o, sys.offsets()[j - 1], &sys.b(j).to_dense());
        }
    }
    pl
}

/// Dense `P_L · diag(s_j D_j)⁻¹ · P_Lᵀ` where `s_j = signs[j]`.
fn dense_lower_diag_upper(
    sys: &BlockSaddleSystem,
    diag: &[DenseMatrix],
    signs: impl Fn(usize) -> f64,
) -> Result<DenseMatrix> {
    let pl = dense_lower_factor(sys, diag);
    let pu = pl.transpose();
    // rows of P_U block j scaled by s_j D_j⁻¹
    let mut right = DenseMatrix::zeros(sys.dim(), sys.dim());
    for j in 0..=sys.k() {
        let r = sys.range(j);
        let f = cholesky(&diag[j])?;
        let rows = pu.block(r.start, 0, r.len(), sys.dim());
        let solved = f.solve_matrix(&rows)?.scaled(signs(j));
        right.set_block(r.start, 0, &solved);
    }
    let mut out = pl.matmul(&right);
    out.symmetrize();
    Ok(out)
}

/// Dense factorized preconditioner `P_L P_D⁻¹ P_U` built on diagonal blocks `D_j`.
pub fn dense_factorized_preconditioner(sys: &BlockSaddleSystem, diag: &[DenseMatrix]) -> Result<DenseMatrix> {
    dense_lower_diag_upper(sys, diag, |_| 1.0)
}

/// Dense block diagonal preconditioner `diag(D_0, …, D_k)`.
pub fn dense_block_diagonal(sys: &BlockSaddleSystem, diag: &[DenseMatrix]) -> DenseMatrix {
    let n = sys.dim();
    let mut pd = DenseMatrix::zeros(n, n);
    for (j, d) in diag.iter().enumerate() {
        let o = sys.offsets()[j];
        pd.set_block(o, o, d);
    }
    pd
}

/// `‖A − P_L P̄_D⁻¹ P_U‖_F / ‖A‖_F`, where `P̄_D` carries the alternating signs.
pub fn reconstruct_from_factorization(sys: &BlockSaddleSystem, chain: &SchurChain) -> Result<f64> {
    let a = sys.assemble_full();
    let diag: Vec<_> = (0..=sys.k()).map(|j| chain.s(j).clone()).collect();
    let prod = dense_lower_diag_upper(sys, &diag, sign)?;
    Ok(a.add_scaled(-1.0, &prod).frobenius_norm() / a.frobenius_norm())
}

impl SchurChain {
    /// Dense `P_k = P_L P_D⁻¹ P_U` with the exact complements.
    pub fn dense_pk(&self, sys: &BlockSaddleSystem) -> Result<DenseMatrix> {
        dense_factorized_preconditioner(sys, &self.s)
    }

    /// Dense `P_D = diag(A_0, S_1, …, S_k)`.
    pub fn dense_pd(&self, sys: &BlockSaddleSystem) -> DenseMatrix {
        dense_block_diagonal(sys, &self.s)
    }

    pub fn dense_pl(&self, sys: &BlockSaddleSystem) -> DenseMatrix {
        dense_lower_factor(sys, &self.s)
    }

    /// `S_{j}⁻¹ X` for a dense block `X`.
    pub fn solve_matrix(&self, j: usize, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.dense_factor(j).solve_matrix(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gen_eigs, SeededRng};

    fn scalar(v: f64) -> Block {
        Block::Dense(DenseMatrix::from_rows(&[&[v]]))
    }

    pub(crate) fn k1_example() -> BlockSaddleSystem {
        BlockSaddleSystem::new(vec![scalar(1.0), scalar(0.0)], vec![scalar(1.0)]).unwrap()
    }

    fn k2_example() -> BlockSaddleSystem {
        BlockSaddleSystem::new(
            vec![scalar(2.0), scalar(1.0), scalar(1.0)],
            vec![scalar(1.0), scalar(1.0)],
        )
        .unwrap()
    }

    fn random_system(k: usize, seed: u64) -> BlockSaddleSystem {
        let mut rng = SeededRng::new(seed);
        let sizes: Vec<usize> = (0..=k).map(|_| 3 + (rng.next_f64() * 4.0) as usize).collect();
        let diag = sizes
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let r = rng.uniform_matrix(n, n);
                let base = r.transpose().matmul(&r);
                let shift = if j == 0 { 1.0 } else { 0.0 };
                Block::Dense(base.add_scaled(shift, &DenseMatrix::identity(n)))
            })
            .collect();
        let off = (1..=k)
            .map(|j| Block::Dense(rng.uniform_matrix(sizes[j], sizes[j - 1])))
            .collect();
        BlockSaddleSystem::new(diag, off).unwrap()
    }

    #[test]
    fn assemble_k1() {
        let full = k1_example().assemble_full();
        assert_eq!(full, DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 0.0]]));
    }

    #[test]
    fn assemble_k2_sign_pattern() {
        let full = k2_example().assemble_full();
        let expected = DenseMatrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, -1.0, 1.0], &[0.0, 1.0, 1.0]]);
        assert_eq!(full, expected);
    }

    #[test]
    fn assembled_random_is_exactly_symmetric_and_matches_operator() {
        let sys = random_system(3, 4);
        let full = sys.assemble_full();
        assert_eq!(full, full.transpose());
        let x: Vec<f64> = (0..sys.dim()).map(|i| (i as f64 * 0.37).cos()).collect();
        let y1 = full.matvec(&x);
        let y2 = sys.apply_vec(&x);
        for (a, b) in y1.iter().zip(&y2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn schur_of_scaled_identities() {
        let i2 = DenseMatrix::identity(2);
        let sys = BlockSaddleSystem::new(
            vec![i2.scaled(2.0).into(), i2.clone().into()],
            vec![i2.clone().into()],
        )
        .unwrap();
        let chain = schur_chain(&sys).unwrap();
        assert_eq!(chain.s(1), &i2.scaled(1.5));
        assert_eq!(schur_chain(&k1_example()).unwrap().s(1), &DenseMatrix::from_rows(&[&[1.0]]));
    }

    #[test]
    fn schur_recursion_random_k3() {
        let sys = random_system(3, 11);
        let chain = schur_chain(&sys).unwrap();
        for j in 1..=3 {
            // independent route: Gaussian solve via a fresh factorization of S_{j-1}
            let prev = cholesky(chain.s(j - 1)).unwrap();
            let b = sys.b(j).to_dense();
            let x = prev.solve_matrix(&b.transpose()).unwrap();
            let expected = sys.a(j).to_dense().add_scaled(1.0, &b.matmul(&x));
            let err = chain.s(j).add_scaled(-1.0, &expected).max_abs() / expected.max_abs();
            assert!(err < 1e-11, "level {j}: {err}");
        }
    }

    #[test]
    fn factorization_identity() {
        for sys in [k1_example(), k2_example(), random_system(5, 21)] {
            let chain = schur_chain(&sys).unwrap();
            let res = reconstruct_from_factorization(&sys, &chain).unwrap();
            assert!(res <= 1e-10, "residual {res}");
        }
        let chain = schur_chain(&k1_example()).unwrap();
        assert!(reconstruct_from_factorization(&k1_example(), &chain).unwrap() <= 1e-12);
    }

    #[test]
    fn signature_examples() {
        assert_eq!(signature_counts(&[3, 2, 4]), (7, 2));
        assert_eq!(signature_counts(&[1, 1, 1, 1]), (2, 2));
        assert_eq!(signature_counts(&[2, 3, 4, 5, 6]), (12, 8));
    }

    #[test]
    fn dense_pk_k1_matches_closed_form() {
        let sys = k1_example();
        let chain = schur_chain(&sys).unwrap();
        assert_eq!(chain.dense_pk(&sys).unwrap(), DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 2.0]]));
        let s = gen_eigs(&sys.assemble_full(), &chain.dense_pd(&sys)).unwrap();
        let sqrt5 = 5f64.sqrt();
        assert!((s.values()[0] - 0.5 * (1.0 - sqrt5)).abs() < 1e-14);
        assert!((s.values()[1] - 0.5 * (1.0 + sqrt5)).abs() < 1e-14);
    }

    #[test]
    fn schur_failure_reports_level() {
        // A_1 = 0 and B_1 = 0 make S_1 singular.
        let sys = BlockSaddleSystem::new(vec![scalar(1.0), scalar(0.0)], vec![scalar(0.0)]).unwrap();
        assert!(matches!(schur_chain(&sys), Err(Error::SchurNotSpd(1))));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            BlockSaddleSystem::new(vec![scalar(-1.0), scalar(0.0)], vec![scalar(1.0)]),
            Err(Error::NotPositiveDefinite { index: 0, .. })
        ));
        assert!(matches!(
            BlockSaddleSystem::new(vec![scalar(1.0), scalar(-1.0)], vec![scalar(1.0)]),
            Err(Error::NotSemiDefinite(1))
        ));
        assert!(matches!(
            BlockSaddleSystem::new(vec![scalar(1.0)], vec![]),
            Err(Error::InvalidSystem(_))
        ));
        let wide = Block::Dense(DenseMatrix::zeros(1, 2));
        assert!(matches!(
            BlockSaddleSystem::new(vec![scalar(1.0), scalar(0.0)], vec![wide]),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn save_and_load_round_trip() {
        let sys = random_system(2, 8);
        let dir = tempfile::tempdir().unwrap();
        sys.save_dir(dir.path()).unwrap();
        let back = BlockSaddleSystem::load_dir(dir.path()).unwrap();
        assert_eq!(back.sizes(), sys.sizes());
        assert_eq!(back.assemble_full(), sys.assemble_full());
        let manifest: Manifest =
            serde_json::from_reader(std::fs::File::open(dir.path().join(MANIFEST_NAME)).unwrap()).unwrap();
        assert_eq!(manifest.k, 2);
        assert_eq!(manifest.a_files, vec!["A0.mtx", "A1.mtx", "A2.mtx"]);
    }
}
