//! Block preconditioners for [`BlockSaddleSystem`]s.
//!
//! Every preconditioner is described by a [`BlockApproxSet`]: one operator per
//! diagonal block applying `Â_0⁻¹`, `Ŝ_1⁻¹`, …, `Ŝ_k⁻¹`. Three ways of combining
//! them are provided:
//!
//! * block diagonal `P_D = diag(Â_0, Ŝ_1, …, Ŝ_k)`;
//! * factorized `P_k = P_L P_D⁻¹ P_U` with `P_L` block lower triangular, diagonal
//!   `(-1)^j Ŝ_j` and sub-diagonal `B_j`, and `P_U = P_Lᵀ`;
//! * block lower triangular `P_L` alone (not symmetric, so never used inside MINRES).
//!
//! `P_k⁻¹ v` is evaluated as a forward substitution with `P_L` followed by a
//! backward substitution with the unit-triangular factor `P_D⁻¹ P_U`, which has
//! diagonal `(-1)^j I` and super-diagonal blocks `Ŝ_{j-1}⁻¹ B_jᵀ`. The forward
//! sweep uses every block inverse once and the backward sweep uses all but the
//! last one again.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::linalg::{check_len, dot, norm2, sym_eigs, DenseMatrix, SeededRng};
use crate::operator::{FactorInverse, Identity, LinearOperator};
use crate::saddle::{sign, BlockSaddleSystem, SchurChain};
use crate::{Error, Result};

/// Block inverse approximations with per-block use counters.
pub struct BlockApproxSet {
    ops: Vec<Arc<dyn LinearOperator>>,
    uses: Vec<AtomicUsize>,
}

impl std::fmt::Debug for BlockApproxSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockApproxSet")
            .field("sizes", &self.sizes())
            .field("uses", &self.use_counts())
            .finish()
    }
}

impl BlockApproxSet {
    pub fn new(ops: Vec<Arc<dyn LinearOperator>>) -> Self {
        let uses = ops.iter().map(|_| AtomicUsize::new(0)).collect();
        Self { ops, uses }
    }

    /// Identity operators on blocks of the given sizes.
    pub fn identity(sizes: &[usize]) -> Self {
        Self::new(sizes.iter().map(|&n| Arc::new(Identity(n)) as Arc<dyn LinearOperator>).collect())
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ops.iter().map(|op| op.dim()).collect()
    }

    pub fn op(&self, j: usize) -> &Arc<dyn LinearOperator> {
        &self.ops[j]
    }

    /// Applies block `j` and bumps its counter.
    pub fn apply_block(&self, j: usize, x: &[f64], y: &mut [f64]) {
        self.uses[j].fetch_add(1, Ordering::Relaxed);
        self.ops[j].apply(x, y);
    }

    pub fn use_counts(&self) -> Vec<usize> {
        self.uses.iter().map(|u| u.load(Ordering::Relaxed)).collect()
    }

    pub fn reset_counts(&self) {
        for u in &self.uses {
            u.store(0, Ordering::Relaxed);
        }
    }

    fn check_against(&self, sys: &BlockSaddleSystem) -> Result<()> {
        check_len(sys.k() + 1, self.len())?;
        for (j, op) in self.ops.iter().enumerate() {
            check_len(sys.size(j), op.dim())?;
        }
        Ok(())
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for op in &self.ops {
            off.push(off.last().unwrap() + op.dim());
        }
        off
    }
}

/// Exact inverses `A_0⁻¹, S_1⁻¹, …, S_k⁻¹` from the chain's factors.
pub fn ideal_blocks(chain: &SchurChain) -> BlockApproxSet {
    BlockApproxSet::new(
        (0..=chain.k())
            .map(|j| Arc::new(FactorInverse::new(chain.factor(j).clone())) as Arc<dyn LinearOperator>)
            .collect(),
    )
}

/// Operators applying `(c_j S_j)⁻¹`.
pub fn scaled_blocks(chain: &SchurChain, factors: &[f64]) -> Result<BlockApproxSet> {
    check_len(chain.k() + 1, factors.len())?;
    if let Some((index, &value)) = factors.iter().enumerate().find(|(_, c)| !(**c > 0.0)) {
        return Err(Error::NonPositiveFactor { index, value });
    }
    Ok(BlockApproxSet::new(
        factors
            .iter()
            .enumerate()
            .map(|(j, c)| {
                Arc::new(FactorInverse::scaled(chain.factor(j).clone(), 1.0 / c)) as Arc<dyn LinearOperator>
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PreconditionerKind {
    BlockDiagonal,
    Factorized,
    BlockLowerTriangular,
}

impl PreconditionerKind {
    pub fn is_spd(self) -> bool {
        !matches!(self, PreconditionerKind::BlockLowerTriangular)
    }

    /// Short label used in CSV output.
    pub fn label(self) -> &'static str {
        match self {
            PreconditionerKind::BlockDiagonal => "PD",
            PreconditionerKind::Factorized => "Pk",
            PreconditionerKind::BlockLowerTriangular => "PL",
        }
    }
}

impl std::str::FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PD" | "pd" | "diag" => Ok(PreconditionerKind::BlockDiagonal),
            "Pk" | "pk" | "factorized" => Ok(PreconditionerKind::Factorized),
            "PL" | "pl" | "lower" => Ok(PreconditionerKind::BlockLowerTriangular),
            other => Err(Error::Parse(format!("unknown preconditioner '{other}'"))),
        }
    }
}

/// `out = P_D⁻¹ v`.
pub fn apply_pd_inverse_into(approx: &BlockApproxSet, v: &[f64], out: &mut [f64]) -> Result<()> {
    let off = approx.offsets();
    check_len(off[approx.len()], v.len())?;
    check_len(v.len(), out.len())?;
    for j in 0..approx.len() {
        let r = off[j]..off[j + 1];
        approx.apply_block(j, &v[r.clone()], &mut out[r]);
    }
    Ok(())
}

pub fn apply_pd_inverse(approx: &BlockApproxSet, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    apply_pd_inverse_into(approx, v, &mut out)?;
    Ok(out)
}

/// Forward substitution with `P_L`: `y_0 = Â_0⁻¹ v_0`, `y_j = (-1)^j Ŝ_j⁻¹ (v_j − B_j y_{j-1})`.
fn forward(approx: &BlockApproxSet, sys: &BlockSaddleSystem, v: &[f64], y: &mut [f64]) -> Result<()> {
    approx.check_against(sys)?;
    check_len(sys.dim(), v.len())?;
    check_len(sys.dim(), y.len())?;
    let r0 = sys.range(0);
    approx.apply_block(0, &v[r0.clone()], &mut y[r0]);
    let mut t = Vec::new();
    for j in 1..=sys.k() {
        let (prev, cur) = (sys.range(j - 1), sys.range(j));
        t.clear();
        t.extend_from_slice(&v[cur.clone()]);
        let (head, tail) = y.split_at_mut(cur.start);
        sys.b(j).mul_add(-1.0, &head[prev], &mut t);
        let yj = &mut tail[..cur.len()];
        approx.apply_block(j, &t, yj);
        if j % 2 == 1 {
            yj.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(())
}

/// `out = P_L⁻¹ v`.
pub fn apply_pl_inverse_into(
    approx: &BlockApproxSet,
    sys: &BlockSaddleSystem,
    v: &[f64],
    out: &mut [f64],
) -> Result<()> {
    forward(approx, sys, v, out)
}

pub fn apply_pl_inverse(approx: &BlockApproxSet, sys: &BlockSaddleSystem, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    apply_pl_inverse_into(approx, sys, v, &mut out)?;
    Ok(out)
}

/// `out = P_k⁻¹ v`.
pub fn apply_pk_inverse_into(
    approx: &BlockApproxSet,
    sys: &BlockSaddleSystem,
    v: &[f64],
    out: &mut [f64],
) -> Result<()> {
    forward(approx, sys, v, out)?;
    // out holds y; overwrite it with x from the last block upwards
    let k = sys.k();
    if k % 2 == 1 {
        out[sys.range(k)].iter_mut().for_each(|x| *x = -*x);
    }
    let mut t = Vec::new();
    let mut u = Vec::new();
    for j in (0..k).rev() {
        let (cur, next) = (sys.range(j), sys.range(j + 1));
        t.clear();
        t.resize(cur.len(), 0.0);
        sys.b(j + 1).mul_t_add(1.0, &out[next], &mut t);
        u.resize(cur.len(), 0.0);
        approx.apply_block(j, &t, &mut u);
        let s = sign(j);
        for (x, ui) in out[cur].iter_mut().zip(&u) {
            *x = s * (*x - ui);
        }
    }
    Ok(())
}

pub fn apply_pk_inverse(approx: &BlockApproxSet, sys: &BlockSaddleSystem, v: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    apply_pk_inverse_into(approx, sys, v, &mut out)?;
    Ok(out)
}

/// A preconditioner inverse as a [`LinearOperator`].
#[derive(Debug, Clone, Copy)]
pub struct BlockPreconditioner<'a> {
    kind: PreconditionerKind,
    approx: &'a BlockApproxSet,
    sys: &'a BlockSaddleSystem,
}

impl<'a> BlockPreconditioner<'a> {
    pub fn new(kind: PreconditionerKind, approx: &'a BlockApproxSet, sys: &'a BlockSaddleSystem) -> Result<Self> {
        approx.check_against(sys)?;
        Ok(Self { kind, approx, sys })
    }

    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn approx(&self) -> &BlockApproxSet {
        self.approx
    }
}

impl LinearOperator for BlockPreconditioner<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = match self.kind {
            PreconditionerKind::BlockDiagonal => apply_pd_inverse_into(self.approx, x, y),
            PreconditionerKind::Factorized => apply_pk_inverse_into(self.approx, self.sys, x, y),
            PreconditionerKind::BlockLowerTriangular => apply_pl_inverse_into(self.approx, self.sys, x, y),
        };
        r.expect("dimensions validated at construction");
    }
}

/// Outcome of a randomized symmetry/positivity test of an operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdProbe {
    /// Largest `|⟨u, Av⟩ − ⟨Au, v⟩| / (‖u‖‖Av‖ + ‖Au‖‖v‖)` seen.
    pub max_asymmetry: f64,
    /// Smallest `⟨v, Av⟩ / ⟨v, v⟩` seen.
    pub min_rayleigh: f64,
    pub probes: usize,
}

impl SpdProbe {
    pub fn passes(&self, sym_tol: f64) -> bool {
        self.max_asymmetry <= sym_tol && self.min_rayleigh > 0.0
    }
}

/// Default number of random vectors in [`spd_probe`].
pub const SPD_PROBES: usize = 100;

pub fn spd_probe(op: &dyn LinearOperator, probes: usize, seed: u64) -> SpdProbe {
    let n = op.dim();
    let mut rng = SeededRng::new(seed);
    let mut report = SpdProbe { max_asymmetry: 0.0, min_rayleigh: f64::INFINITY, probes };
    for _ in 0..probes {
        let u = rng.symmetric_vec(n);
        let v = rng.symmetric_vec(n);
        let au = op.apply_vec(&u);
        let av = op.apply_vec(&v);
        let scale = norm2(&u) * norm2(&av) + norm2(&au) * norm2(&v);
        let asym = if scale > 0.0 { (dot(&u, &av) - dot(&au, &v)).abs() / scale } else { 0.0 };
        report.max_asymmetry = report.max_asymmetry.max(asym);
        report.min_rayleigh = report.min_rayleigh.min(dot(&v, &av) / dot(&v, &v));
    }
    report
}

/// Structure of a computed `P_L⁻¹ A`, which is unit block upper triangular
/// in exact arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitTriangularReport {
    /// Largest entry below the block diagonal, relative to the largest entry.
    pub lower_part: f64,
    /// Largest `‖D_j − I‖_2` over the diagonal blocks `D_j`; bounds the
    /// distance of every eigenvalue of the block triangular part from 1.
    pub eig_deviation: f64,
}

/// Forms `P_L⁻¹ A` column by column and measures its distance from the unit
/// block upper triangular pattern.
///
/// The eigenvalue 1 of this matrix is defective, so a general eigensolver
/// would amplify rounding by a fractional power; the deviation is instead
/// bounded blockwise, which is exact for the block triangular part.
pub fn pl_unit_triangular_report(approx: &BlockApproxSet, sys: &BlockSaddleSystem) -> Result<UnitTriangularReport> {
    approx.check_against(sys)?;
    let a = sys.assemble_full();
    let n = sys.dim();
    let mut prod = DenseMatrix::zeros(n, n);
    let mut out = vec![0.0; n];
    for c in 0..n {
        let col = a.column(c);
        apply_pl_inverse_into(approx, sys, &col, &mut out)?;
        for (r, v) in out.iter().enumerate() {
            prod[(r, c)] = *v;
        }
    }
    let scale = prod.max_abs();
    let mut lower: f64 = 0.0;
    let mut dev: f64 = 0.0;
    for i in 0..=sys.k() {
        let ri = sys.range(i);
        for j in 0..i {
            let rj = sys.range(j);
            lower = lower.max(prod.block(ri.start, rj.start, ri.len(), rj.len()).max_abs());
        }
        let e = prod
            .block(ri.start, ri.start, ri.len(), ri.len())
            .add_scaled(-1.0, &DenseMatrix::identity(ri.len()));
        let mut ete = e.transpose().matmul(&e);
        ete.symmetrize();
        dev = dev.max(sym_eigs(&ete)?.max().max(0.0).sqrt());
    }
    Ok(UnitTriangularReport { lower_part: lower / scale, eig_deviation: dev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky, gen_eigs, Block};
    use crate::saddle::{dense_factorized_preconditioner, schur_chain};

    fn scalar(v: f64) -> Block {
        Block::Dense(DenseMatrix::from_rows(&[&[v]]))
    }

    fn k1_example() -> BlockSaddleSystem {
        BlockSaddleSystem::new(vec![scalar(1.0), scalar(0.0)], vec![scalar(1.0)]).unwrap()
    }

    fn random_system(k: usize, seed: u64) -> BlockSaddleSystem {
        let mut rng = SeededRng::new(seed);
        let sizes: Vec<usize> = (0..=k).map(|_| 2 + (rng.next_f64() * 4.0) as usize).collect();
        let diag = sizes
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let r = rng.uniform_matrix(n, n);
                let shift = if j == 0 { 0.5 } else { 0.0 };
                Block::Dense(r.transpose().matmul(&r).add_scaled(shift, &DenseMatrix::identity(n)))
            })
            .collect();
        let off = (1..=k)
            .map(|j| Block::Dense(rng.uniform_matrix(sizes[j], sizes[j - 1])))
            .collect();
        BlockSaddleSystem::new(diag, off).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        let scale = norm2(b).max(1.0);
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
    }

    #[test]
    fn pk_inverse_k1_by_hand() {
        let sys = k1_example();
        let chain = schur_chain(&sys).unwrap();
        let approx = ideal_blocks(&chain);
        let x = apply_pk_inverse(&approx, &sys, &[1.0, 0.0]).unwrap();
        assert_eq!(x, vec![2.0, -1.0]);
    }

    #[test]
    fn identity_blocks_zero_coupling_is_identity() {
        let i2 = DenseMatrix::identity(2);
        let z = DenseMatrix::zeros(2, 2);
        let sys = BlockSaddleSystem::new(
            vec![i2.clone().into(), i2.clone().into(), i2.clone().into(), i2.into()],
            vec![z.clone().into(), z.clone().into(), z.into()],
        )
        .unwrap();
        let approx = BlockApproxSet::identity(&sys.sizes());
        let v: Vec<f64> = (0..8).map(|i| i as f64 - 3.5).collect();
        assert_eq!(apply_pk_inverse(&approx, &sys, &v).unwrap(), v);
        assert_eq!(apply_pd_inverse(&approx, &v).unwrap(), v);
    }

    #[test]
    fn pk_inverse_matches_dense_product() {
        let sys = random_system(3, 5);
        let chain = schur_chain(&sys).unwrap();
        let approx = ideal_blocks(&chain);
        let pk = chain.dense_pk(&sys).unwrap();
        let v = SeededRng::new(1).symmetric_vec(sys.dim());
        let got = apply_pk_inverse(&approx, &sys, &v).unwrap();
        let expected = cholesky(&pk).unwrap().solve(&v).unwrap();
        assert!(close(&got, &expected, 1e-10));
        // and the forward product round trip
        let w = pk.matvec(&got);
        assert!(close(&w, &v, 1e-10));
    }

    #[test]
    fn pd_inverse_matches_dense_solve() {
        let sys = random_system(2, 3);
        let chain = schur_chain(&sys).unwrap();
        let approx = ideal_blocks(&chain);
        let pd = chain.dense_pd(&sys);
        let w = SeededRng::new(2).symmetric_vec(sys.dim());
        let v = pd.matvec(&w);
        assert!(close(&apply_pd_inverse(&approx, &v).unwrap(), &w, 1e-10));
    }

    #[test]
    fn pl_inverse_round_trip_and_sign_pattern() {
        let sys = random_system(3, 9);
        let chain = schur_chain(&sys).unwrap();
        let approx = ideal_blocks(&chain);
        let pl = chain.dense_pl(&sys);
        // pinned signs on the diagonal of P_L
        for j in 0..=3 {
            let r = sys.range(j);
            assert_eq!(pl[(r.start, r.start)], sign(j) * chain.s(j)[(0, 0)]);
        }
        let w = SeededRng::new(4).symmetric_vec(sys.dim());
        let got = apply_pl_inverse(&approx, &sys, &pl.matvec(&w)).unwrap();
        assert!(close(&got, &w, 1e-10));
    }

    #[test]
    fn pl_inverse_times_system_is_unit_triangular() {
        let sys = random_system(4, 13);
        let approx = ideal_blocks(&schur_chain(&sys).unwrap());
        let rep = pl_unit_triangular_report(&approx, &sys).unwrap();
        assert!(rep.lower_part < 1e-10, "{rep:?}");
        assert!(rep.eig_deviation < 1e-8, "{rep:?}");
    }

    #[test]
    fn use_counts() {
        let sys = random_system(4, 2);
        let approx = ideal_blocks(&schur_chain(&sys).unwrap());
        let v = vec![1.0; sys.dim()];
        apply_pk_inverse(&approx, &sys, &v).unwrap();
        assert_eq!(approx.use_counts(), vec![2, 2, 2, 2, 1]);
        approx.reset_counts();
        apply_pd_inverse(&approx, &v).unwrap();
        assert_eq!(approx.use_counts(), vec![1; 5]);
    }

    #[test]
    fn scaled_last_block_spectrum() {
        let sys = random_system(2, 6);
        let chain = schur_chain(&sys).unwrap();
        let approx = scaled_blocks(&chain, &[1.0, 1.0, 2.0]).unwrap();
        let pinv = BlockPreconditioner::new(PreconditionerKind::Factorized, &approx, &sys)
            .unwrap()
            .to_dense();
        let mut pinv = pinv;
        pinv.symmetrize();
        let s = crate::linalg::gen_eigs_from_inverse(&sys.assemble_full(), &pinv).unwrap();
        let n = sys.sizes();
        assert_eq!(s.count_near(0.5, 1e-8), n[2]);
        assert_eq!(s.count_near(1.0, 1e-8), n[0]);
        assert_eq!(s.count_near(-1.0, 1e-8), n[1]);
    }

    #[test]
    fn unit_factors_match_ideal() {
        let sys = random_system(2, 6);
        let chain = schur_chain(&sys).unwrap();
        let v = SeededRng::new(8).symmetric_vec(sys.dim());
        let a = apply_pk_inverse(&ideal_blocks(&chain), &sys, &v).unwrap();
        let b = apply_pk_inverse(&scaled_blocks(&chain, &[1.0; 3]).unwrap(), &sys, &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_positive_factor_rejected() {
        let chain = schur_chain(&k1_example()).unwrap();
        assert!(matches!(
            scaled_blocks(&chain, &[1.0, 0.0]),
            Err(Error::NonPositiveFactor { index: 1, .. })
        ));
    }

    #[test]
    fn perturbed_preconditioner_is_spd() {
        let sys = random_system(3, 1);
        let chain = schur_chain(&sys).unwrap();
        let approx = scaled_blocks(&chain, &[1.3, 0.8, 1.1, 0.9]).unwrap();
        let p = BlockPreconditioner::new(PreconditionerKind::Factorized, &approx, &sys).unwrap();
        assert!(spd_probe(&p, SPD_PROBES, 3).passes(1e-10));
    }

    #[test]
    fn dense_scaled_oracle_agrees() {
        let sys = random_system(2, 4);
        let chain = schur_chain(&sys).unwrap();
        let c = [1.3, 0.9, 1.2];
        let diag: Vec<_> = (0..3).map(|j| chain.s(j).scaled(c[j])).collect();
        let dense = dense_factorized_preconditioner(&sys, &diag).unwrap();
        let approx = scaled_blocks(&chain, &c).unwrap();
        let v = SeededRng::new(5).symmetric_vec(sys.dim());
        let got = apply_pk_inverse(&approx, &sys, &v).unwrap();
        assert!(close(&dense.matvec(&got), &v, 1e-10));
        let ideal = gen_eigs(&sys.assemble_full(), &chain.dense_pk(&sys).unwrap()).unwrap();
        assert_eq!(ideal.count_near(1.0, 1e-8) + ideal.count_near(-1.0, 1e-8), sys.dim());
    }

    #[test]
    fn kind_flags() {
        assert!(PreconditionerKind::BlockDiagonal.is_spd());
        assert!(PreconditionerKind::Factorized.is_spd());
        assert!(!PreconditionerKind::BlockLowerTriangular.is_spd());
        assert_eq!("Pk".parse::<PreconditionerKind>().unwrap(), PreconditionerKind::Factorized);
    }

    #[test]
    fn dimension_mismatch() {
        let sys = k1_example();
        let approx = BlockApproxSet::identity(&[1, 1]);
        assert!(apply_pk_inverse(&approx, &sys, &[1.0]).is_err());
        assert!(apply_pd_inverse(&approx, &[1.0, 2.0, 3.0]).is_err());
        let wrong = BlockApproxSet::identity(&[2]);
        assert!(BlockPreconditioner::new(PreconditionerKind::BlockDiagonal, &wrong, &sys).is_err());
    }
}
