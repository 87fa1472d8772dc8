//! Property tests and independent oracles for the core invariants.
//!
//! The oracles below use plain Gauss-Jordan elimination on row vectors, so
//! they share no code with the library's Cholesky-based paths.

use std::f64::consts::PI;
use std::sync::Arc;

use multisaddle::approx::ChebyshevOp;
use multisaddle::experiments::csv::fmt_f64;
use multisaddle::experiments::random::{random_system, zero_a_system, RandomRecipe};
use multisaddle::fem::{assemble, structured_square_mesh};
use multisaddle::linalg::{gen_eigs, mtx, Block, CsrMatrix, DenseMatrix, SeededRng};
use multisaddle::minres::{minres, MinresOptions};
use multisaddle::operator::LinearOperator;
use multisaddle::precond::{
    apply_pd_inverse, apply_pk_inverse, ideal_blocks, spd_probe, BlockPreconditioner, PreconditionerKind,
};
use multisaddle::saddle::{schur_chain, signature_counts, BlockSaddleSystem};
use proptest::prelude::*;

type Rows = Vec<Vec<f64>>;

fn rows_of(m: &DenseMatrix) -> Rows {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn mat_mul(a: &Rows, b: &Rows) -> Rows {
    let (n, p) = (a.len(), b[0].len());
    (0..n)
        .map(|i| (0..p).map(|j| (0..b.len()).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

fn transpose(a: &Rows) -> Rows {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Inverse by Gauss-Jordan with partial pivoting.
fn inverse(a: &Rows) -> Rows {
    let n = a.len();
    let mut m: Rows = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        for v in &mut m[c] {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    let pivot_row = m[c].clone();
                    for (v, pv) in m[r].iter_mut().zip(pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn mat_vec(a: &Rows, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn small_system(k: usize, seed: u64, max_size: usize) -> BlockSaddleSystem {
    let mut rng = SeededRng::new(seed);
    let sizes: Vec<usize> = (0..=k).map(|_| 1 + (rng.next_f64() * max_size as f64) as usize).collect();
    let diag = sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let r = rng.uniform_matrix(n, n);
            let shift = if j == 0 { 1.0 } else { 0.0 };
            Block::Dense(r.transpose().matmul(&r).add_scaled(shift, &DenseMatrix::identity(n)))
        })
        .collect();
    let off = (1..=k).map(|j| Block::Dense(rng.uniform_matrix(sizes[j], sizes[j - 1]))).collect();
    BlockSaddleSystem::new(diag, off).unwrap()
}

/// `S_j` from explicit inverses.
fn oracle_schur(sys: &BlockSaddleSystem) -> Vec<Rows> {
    let mut s = vec![rows_of(&sys.a(0).to_dense())];
    for j in 1..=sys.k() {
        let b = rows_of(&sys.b(j).to_dense());
        let prev_inv = inverse(&s[j - 1]);
        let corr = mat_mul(&mat_mul(&b, &prev_inv), &transpose(&b));
        let a = rows_of(&sys.a(j).to_dense());
        s.push(a.iter().zip(&corr).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect());
    }
    s
}

/// Dense `P_k = P_L P_D⁻¹ P_U` assembled from oracle Schur complements.
fn oracle_pk(sys: &BlockSaddleSystem) -> Rows {
    let s = oracle_schur(sys);
    let n = sys.dim();
    let off = sys.offsets().to_vec();
    let mut pl = vec![vec![0.0; n]; n];
    let mut pd_inv = vec![vec![0.0; n]; n];
    for j in 0..=sys.k() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let inv = inverse(&s[j]);
        for (r, row) in s[j].iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                pl[off[j] + r][off[j] + c] = sign * v;
                pd_inv[off[j] + r][off[j] + c] = inv[r][c];
            }
        }
        if j > 0 {
            let b = rows_of(&sys.b(j).to_dense());
            for (r, row) in b.iter().enumerate() {
                for (c, v) in row.iter().enumerate() {
                    pl[off[j] + r][off[j - 1] + c] = *v;
                }
            }
        }
    }
    mat_mul(&mat_mul(&pl, &pd_inv), &transpose(&pl))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schur_chain_matches_explicit_inverses(k in 1usize..5, seed in any::<u64>()) {
        let sys = small_system(k, seed, 4);
        let chain = schur_chain(&sys).unwrap();
        for (j, s) in oracle_schur(&sys).iter().enumerate() {
            let lib = rows_of(chain.s(j));
            let scale = s.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
            let d = lib.iter().flatten().zip(s.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert!(d <= 1e-9 * scale, "S_{} differs by {}", j, d);
        }
    }

    #[test]
    fn pk_inverse_matches_dense_solve(k in 1usize..5, seed in any::<u64>()) {
        let sys = small_system(k, seed, 4);
        let approx = ideal_blocks(&schur_chain(&sys).unwrap());
        let mut rng = SeededRng::new(seed ^ 0x5eed);
        let v = rng.symmetric_vec(sys.dim());
        let expected = mat_vec(&inverse(&oracle_pk(&sys)), &v);
        let got = apply_pk_inverse(&approx, &sys, &v).unwrap();
        let scale = expected.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        prop_assert!(max_diff(&got, &expected) <= 1e-8 * scale);
    }

    #[test]
    fn pd_inverse_is_blockwise(k in 1usize..5, seed in any::<u64>()) {
        let sys = small_system(k, seed, 4);
        let s = oracle_schur(&sys);
        let approx = ideal_blocks(&schur_chain(&sys).unwrap());
        let v = SeededRng::new(seed).symmetric_vec(sys.dim());
        let got = apply_pd_inverse(&approx, &v).unwrap();
        for j in 0..=k {
            let r = sys.range(j);
            let expected = mat_vec(&inverse(&s[j]), &v[r.clone()]);
            let scale = expected.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            prop_assert!(max_diff(&got[r], &expected) <= 1e-8 * scale);
        }
    }

    #[test]
    fn preconditioners_are_spd(k in 1usize..5, seed in any::<u64>()) {
        let sys = small_system(k, seed, 4);
        let approx = ideal_blocks(&schur_chain(&sys).unwrap());
        for kind in [PreconditionerKind::BlockDiagonal, PreconditionerKind::Factorized] {
            let p = BlockPreconditioner::new(kind, &approx, &sys).unwrap();
            prop_assert!(spd_probe(&p, 20, seed).passes(1e-8));
        }
    }

    #[test]
    fn signature_partitions_dimension(sizes in proptest::collection::vec(1usize..50, 1..12)) {
        let (plus, minus) = signature_counts(&sizes);
        prop_assert_eq!(plus + minus, sizes.iter().sum::<usize>());
        prop_assert_eq!(plus, sizes.iter().step_by(2).sum::<usize>());
    }

    #[test]
    fn minres_distinct_eigenvalues(d in 1usize..4, reps in 1usize..6, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let values: Vec<f64> = (0..d).map(|i| 1.0 + i as f64 + 0.5 * rng.next_f64()).collect();
        let diag: Vec<f64> = (0..d * reps).map(|i| values[i % d]).collect();
        let a = DenseMatrix::from_diag(&diag);
        let b = rng.symmetric_vec(diag.len());
        let id = DenseMatrix::identity(diag.len());
        let res = minres(&a, &id, &b, MinresOptions { tol: 1e-12, maxit: None }).unwrap();
        prop_assert!(res.iterations <= d);
    }

    #[test]
    fn minres_true_residual_small(k in 1usize..4, seed in any::<u64>()) {
        let sys = small_system(k, seed, 6);
        let approx = ideal_blocks(&schur_chain(&sys).unwrap());
        let p = BlockPreconditioner::new(PreconditionerKind::BlockDiagonal, &approx, &sys).unwrap();
        let b = SeededRng::new(seed).symmetric_vec(sys.dim());
        let res = minres(&sys, &p, &b, MinresOptions { tol: 1e-10, maxit: None }).unwrap();
        let r: Vec<f64> = sys.apply_vec(&res.solution).iter().zip(&b).map(|(x, y)| x - y).collect();
        let rel = r.iter().map(|x| x * x).sum::<f64>().sqrt() / b.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(rel <= 1e-6, "relative residual {}", rel);
        prop_assert_eq!(res.residual_history.len(), res.iterations + 1);
        prop_assert_eq!(res.residual_history[0], 1.0);
    }

    #[test]
    fn csv_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn matrix_market_round_trip(n in 1usize..8, m in 1usize..8, seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if rng.next_f64() < 0.4 {
                    t.push((i, j, rng.symmetric_vec(1)[0] * 1e3));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, m, &t).unwrap();
        let mut buf = Vec::new();
        mtx::write(&mut buf, &a, false).unwrap();
        prop_assert_eq!(mtx::read(&buf[..]).unwrap(), a);
    }

    #[test]
    fn chebyshev_is_symmetric_positive(level in 1u32..5, steps in 1usize..12) {
        let ops = assemble(&structured_square_mesh(level)).unwrap();
        let op = ChebyshevOp::p1_mass(Arc::new(ops.mass), steps).unwrap();
        prop_assert!(spd_probe(&op, 10, steps as u64).passes(1e-10));
    }
}

/// With `A_1 = 0` and square blocks, `P_D⁻¹A` has eigenvalues `(1 ± √5)/2` only.
#[test]
fn zero_a_k1_golden_ratio() {
    let sys = zero_a_system(&RandomRecipe::new(1, 4), 0).unwrap();
    let chain = schur_chain(&sys).unwrap();
    let spec = gen_eigs(&sys.assemble_full(), &chain.dense_pd(&sys)).unwrap();
    let golden = [(1.0 + 5f64.sqrt()) / 2.0, (1.0 - 5f64.sqrt()) / 2.0];
    for x in spec.values() {
        let d = golden.iter().map(|g| (x - g).abs()).fold(f64::INFINITY, f64::min);
        assert!(d < 1e-8, "{x}");
    }
    assert!((golden[0] - 2.0 * (PI / 5.0).cos()).abs() < 1e-15);
}

#[test]
fn random_block_sizes_in_range() {
    let recipe = RandomRecipe::new(3, 11);
    for trial in 0..250 {
        for n in random_system(&recipe, trial).unwrap().sizes() {
            assert!((20..30).contains(&n));
        }
    }
}

#[test]
fn random_systems_reproducible() {
    let recipe = RandomRecipe::new(2, 99);
    let a = random_system(&recipe, 5).unwrap().assemble_full();
    let b = random_system(&recipe, 5).unwrap().assemble_full();
    assert_eq!(a, b);
    let c = random_system(&RandomRecipe::new(2, 100), 5).unwrap().assemble_full();
    assert_ne!(a, c);
}
