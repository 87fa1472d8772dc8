//! Randomly generated multiple saddle-point systems and the eigenvalue and
//! iteration experiments run on them.

use std::f64::consts::PI;
use std::time::Instant;

use super::{run_parallel, EigRow, IterRow};
use crate::linalg::{gen_eigs, sym_eigs, Block, DenseMatrix, SeededRng};
use crate::minres::{minres_lenient, MinresOptions};
use crate::precond::{scaled_blocks, BlockApproxSet, BlockPreconditioner, PreconditionerKind};
use crate::saddle::{dense_block_diagonal, dense_factorized_preconditioner, schur_chain, BlockSaddleSystem, SchurChain};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomRecipe {
    pub k: usize,
    pub seed: u64,
    /// Block sizes are `trunc(min_dim + dim_spread·u)`.
    pub min_dim: f64,
    pub dim_spread: f64,
    /// Perturbation factors are `1 + magnitude·(2u − 1)`.
    pub perturbation: f64,
}

impl RandomRecipe {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, seed, min_dim: 20.0, dim_spread: 10.0, perturbation: 0.3 }
    }

    /// Random stream for one trial.
    pub fn trial_rng(&self, trial: usize) -> SeededRng {
        SeededRng::substream(self.seed, ((self.k as u64) << 32) | trial as u64)
    }
}

/// Symmetric part of a uniform random matrix, shifted by `factor·|λ_min|`.
fn shifted_symmetric(rng: &mut SeededRng, n: usize, factor: f64) -> Result<DenseMatrix> {
    let r = rng.uniform_matrix(n, n);
    let mut s = r.add_scaled(1.0, &r.transpose()).scaled(0.5);
    s.symmetrize();
    let lmin = sym_eigs(&s)?.min();
    let shift = factor * (-lmin).max(0.0);
    Ok(s.add_scaled(shift, &DenseMatrix::identity(n)))
}

/// Draws one system from `rng`: sizes, then `A_0..A_k`, then `B_1..B_k`.
pub fn random_system_from(recipe: &RandomRecipe, rng: &mut SeededRng) -> Result<BlockSaddleSystem> {
    let sizes: Vec<usize> = (0..=recipe.k)
        .map(|_| (recipe.min_dim + recipe.dim_spread * rng.next_f64()).trunc() as usize)
        .collect();
    let diag = sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| shifted_symmetric(rng, n, if j == 0 { 1.01 } else { 1.0 }).map(Block::Dense))
        .collect::<Result<Vec<_>>>()?;
    let off = (1..=recipe.k)
        .map(|j| Block::Dense(rng.uniform_matrix(sizes[j], sizes[j - 1])))
        .collect();
    BlockSaddleSystem::new(diag, off)
}

/// System number `trial` of the recipe.
pub fn random_system(recipe: &RandomRecipe, trial: usize) -> Result<BlockSaddleSystem> {
    random_system_from(recipe, &mut recipe.trial_rng(trial))
}

/// Factors `c_j = 1 + magnitude·(2u − 1)`, one per block.
pub fn perturbation_factors(k: usize, magnitude: f64, rng: &mut SeededRng) -> Vec<f64> {
    (0..=k).map(|_| 1.0 + magnitude * (2.0 * rng.next_f64() - 1.0)).collect()
}

/// Block inverses of `c_j S_j` with random factors.
pub fn perturbed_blocks(chain: &SchurChain, magnitude: f64, rng: &mut SeededRng) -> Result<(BlockApproxSet, Vec<f64>)> {
    let c = perturbation_factors(chain.k(), magnitude, rng);
    Ok((scaled_blocks(chain, &c)?, c))
}

/// One trial: the system, its chain, the perturbation factors and a right-hand side.
#[derive(Debug, Clone)]
pub struct RandomTrial {
    pub system: BlockSaddleSystem,
    pub chain: SchurChain,
    pub factors: Vec<f64>,
    pub rhs: Vec<f64>,
}

pub fn random_trial(recipe: &RandomRecipe, trial: usize) -> Result<RandomTrial> {
    let mut rng = recipe.trial_rng(trial);
    let system = random_system_from(recipe, &mut rng)?;
    let chain = schur_chain(&system)?;
    let factors = perturbation_factors(recipe.k, recipe.perturbation, &mut rng);
    let w = rng.uniform_vec(system.dim());
    let rhs = crate::operator::LinearOperator::apply_vec(&system, &w);
    Ok(RandomTrial { system, chain, factors, rhs })
}

/// Eigenvalues of the preconditioned matrices for each trial.
///
/// Unperturbed runs report `PD` and `Pk` with exact blocks; perturbed runs
/// report `PD_hat` and `Pk_hat` built from `c_j S_j`.
pub fn eig_experiment(recipe: &RandomRecipe, trials: usize, perturbed: bool) -> Result<Vec<EigRow>> {
    let per_trial = run_parallel(trials, |trial| -> Result<Vec<EigRow>> {
        let t = random_trial(recipe, trial)?;
        let a = t.system.assemble_full();
        let diag: Vec<DenseMatrix> = (0..=recipe.k)
            .map(|j| {
                let c = if perturbed { t.factors[j] } else { 1.0 };
                t.chain.s(j).scaled(c)
            })
            .collect();
        let (pd_label, pk_label) = if perturbed { ("PD_hat", "Pk_hat") } else { ("PD", "Pk") };
        let pd = gen_eigs(&a, &dense_block_diagonal(&t.system, &diag))?;
        let pk = gen_eigs(&a, &dense_factorized_preconditioner(&t.system, &diag)?)?;
        let mut rows = Vec::with_capacity(2 * a.rows());
        for (label, s) in [(pd_label, pd), (pk_label, pk)] {
            rows.extend(s.into_values().into_iter().map(|eigenvalue| EigRow {
                k: recipe.k,
                trial,
                preconditioner: label.to_string(),
                eigenvalue,
            }));
        }
        Ok(rows)
    })?;
    let mut rows: Vec<EigRow> = per_trial.into_iter().flatten().collect();
    super::sort_eig_rows(&mut rows);
    Ok(rows)
}

/// MINRES iteration counts with perturbed blocks (`magnitude` taken from the recipe).
pub fn iteration_experiment(recipe: &RandomRecipe, trials: usize, opts: MinresOptions) -> Result<Vec<IterRow>> {
    let per_trial = run_parallel(trials, |trial| -> Result<Vec<IterRow>> {
        let t = random_trial(recipe, trial)?;
        let approx = scaled_blocks(&t.chain, &t.factors)?;
        let mut rows = Vec::with_capacity(2);
        for kind in [PreconditionerKind::BlockDiagonal, PreconditionerKind::Factorized] {
            let p = BlockPreconditioner::new(kind, &approx, &t.system)?;
            let start = Instant::now();
            let res = minres_lenient(&t.system, &p, &t.rhs, opts)?;
            rows.push(IterRow {
                k: recipe.k,
                preconditioner: kind.label().to_string(),
                trial,
                iterations: res.iterations,
                dof: t.system.dim(),
                converged: res.converged,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        Ok(rows)
    })?;
    let mut rows: Vec<IterRow> = per_trial.into_iter().flatten().collect();
    super::sort_iter_rows(&mut rows);
    Ok(rows)
}

/// Mean iterations and DoF per preconditioner label.
#[derive(Debug, Clone, PartialEq)]
pub struct IterSummary {
    pub k: usize,
    pub preconditioner: String,
    pub mean_iterations: f64,
    pub mean_dof: f64,
    pub trials: usize,
    pub all_converged: bool,
}

pub fn summarize(rows: &[IterRow]) -> Vec<IterSummary> {
    let mut keys: Vec<(usize, String)> = rows.iter().map(|r| (r.k, r.preconditioner.clone())).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(k, label)| {
            let sel: Vec<&IterRow> = rows.iter().filter(|r| r.k == k && r.preconditioner == label).collect();
            let n = sel.len() as f64;
            IterSummary {
                k,
                mean_iterations: sel.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                mean_dof: sel.iter().map(|r| r.dof as f64).sum::<f64>() / n,
                trials: sel.len(),
                all_converged: sel.iter().all(|r| r.converged),
                preconditioner: label,
            }
        })
        .collect()
}

/// Inclusion intervals `[lo₁, hi₁] ∪ [lo₂, hi₂]` for the spectrum of
/// `P_D⁻¹A` with exact blocks, known for `k ≤ 3`.
pub fn pd_bound_intervals(k: usize) -> Option<[(f64, f64); 2]> {
    let c = |num: f64, den: f64| 2.0 * (num * PI / den).cos();
    match k {
        1 => Some([(-1.0, c(3.0, 5.0)), (1.0, c(1.0, 5.0))]),
        2 => Some([(-c(1.0, 5.0), c(3.0, 5.0)), (c(3.0, 7.0), c(1.0, 7.0))]),
        3 => Some([(-c(1.0, 7.0), c(5.0, 9.0)), (c(3.0, 7.0), c(1.0, 9.0))]),
        _ => None,
    }
}

/// Distance from `x` to the union of the intervals (0 inside).
pub fn distance_to_intervals(x: f64, intervals: &[(f64, f64)]) -> f64 {
    intervals
        .iter()
        .map(|&(lo, hi)| if x < lo { lo - x } else if x > hi { x - hi } else { 0.0 })
        .fold(f64::INFINITY, f64::min)
}

/// `{2cos((2i+1)π/(2j+3)) : j = 0..k, i = 0..j}`.
pub fn zero_a_eigenvalue_set(k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..=k)
        .flat_map(|j| (0..=j).map(move |i| 2.0 * ((2 * i + 1) as f64 * PI / (2 * j + 3) as f64).cos()))
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Result of comparing `P_D⁻¹A` spectra for systems with `A_1 = … = A_k = 0`
/// against the closed-form set.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroASpectrum {
    /// Largest distance from a computed eigenvalue to the closed-form set.
    pub worst_mismatch: f64,
    /// Smallest eigenvalue magnitude per trial.
    pub min_abs: Vec<f64>,
}

/// Systems with equal block sizes, random SPD `A_0`, zero `A_j` (j ≥ 1) and
/// uniform random square `B_j`.
pub fn zero_a_system(recipe: &RandomRecipe, trial: usize) -> Result<BlockSaddleSystem> {
    let mut rng = recipe.trial_rng(trial);
    let n = (recipe.min_dim + recipe.dim_spread * rng.next_f64()).trunc() as usize;
    let mut diag = vec![Block::Dense(shifted_symmetric(&mut rng, n, 1.01)?)];
    diag.extend((0..recipe.k).map(|_| Block::Dense(DenseMatrix::zeros(n, n))));
    let off = (0..recipe.k).map(|_| Block::Dense(rng.uniform_matrix(n, n))).collect();
    BlockSaddleSystem::new(diag, off)
}

pub fn zero_a_spectrum_check(recipe: &RandomRecipe, trials: usize) -> Result<ZeroASpectrum> {
    let set = zero_a_eigenvalue_set(recipe.k);
    let results = run_parallel(trials, |trial| -> Result<(f64, f64)> {
        let sys = zero_a_system(recipe, trial)?;
        let chain = schur_chain(&sys)?;
        let s = gen_eigs(&sys.assemble_full(), &chain.dense_pd(&sys))?;
        let worst = s
            .values()
            .iter()
            .map(|&x| set.iter().map(|&c| (x - c).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        Ok((worst, s.min_abs()))
    })?;
    Ok(ZeroASpectrum {
        worst_mismatch: results.iter().map(|r| r.0).fold(0.0, f64::max),
        min_abs: results.iter().map(|r| r.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precond::ideal_blocks;

    #[test]
    fn sizes_in_range_and_reproducible() {
        let mut counts = [0usize; 10];
        for trial in 0..100 {
            let mut rng = RandomRecipe::new(3, 7).trial_rng(trial);
            for _ in 0..10 {
                let n = (20.0 + 10.0 * rng.next_f64()).trunc() as usize;
                assert!((20..30).contains(&n));
                counts[n - 20] += 1;
            }
        }
        assert!(counts.iter().all(|&c| c > 50), "{counts:?}");
        let a = random_system(&RandomRecipe::new(2, 1), 4).unwrap().assemble_full();
        let b = random_system(&RandomRecipe::new(2, 1), 4).unwrap().assemble_full();
        assert_eq!(a, b);
    }

    #[test]
    fn diagonal_blocks_definiteness() {
        let sys = random_system(&RandomRecipe::new(3, 2), 0).unwrap();
        let a0 = sym_eigs(&sys.a(0).to_dense()).unwrap();
        assert!(a0.min() > 0.0);
        for j in 1..=3 {
            let s = sym_eigs(&sys.a(j).to_dense()).unwrap();
            assert!(s.min() >= -1e-10, "A_{j}: {}", s.min());
        }
    }

    #[test]
    fn perturbation_factor_range() {
        let mut rng = SeededRng::new(5);
        for _ in 0..200 {
            for c in perturbation_factors(4, 0.3, &mut rng) {
                assert!((0.7..=1.3).contains(&c));
            }
        }
        let chain = schur_chain(&random_system(&RandomRecipe::new(1, 3), 0).unwrap()).unwrap();
        let (_, c) = perturbed_blocks(&chain, 0.0, &mut rng).unwrap();
        assert_eq!(c, vec![1.0, 1.0]);
    }

    #[test]
    fn interval_constants() {
        let k1 = pd_bound_intervals(1).unwrap();
        assert!((k1[0].1 - 0.5 * (1.0 - 5f64.sqrt())).abs() < 1e-15);
        assert!((k1[1].1 - 0.5 * (1.0 + 5f64.sqrt())).abs() < 1e-15);
        let k2 = pd_bound_intervals(2).unwrap();
        let printed = [-1.618, -0.618, 0.445, 1.802];
        for (x, p) in [k2[0].0, k2[0].1, k2[1].0, k2[1].1].iter().zip(printed) {
            assert!((x - p).abs() < 1e-3);
        }
        let k3 = pd_bound_intervals(3).unwrap();
        let printed = [-1.802, -0.347, 0.445, 1.879];
        for (x, p) in [k3[0].0, k3[0].1, k3[1].0, k3[1].1].iter().zip(printed) {
            assert!((x - p).abs() < 1e-3);
        }
        assert!(pd_bound_intervals(4).is_none());
        assert_eq!(distance_to_intervals(0.0, &k1), -k1[0].1);
        assert_eq!(distance_to_intervals(1.2, &k1), 0.0);
    }

    #[test]
    fn zero_a_closed_form() {
        let set = zero_a_eigenvalue_set(1);
        assert_eq!(set.len(), 3);
        let r = zero_a_spectrum_check(&RandomRecipe::new(2, 11), 3).unwrap();
        assert!(r.worst_mismatch < 1e-8, "{}", r.worst_mismatch);
        let k1 = zero_a_spectrum_check(&RandomRecipe::new(1, 11), 2).unwrap();
        let k3 = zero_a_spectrum_check(&RandomRecipe::new(3, 11), 2).unwrap();
        let min1 = k1.min_abs.iter().copied().fold(f64::INFINITY, f64::min);
        let min3 = k3.min_abs.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min3 < min1);
    }

    #[test]
    fn exact_pk_solves_in_two_or_three() {
        let recipe = RandomRecipe::new(3, 9);
        let t = random_trial(&recipe, 0).unwrap();
        let approx = ideal_blocks(&t.chain);
        let p = BlockPreconditioner::new(PreconditionerKind::Factorized, &approx, &t.system).unwrap();
        let r = crate::minres::minres(&t.system, &p, &t.rhs, MinresOptions { tol: 1e-10, maxit: None }).unwrap();
        assert!(r.iterations <= 3, "{}", r.iterations);
    }

    #[test]
    fn eig_rows_are_deterministic() {
        let recipe = RandomRecipe::new(1, 3);
        let a = eig_experiment(&recipe, 3, true).unwrap();
        let b = eig_experiment(&recipe, 3, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|r| r.preconditioner == "Pk_hat").count() * 2, a.len());
    }

    #[test]
    fn unperturbed_iterations_are_tiny() {
        let mut recipe = RandomRecipe::new(2, 4);
        recipe.perturbation = 0.0;
        let rows = iteration_experiment(&recipe, 4, MinresOptions { tol: 1e-10, maxit: None }).unwrap();
        let s = summarize(&rows);
        let pk = s.iter().find(|s| s.preconditioner == "Pk").unwrap();
        assert!(pk.mean_iterations <= 3.0);
    }
}
