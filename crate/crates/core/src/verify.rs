//! Acceptance checks, one per numbered criterion, shared by `msp verify` and
//! the `acceptance` test target.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::time::{Duration, Instant};

use crate::experiments::pde::{cheb_sweep, double_grid, matching_spectrum, quadruple_grid};
use crate::experiments::random::{
    distance_to_intervals, iteration_experiment, pd_bound_intervals, random_system, random_trial, summarize, RandomRecipe,
};
use crate::experiments::{run_parallel, PdeRow};
use crate::fem::{assemble, build_double_saddle, structured_square_mesh, QuadrupleParams, DEFAULT_RHO};
use crate::linalg::{gen_eigs, DenseMatrix};
use crate::minres::{minres, MinresOptions};
use crate::precond::{apply_pd_inverse, apply_pk_inverse, ideal_blocks, pl_unit_triangular_report, BlockPreconditioner, PreconditionerKind};
use crate::saddle::{dense_factorized_preconditioner, reconstruct_from_factorization, schur_chain};
use crate::Result;

pub const EIG_TOL: f64 = 1e-8;
pub const SOLVE_TOL: f64 = 1e-10;

/// Mean iteration counts `(P̂_D, P̂_k)` reported for the random suite, by `k`.
pub const REFERENCE_RANDOM_MEANS: [(usize, f64, f64); 4] = [(1, 29.0, 8.74), (2, 44.6, 15.2), (3, 51.2, 21.2), (5, 62.6, 27.7)];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckOutcome {
    /// `PASS  3 pd-bound-intervals: detail (1.2s)`.
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 1 }
    }
}

type CheckFn = fn(&VerifyOptions) -> Result<(bool, String)>;

struct Check {
    name: &'static str,
    time_limit: Option<Duration>,
    run: CheckFn,
}

const fn minutes(m: u64) -> Option<Duration> {
    Some(Duration::from_secs(60 * m))
}

const CHECKS: [Check; 13] = [
    Check { name: "exact-pk-two-eigenvalues", time_limit: minutes(1), run: exact_pk_two_eigenvalues },
    Check { name: "exact-pk-minres-iterations", time_limit: None, run: exact_pk_minres_iterations },
    Check { name: "pd-bound-intervals", time_limit: minutes(2), run: pd_bound_intervals_check },
    Check { name: "scaled-last-schur-spectrum", time_limit: None, run: scaled_last_schur_spectrum },
    Check { name: "factorization-identity", time_limit: None, run: factorization_identity },
    Check { name: "pl-unit-spectrum", time_limit: None, run: pl_unit_spectrum },
    Check { name: "application-counts", time_limit: None, run: application_counts },
    Check { name: "random-iteration-means", time_limit: minutes(5), run: random_iteration_means },
    Check { name: "matching-bound", time_limit: None, run: matching_bound },
    Check { name: "double-iterations", time_limit: minutes(3), run: double_iterations },
    Check { name: "chebyshev-sweep", time_limit: None, run: chebyshev_sweep },
    Check { name: "quadruple-comparison", time_limit: minutes(10), run: quadruple_comparison },
    Check { name: "fem-sanity", time_limit: None, run: fem_sanity },
];

pub fn num_checks() -> usize {
    CHECKS.len()
}

pub fn check_name(id: usize) -> Option<&'static str> {
    id.checked_sub(1).and_then(|i| CHECKS.get(i)).map(|c| c.name)
}

/// Runs criterion `id` (1-based). Errors inside a check count as failures.
pub fn run_check(id: usize, opts: &VerifyOptions) -> Option<CheckOutcome> {
    let check = CHECKS.get(id.checked_sub(1)?)?;
    let start = Instant::now();
    let (mut passed, mut detail) = match (check.run)(opts) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    if let Some(limit) = check.time_limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; exceeded time limit {}s", limit.as_secs()));
        }
    }
    Some(CheckOutcome { id, name: check.name, passed, detail, elapsed })
}

pub fn run_all(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    (1..=CHECKS.len()).filter_map(|id| run_check(id, opts)).collect()
}

fn exact_suite_ks() -> [usize; 5] {
    [1, 2, 3, 5, 10]
}

/// Eigenvalues of `P_k⁻¹A` with exact blocks are ±1 with the predicted counts.
fn exact_pk_two_eigenvalues(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut count_failures = 0;
    for k in exact_suite_ks() {
        let recipe = RandomRecipe::new(k, opts.seed);
        let per_trial = run_parallel(20, |trial| -> Result<(f64, bool)> {
            let sys = random_system(&recipe, trial)?;
            let chain = schur_chain(&sys)?;
            let spec = gen_eigs(&sys.assemble_full(), &chain.dense_pk(&sys)?)?;
            let dist = spec.values().iter().map(|&x| (x - 1.0).abs().min((x + 1.0).abs())).fold(0.0, f64::max);
            let plus = spec.values().iter().filter(|&&x| (x - 1.0).abs() <= EIG_TOL).count();
            let minus = spec.values().iter().filter(|&&x| (x + 1.0).abs() <= EIG_TOL).count();
            Ok((dist, (plus, minus) == sys.signature_counts()))
        })?;
        for (d, counts_ok) in per_trial {
            worst = worst.max(d);
            count_failures += usize::from(!counts_ok);
        }
    }
    Ok((
        worst <= EIG_TOL && count_failures == 0,
        format!("max distance to ±1 {worst:.2e}, multiplicity mismatches {count_failures}"),
    ))
}

/// MINRES with exact `P_k` needs at most 3 iterations.
fn exact_pk_minres_iterations(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst = 0;
    for k in exact_suite_ks() {
        let recipe = RandomRecipe::new(k, opts.seed);
        let its = run_parallel(20, |trial| -> Result<usize> {
            let t = random_trial(&recipe, trial)?;
            let approx = ideal_blocks(&t.chain);
            let p = BlockPreconditioner::new(PreconditionerKind::Factorized, &approx, &t.system)?;
            Ok(minres(&t.system, &p, &t.rhs, MinresOptions { tol: SOLVE_TOL, maxit: None })?.iterations)
        })?;
        worst = worst.max(its.into_iter().max().unwrap_or(0));
    }
    Ok((worst <= 3, format!("max iterations {worst}")))
}

/// Exact `P_D` spectra lie in the known intervals for `k = 1, 2, 3`.
fn pd_bound_intervals_check(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut parts = Vec::new();
    let mut ok = true;
    for k in 1..=3 {
        let intervals = pd_bound_intervals(k).expect("bounds known for k ≤ 3");
        let recipe = RandomRecipe::new(k, opts.seed);
        let dists = run_parallel(100, |trial| -> Result<f64> {
            let sys = random_system(&recipe, trial)?;
            let chain = schur_chain(&sys)?;
            let spec = gen_eigs(&sys.assemble_full(), &chain.dense_pd(&sys))?;
            Ok(spec.values().iter().map(|&x| distance_to_intervals(x, &intervals)).fold(0.0, f64::max))
        })?;
        let worst = dists.into_iter().fold(0.0, f64::max);
        ok &= worst <= EIG_TOL;
        parts.push(format!("k={k} outside by {worst:.2e}"));
    }
    Ok((ok, parts.join(", ")))
}

/// With `Ŝ_k = c S_k` the remaining `n_k` eigenvalues equal `(−1)^k / c`.
fn scaled_last_schur_spectrum(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut count_failures = 0;
    for k in 2..=4 {
        let recipe = RandomRecipe::new(k, opts.seed);
        for trial in 0..3 {
            let sys = random_system(&recipe, trial)?;
            let chain = schur_chain(&sys)?;
            let a = sys.assemble_full();
            let sizes = sys.sizes();
            let plus: usize = (0..k).filter(|j| j % 2 == 0).map(|j| sizes[j]).sum();
            let minus: usize = (0..k).filter(|j| j % 2 == 1).map(|j| sizes[j]).sum();
            for c in [0.5, 2.0] {
                let diag: Vec<DenseMatrix> =
                    (0..=k).map(|j| if j == k { chain.s(j).scaled(c) } else { chain.s(j).clone() }).collect();
                let spec = gen_eigs(&a, &dense_factorized_preconditioner(&sys, &diag)?)?;
                let target = if k % 2 == 0 { 1.0 / c } else { -1.0 / c };
                let near = |t: f64| spec.values().iter().filter(|&&x| (x - t).abs() <= EIG_TOL).count();
                let d = spec
                    .values()
                    .iter()
                    .map(|&x| (x - 1.0).abs().min((x + 1.0).abs()).min((x - target).abs()))
                    .fold(0.0, f64::max);
                worst = worst.max(d);
                if (near(1.0), near(-1.0), near(target)) != (plus, minus, sizes[k]) {
                    count_failures += 1;
                }
            }
        }
    }
    Ok((
        worst <= EIG_TOL && count_failures == 0,
        format!("max distance {worst:.2e}, multiplicity mismatches {count_failures}"),
    ))
}

/// `A = P_L P̄_D⁻¹ P_U` in the relative Frobenius norm.
fn factorization_identity(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for trial in 0..10 {
        let k = 1 + trial % 5;
        let sys = random_system(&RandomRecipe::new(k, opts.seed), trial)?;
        worst = worst.max(reconstruct_from_factorization(&sys, &schur_chain(&sys)?)?);
    }
    Ok((worst <= 1e-10, format!("max relative error {worst:.2e}")))
}

/// `P_L⁻¹A` is unit block upper triangular, so its spectrum is `{1}`.
fn pl_unit_spectrum(opts: &VerifyOptions) -> Result<(bool, String)> {
    let (mut lower, mut dev): (f64, f64) = (0.0, 0.0);
    for trial in 0..10 {
        let k = 1 + trial % 4;
        let sys = random_system(&RandomRecipe::new(k, opts.seed), trial)?;
        let report = pl_unit_triangular_report(&ideal_blocks(&schur_chain(&sys)?), &sys)?;
        lower = lower.max(report.lower_part);
        dev = dev.max(report.eig_deviation);
    }
    Ok((
        lower <= EIG_TOL && dev <= EIG_TOL,
        format!("block lower part {lower:.2e}, eigenvalue deviation bound {dev:.2e}"),
    ))
}

/// Block applications per preconditioner call.
fn application_counts(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut ok = true;
    let mut seen = String::new();
    for k in 1..=5 {
        let t = random_trial(&RandomRecipe::new(k, opts.seed), 0)?;
        let approx = ideal_blocks(&t.chain);
        approx.reset_counts();
        apply_pk_inverse(&approx, &t.system, &t.rhs)?;
        let pk = approx.use_counts();
        approx.reset_counts();
        apply_pd_inverse(&approx, &t.rhs)?;
        let pd = approx.use_counts();
        let mut expected_pk = vec![2; k + 1];
        expected_pk[k] = 1;
        ok &= pk == expected_pk && pd == vec![1; k + 1];
        if k == 3 {
            seen = format!("k=3: Pk {pk:?}, PD {pd:?}");
        }
    }
    Ok((ok, seen))
}

/// Mean iterations with perturbed blocks, within 30% of the reference means.
fn random_iteration_means(opts: &VerifyOptions) -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, ref_pd, ref_pk) in REFERENCE_RANDOM_MEANS {
        let rows = iteration_experiment(&RandomRecipe::new(k, opts.seed), 100, MinresOptions { tol: SOLVE_TOL, maxit: None })?;
        let summary = summarize(&rows);
        let mean = |label: &str| summary.iter().find(|s| s.preconditioner == label).map(|s| s.mean_iterations);
        let (Some(pd), Some(pk)) = (mean("PD"), mean("Pk")) else {
            return Ok((false, format!("k={k}: missing rows")));
        };
        let within = |x: f64, r: f64| (0.7 * r..=1.3 * r).contains(&x);
        ok &= within(pd, ref_pd) && within(pk, ref_pk) && summary.iter().all(|s| s.all_converged);
        if k >= 2 {
            ok &= pk / pd <= 0.6;
        }
        parts.push(format!("k={k} PD {pd:.1} Pk {pk:.1}"));
    }
    Ok((ok, parts.join(", ")))
}

/// Spectrum of the matching approximation of the second Schur complement.
fn matching_bound(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut cases = Vec::new();
    for level in [3, 4] {
        for alpha in [1e-6, 1e-8] {
            for lambda in [1e-8, 1e-10] {
                cases.push((level, QuadrupleParams::new(alpha, lambda)));
            }
        }
    }
    let spectra = run_parallel(cases.len(), |i| matching_spectrum(cases[i].0, cases[i].1))?;
    let lo = spectra.iter().map(|s| s.min()).fold(f64::INFINITY, f64::min);
    let hi = spectra.iter().map(|s| s.max()).fold(f64::NEG_INFINITY, f64::max);
    Ok((
        lo >= FRAC_1_SQRT_2 - EIG_TOL && hi <= SQRT_2 + EIG_TOL,
        format!("eigenvalues in [{lo:.6}, {hi:.6}]"),
    ))
}

/// Pairs up the `PD` and `Pk` rows of each grid cell (rows are sorted).
fn paired(rows: &[PdeRow]) -> Vec<(&PdeRow, &PdeRow)> {
    rows.chunks(2)
        .filter_map(|c| match c {
            [pd, pk] if pd.preconditioner == "PD" && pk.preconditioner == "Pk" => Some((pd, pk)),
            _ => None,
        })
        .collect()
}

fn solve_opts() -> MinresOptions {
    MinresOptions { tol: SOLVE_TOL, maxit: None }
}

fn double_iterations(_: &VerifyOptions) -> Result<(bool, String)> {
    let rows = double_grid(&[4, 5, 6], &[1.0, 1e-2, 1e-4], 5, solve_opts())?;
    let pairs = paired(&rows);
    let mut bad = Vec::new();
    for (pd, pk) in &pairs {
        if !(pd.converged && pk.converged && pk.iterations <= 15 && pd.iterations <= 35 && pk.iterations <= pd.iterations) {
            bad.push(format!("h=2^-{} α={:e}: PD {} Pk {}", pd.level, pd.alpha, pd.iterations, pk.iterations));
        }
    }
    let max_pd = pairs.iter().map(|p| p.0.iterations).max().unwrap_or(0);
    let max_pk = pairs.iter().map(|p| p.1.iterations).max().unwrap_or(0);
    let mut detail = format!("{} cells, max PD {max_pd}, max Pk {max_pk}", pairs.len());
    if !bad.is_empty() {
        detail.push_str(&format!("; violations: {}", bad.join("; ")));
    }
    Ok((pairs.len() == 9 && bad.is_empty(), detail))
}

pub const CHEB_STEPS: [usize; 8] = [1, 2, 3, 4, 5, 7, 10, 20];

fn chebyshev_sweep(_: &VerifyOptions) -> Result<(bool, String)> {
    let levels = [4, 5, 6];
    let rows = cheb_sweep(&levels, &CHEB_STEPS, 1e-2, solve_opts())?;
    let mut bad = Vec::new();
    for level in levels {
        let its = |label: &str| -> Vec<usize> {
            CHEB_STEPS
                .iter()
                .filter_map(|&m| {
                    rows.iter()
                        .find(|r| r.level == level && r.cheb_m == m && r.preconditioner == label)
                        .map(|r| r.iterations)
                })
                .collect()
        };
        let (pd, pk) = (its("PD"), its("Pk"));
        if pd.len() != CHEB_STEPS.len() || pk.len() != CHEB_STEPS.len() {
            bad.push(format!("h=2^-{level}: missing rows"));
            continue;
        }
        for (label, seq) in [("PD", &pd), ("Pk", &pk)] {
            let mut best = seq[0];
            for (&m, &it) in CHEB_STEPS.iter().zip(seq.iter()) {
                if it > best + 2 {
                    bad.push(format!("h=2^-{level} {label} rises to {it} at m={m}"));
                }
                best = best.min(it);
            }
        }
        let rel = (pk[0] as f64 - pd[0] as f64).abs() / pd[0] as f64;
        if rel > 0.2 {
            bad.push(format!("h=2^-{level} m=1: PD {} Pk {}", pd[0], pk[0]));
        }
        for (i, &m) in CHEB_STEPS.iter().enumerate().filter(|(_, &m)| m >= 3) {
            if pk[i] as f64 > 0.7 * pd[i] as f64 {
                bad.push(format!("h=2^-{level} m={m}: PD {} Pk {}", pd[i], pk[i]));
            }
        }
    }
    let all_converged = rows.iter().all(|r| r.converged);
    let detail = if bad.is_empty() { format!("{} runs", rows.len()) } else { bad.join("; ") };
    Ok((bad.is_empty() && all_converged, detail))
}

fn quadruple_comparison(_: &VerifyOptions) -> Result<(bool, String)> {
    let rows = quadruple_grid(&[3, 4, 5], &[1e-6, 1e-8, 1e-10], &[1e-8, 1e-10], DEFAULT_RHO, 5, solve_opts())?;
    let pairs = paired(&rows);
    let all_converged = rows.iter().all(|r| r.converged);
    let ordered = pairs.iter().all(|(pd, pk)| pk.iterations <= pd.iterations);
    let ratio = pairs.iter().map(|(pd, pk)| pk.iterations as f64 / pd.iterations as f64).sum::<f64>() / pairs.len().max(1) as f64;
    Ok((
        pairs.len() == 18 && all_converged && ordered && ratio <= 0.75,
        format!("{} cells, converged {all_converged}, Pk ≤ PD everywhere {ordered}, mean ratio {ratio:.3}", pairs.len()),
    ))
}

fn fem_sanity(_: &VerifyOptions) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for level in 1..=6 {
        let ops = assemble(&structured_square_mesh(level))?;
        let ones = vec![1.0; ops.mass.rows()];
        let mass_sum: f64 = ops.mass.matvec(&ones).iter().sum();
        let perimeter: f64 = ops.boundary_mass.matvec(&ones).iter().sum();
        let kernel = ops.stiffness.matvec(&ones).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst.max((mass_sum - 1.0).abs()).max((perimeter - 4.0).abs()).max(kernel);
    }
    let dof = build_double_saddle(4, 1.0)?.system.dim();
    Ok((worst <= 1e-12 && dof == 867, format!("max defect {worst:.2e}, DoF at h=2^-4 {dof}")))
}
