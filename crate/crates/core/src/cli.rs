//! Command-line front end for the `msp` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::experiments::csv::{write_eigs, write_iters, write_pde};
use crate::experiments::pde::{cheb_sweep, double_grid, quadruple_grid};
use crate::experiments::random::{distance_to_intervals, eig_experiment, iteration_experiment, pd_bound_intervals, summarize, RandomRecipe};
use crate::experiments::{EigRow, PdeRow};
use crate::fem::DEFAULT_RHO;
use crate::minres::MinresOptions;
use crate::verify::{self, VerifyOptions, CHEB_STEPS, EIG_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "msp", version, about = "Preconditioned MINRES experiments for multiple saddle-point systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the exactly preconditioned random systems, checked against the known intervals.
    EigBounds(RandomArgs),
    /// Eigenvalues with randomly scaled blocks.
    EigPerturbed(RandomArgs),
    /// Mean MINRES iterations on random systems with scaled blocks.
    ItersRandom(RandomArgs),
    /// Double saddle-point problem on the unit square over an h × α grid.
    PdeDouble(PdeArgs),
    /// Quadruple saddle-point problem on the unit disc over an h × α × λ grid.
    PdeQuadruple(PdeArgs),
    /// Double problem at fixed α for several Chebyshev step counts.
    ChebSweep(PdeArgs),
    /// Runs the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Relative preconditioned residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub maxit: Option<usize>,
    /// Output CSV path (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append a wall-clock `seconds` column.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RandomArgs {
    /// Comma-separated list of k.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PdeArgs {
    /// Mesh widths, e.g. `0.0625` or `2^-4`.
    #[arg(long, value_delimiter = ',', value_parser = parse_h)]
    pub h: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    /// Chebyshev steps for the mass matrix (a list for `cheb-sweep`).
    #[arg(long = "cheb-m", value_delimiter = ',')]
    pub cheb_m: Vec<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated criterion numbers; all if omitted.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<usize>,
}

/// Parses a mesh width `2^-l` (as a number or literally `2^-l`) into `l`.
pub fn parse_h(s: &str) -> Result<u32, String> {
    let level = if let Some(exp) = s.trim().strip_prefix("2^-") {
        exp.parse::<u32>().map_err(|_| format!("bad exponent in '{s}'"))?
    } else {
        let h: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
        if !(h > 0.0 && h <= 1.0) {
            return Err(format!("h = {s} must lie in (0, 1]"));
        }
        let l = -h.log2();
        if (l - l.round()).abs() > 1e-12 {
            return Err(format!("h = {s} is not a power of two"));
        }
        l.round() as u32
    };
    if !(1..=10).contains(&level) {
        return Err(format!("h = 2^-{level} outside the supported range 2^-1..2^-10"));
    }
    Ok(level)
}

fn or_default<T: Clone>(v: &[T], default: &[T]) -> Vec<T> {
    if v.is_empty() { default.to_vec() } else { v.to_vec() }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(String),
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

fn minres_options(c: &CommonArgs) -> Result<MinresOptions, Failure> {
    if !(c.tol > 0.0) {
        return Err(Failure::Usage(format!("--tol must be positive, got {}", c.tol)));
    }
    Ok(MinresOptions { tol: c.tol, maxit: c.maxit })
}

fn positive(name: &str, values: &[f64]) -> Result<(), Failure> {
    match values.iter().find(|&&v| !(v > 0.0)) {
        Some(v) => Err(Failure::Usage(format!("--{name} values must be positive, got {v}"))),
        None => Ok(()),
    }
}

fn check_ks(ks: &[usize]) -> Result<(), Failure> {
    if ks.contains(&0) {
        return Err(Failure::Usage("--k values must be at least 1".into()));
    }
    Ok(())
}

/// Writes CSV to `--out` or to `out`.
fn emit(common: &CommonArgs, out: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> crate::Result<()>) -> Result<(), Failure> {
    match &common.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(out)?,
    }
    Ok(())
}

fn random_eigs(args: &RandomArgs, perturbed: bool, default_k: &[usize]) -> Result<Vec<EigRow>, Failure> {
    let ks = or_default(&args.k, default_k);
    check_ks(&ks)?;
    let mut rows = Vec::new();
    for k in ks {
        rows.extend(eig_experiment(&RandomRecipe::new(k, args.common.seed), args.trials, perturbed)?);
    }
    Ok(rows)
}

fn eig_bounds(args: &RandomArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, Failure> {
    let rows = random_eigs(args, false, &[1, 2, 3])?;
    emit(&args.common, out, |w| write_eigs(w, &rows))?;
    let mut ok = true;
    let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
    ks.dedup();
    for k in ks {
        let sel = |label: &'static str| rows.iter().filter(move |r| r.k == k && r.preconditioner == label);
        let pk_dist = sel("Pk").map(|r| (r.eigenvalue.abs() - 1.0).abs()).fold(0.0, f64::max);
        ok &= pk_dist <= EIG_TOL;
        match pd_bound_intervals(k) {
            Some(iv) => {
                let d = sel("PD").map(|r| distance_to_intervals(r.eigenvalue, &iv)).fold(0.0, f64::max);
                ok &= d <= EIG_TOL;
                writeln!(err, "k={k}: PD outside intervals by {d:.2e}, Pk distance to ±1 {pk_dist:.2e}")?;
            }
            None => writeln!(err, "k={k}: no interval bound known, Pk distance to ±1 {pk_dist:.2e}")?,
        }
    }
    Ok(ok)
}

fn eig_perturbed(args: &RandomArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, Failure> {
    let rows = random_eigs(args, true, &[2, 3, 5, 10])?;
    emit(&args.common, out, |w| write_eigs(w, &rows))?;
    let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.k, r.trial)).collect();
    keys.dedup();
    let mut ks: Vec<usize> = keys.iter().map(|p| p.0).collect();
    ks.dedup();
    for k in ks {
        let trials: Vec<usize> = keys.iter().filter(|p| p.0 == k).map(|p| p.1).collect();
        let wins = trials
            .iter()
            .filter(|&&t| {
                let min_abs = |label: &str| {
                    rows.iter()
                        .filter(|r| r.k == k && r.trial == t && r.preconditioner == label)
                        .map(|r| r.eigenvalue.abs())
                        .fold(f64::INFINITY, f64::min)
                };
                min_abs("Pk_hat") >= min_abs("PD_hat")
            })
            .count();
        writeln!(err, "k={k}: smallest |eigenvalue| larger with Pk_hat in {wins}/{} trials", trials.len())?;
    }
    Ok(true)
}

fn iters_random(args: &RandomArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, Failure> {
    let opts = minres_options(&args.common)?;
    let ks = or_default(&args.k, &[1, 2, 3, 4, 5, 10, 15, 20]);
    check_ks(&ks)?;
    let mut rows = Vec::new();
    for k in ks {
        rows.extend(iteration_experiment(&RandomRecipe::new(k, args.common.seed), args.trials, opts)?);
    }
    emit(&args.common, out, |w| write_iters(w, &rows, args.common.timings))?;
    let summary = summarize(&rows);
    for s in &summary {
        writeln!(
            err,
            "k={} {}: mean iterations {:.2}, mean DoF {:.1}, all converged {}",
            s.k, s.preconditioner, s.mean_iterations, s.mean_dof, s.all_converged
        )?;
    }
    Ok(summary.iter().all(|s| s.all_converged))
}

fn report_pde(rows: &[PdeRow], common: &CommonArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, Failure> {
    emit(common, out, |w| write_pde(w, rows, common.timings))?;
    let failed: Vec<&PdeRow> = rows.iter().filter(|r| !r.converged).collect();
    for r in &failed {
        writeln!(
            err,
            "not converged: {} h=2^-{} alpha={:e} lambda={:?} m={} {} after {} iterations",
            r.problem, r.level, r.alpha, r.lambda, r.cheb_m, r.preconditioner, r.iterations
        )?;
    }
    writeln!(err, "{} runs, {} not converged", rows.len(), failed.len())?;
    Ok(failed.is_empty())
}

fn single_cheb_m(args: &PdeArgs) -> Result<usize, Failure> {
    match args.cheb_m.as_slice() {
        [] => Ok(crate::approx::DEFAULT_CHEB_STEPS),
        [m] => Ok(*m),
        _ => Err(Failure::Usage("--cheb-m takes a single value here".into())),
    }
}

fn pde_double(args: &PdeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, Failure> {
    let opts = minres_options(&args.common)?;
    let alphas = or_default(&args.alpha, &[1.0, 1e-1, 1e-2, 1e-3, 1e-4]);
    positive("alpha", &alphas)?;
    let m = single_cheb_m(args)?;
    let rows = double_grid(&or_default(&args.h, &[4, 5, 6]), &alphas, m, opts)?;
    report_pde(&rows, &args.common, out, err)
}

fn pde_quadruple(args: &PdeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, Failure> {
    let opts = minres_options(&args.common)?;
    let alphas = or_default(&args.alpha, &[1e-6, 1e-8, 1e-10]);
    let lambdas = or_default(&args.lambda, &[1e-8, 1e-10]);
    positive("alpha", &alphas)?;
    positive("lambda", &lambdas)?;
    positive("rho", &[args.rho])?;
    let m = single_cheb_m(args)?;
    let rows = quadruple_grid(&or_default(&args.h, &[3, 4, 5]), &alphas, &lambdas, args.rho, m, opts)?;
    report_pde(&rows, &args.common, out, err)
}

fn cheb(args: &PdeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, Failure> {
    let opts = minres_options(&args.common)?;
    let alpha = match args.alpha.as_slice() {
        [] => 1e-2,
        [a] => *a,
        _ => return Err(Failure::Usage("--alpha takes a single value for cheb-sweep".into())),
    };
    positive("alpha", &[alpha])?;
    let steps = or_default(&args.cheb_m, &CHEB_STEPS);
    if steps.contains(&0) {
        return Err(Failure::Usage("--cheb-m values must be at least 1".into()));
    }
    let rows = cheb_sweep(&or_default(&args.h, &[4, 5, 6]), &steps, alpha, opts)?;
    report_pde(&rows, &args.common, out, err)
}

fn run_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<bool, Failure> {
    let ids = if args.only.is_empty() { (1..=verify::num_checks()).collect() } else { args.only.clone() };
    if let Some(bad) = ids.iter().find(|&&id| verify::check_name(id).is_none()) {
        return Err(Failure::Usage(format!("no criterion {bad}; valid range is 1..={}", verify::num_checks())));
    }
    let opts = VerifyOptions { seed: args.seed };
    let mut ok = true;
    for id in ids {
        let outcome = verify::run_check(id, &opts).expect("id validated");
        writeln!(out, "{}", outcome.line())?;
        out.flush()?;
        ok &= outcome.passed;
    }
    Ok(ok)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::EigBounds(a) => eig_bounds(a, out, err),
        Command::EigPerturbed(a) => eig_perturbed(a, out, err),
        Command::ItersRandom(a) => iters_random(a, out, err),
        Command::PdeDouble(a) => pde_double(a, out, err),
        Command::PdeQuadruple(a) => pde_quadruple(a, out, err),
        Command::ChebSweep(a) => cheb(a, out, err),
        Command::Verify(a) => run_verify(a, out),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Run(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILED
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
