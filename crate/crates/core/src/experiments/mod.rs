//! Experiment drivers producing plain row tables.

pub mod csv;
pub mod pde;
pub mod random;

use rayon::prelude::*;
use serde::Serialize;

use crate::Result;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MSP_THREADS";

/// Thread pool honouring [`THREADS_ENV`]; rayon's default otherwise.
pub fn pool() -> rayon::ThreadPool {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool construction")
}

/// Evaluates `f(0..n)` in parallel, keeping index order; the first error wins.
pub fn run_parallel<R: Send>(n: usize, f: impl Fn(usize) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigRow {
    pub k: usize,
    pub trial: usize,
    pub preconditioner: String,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterRow {
    pub k: usize,
    pub preconditioner: String,
    pub trial: usize,
    pub iterations: usize,
    pub dof: usize,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeRow {
    pub problem: String,
    pub level: u32,
    pub h: f64,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub cheb_m: usize,
    pub preconditioner: String,
    pub iterations: usize,
    pub converged: bool,
    pub dof: usize,
    pub seconds: f64,
}

pub fn sort_eig_rows(rows: &mut [EigRow]) {
    rows.sort_by(|a, b| {
        (a.k, a.trial, &a.preconditioner)
            .cmp(&(b.k, b.trial, &b.preconditioner))
            .then(a.eigenvalue.total_cmp(&b.eigenvalue))
    });
}

pub fn sort_iter_rows(rows: &mut [IterRow]) {
    rows.sort_by(|a, b| (a.k, &a.preconditioner, a.trial).cmp(&(b.k, &b.preconditioner, b.trial)));
}

/// Problem, level, then `λ` and `α` descending, then `m` and preconditioner.
pub fn sort_pde_rows(rows: &mut [PdeRow]) {
    rows.sort_by(|a, b| {
        (&a.problem, a.level)
            .cmp(&(&b.problem, b.level))
            .then(b.lambda.unwrap_or(0.0).total_cmp(&a.lambda.unwrap_or(0.0)))
            .then(b.alpha.total_cmp(&a.alpha))
            .then((a.cheb_m, &a.preconditioner).cmp(&(b.cheb_m, &b.preconditioner)))
    });
}
