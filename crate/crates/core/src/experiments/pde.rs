//! Iteration counts for the finite element problems.

use std::time::Instant;

use super::{run_parallel, PdeRow};
use crate::approx::{double_block_approximations, quadruple_block_approximations};
use crate::fem::{build_double_saddle, build_quadruple_saddle, mesh_width, QuadrupleParams};
use crate::linalg::{cholesky, gen_eigs, Spectrum};
use crate::minres::{minres_lenient, MinresOptions};
use crate::precond::{BlockApproxSet, BlockPreconditioner, PreconditionerKind};
use crate::saddle::BlockSaddleSystem;
use crate::Result;

const KINDS: [PreconditionerKind; 2] = [PreconditionerKind::BlockDiagonal, PreconditionerKind::Factorized];

/// Problem description shared by the rows of one grid cell.
#[derive(Debug, Clone, Copy)]
struct Cell {
    problem: &'static str,
    level: u32,
    alpha: f64,
    lambda: Option<f64>,
    rho: Option<f64>,
    cheb_m: usize,
}

fn solve_both(
    cell: Cell,
    sys: &BlockSaddleSystem,
    approx: &BlockApproxSet,
    rhs: &[f64],
    opts: MinresOptions,
) -> Result<Vec<PdeRow>> {
    KINDS
        .iter()
        .map(|&kind| {
            let p = BlockPreconditioner::new(kind, approx, sys)?;
            let start = Instant::now();
            let res = minres_lenient(sys, &p, rhs, opts)?;
            Ok(PdeRow {
                problem: cell.problem.to_string(),
                level: cell.level,
                h: mesh_width(cell.level),
                alpha: cell.alpha,
                lambda: cell.lambda,
                rho: cell.rho,
                cheb_m: cell.cheb_m,
                preconditioner: kind.label().to_string(),
                iterations: res.iterations,
                converged: res.converged,
                dof: sys.dim(),
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Both preconditioners on the double problem at one `(h, α, m)`.
pub fn double_cell(level: u32, alpha: f64, cheb_m: usize, opts: MinresOptions) -> Result<Vec<PdeRow>> {
    let problem = build_double_saddle(level, alpha)?;
    let approx = double_block_approximations(&problem, cheb_m)?;
    let cell = Cell { problem: "double", level, alpha, lambda: None, rho: None, cheb_m };
    solve_both(cell, &problem.system, &approx, &problem.rhs, opts)
}

/// Both preconditioners on the quadruple problem at one `(h, α, λ)`.
pub fn quadruple_cell(level: u32, params: QuadrupleParams, cheb_m: usize, opts: MinresOptions) -> Result<Vec<PdeRow>> {
    let problem = build_quadruple_saddle(level, params)?;
    let approx = quadruple_block_approximations(&problem, cheb_m)?;
    let cell = Cell {
        problem: "quadruple",
        level,
        alpha: params.alpha,
        lambda: Some(params.lambda),
        rho: Some(params.rho),
        cheb_m,
    };
    solve_both(cell, &problem.system, &approx, &problem.rhs, opts)
}

fn collect_sorted(cells: Vec<Vec<PdeRow>>) -> Vec<PdeRow> {
    let mut rows: Vec<PdeRow> = cells.into_iter().flatten().collect();
    super::sort_pde_rows(&mut rows);
    rows
}

pub fn double_grid(levels: &[u32], alphas: &[f64], cheb_m: usize, opts: MinresOptions) -> Result<Vec<PdeRow>> {
    let grid: Vec<(u32, f64)> = levels.iter().flat_map(|&l| alphas.iter().map(move |&a| (l, a))).collect();
    let cells = run_parallel(grid.len(), |i| double_cell(grid[i].0, grid[i].1, cheb_m, opts))?;
    Ok(collect_sorted(cells))
}

/// Double problem at fixed `α` for several Chebyshev step counts.
pub fn cheb_sweep(levels: &[u32], steps: &[usize], alpha: f64, opts: MinresOptions) -> Result<Vec<PdeRow>> {
    let grid: Vec<(u32, usize)> = levels.iter().flat_map(|&l| steps.iter().map(move |&m| (l, m))).collect();
    let cells = run_parallel(grid.len(), |i| double_cell(grid[i].0, alpha, grid[i].1, opts))?;
    Ok(collect_sorted(cells))
}

pub fn quadruple_grid(
    levels: &[u32],
    alphas: &[f64],
    lambdas: &[f64],
    rho: f64,
    cheb_m: usize,
    opts: MinresOptions,
) -> Result<Vec<PdeRow>> {
    let mut grid = Vec::new();
    for &l in levels {
        for &lambda in lambdas {
            for &alpha in alphas {
                grid.push((l, QuadrupleParams { alpha, lambda, rho }));
            }
        }
    }
    let cells = run_parallel(grid.len(), |i| quadruple_cell(grid[i].0, grid[i].1, cheb_m, opts))?;
    Ok(collect_sorted(cells))
}

/// Eigenvalues of `Ŝ₂⁻¹ S̃₂` on the disc mesh, with `S̃₂ = M + γ K M⁻¹ K` and
/// `Ŝ₂ = (1/√2)(M + √γ K) M⁻¹ (M + √γ K)`, `γ = α + λ`, formed densely.
pub fn matching_spectrum(level: u32, params: QuadrupleParams) -> Result<Spectrum> {
    let problem = build_quadruple_saddle(level, params)?;
    let gamma = params.alpha + params.lambda;
    let m = problem.ops.mass.to_dense();
    let k = problem.ops.stiffness.to_dense();
    let mf = cholesky(&m)?;
    let minv_k = mf.solve_matrix(&k)?;
    let mut s_tilde = m.add_scaled(gamma, &k.matmul(&minv_k));
    s_tilde.symmetrize();
    let f = m.add_scaled(gamma.sqrt(), &k);
    let minv_f = mf.solve_matrix(&f)?;
    let mut s_hat = f.matmul(&minv_f).scaled(std::f64::consts::FRAC_1_SQRT_2);
    s_hat.symmetrize();
    gen_eigs(&s_tilde, &s_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> MinresOptions {
        MinresOptions { tol: 1e-10, maxit: None }
    }

    #[test]
    fn double_small_grid_runs() {
        let rows = double_cell(3, 1e-2, 5, opts()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.converged));
        assert_eq!(rows[0].dof, 3 * 81);
    }

    #[test]
    fn quadruple_small_runs() {
        let rows = quadruple_cell(2, QuadrupleParams::new(1e-6, 1e-8), 5, opts()).unwrap();
        assert!(rows.iter().all(|r| r.converged), "{rows:?}");
    }

    #[test]
    fn matching_bound_small() {
        let s = matching_spectrum(2, QuadrupleParams::new(1e-6, 1e-8)).unwrap();
        assert!(s.min() >= std::f64::consts::FRAC_1_SQRT_2 - 1e-8);
        assert!(s.max() <= std::f64::consts::SQRT_2 + 1e-8);
    }

    #[test]
    fn matching_tends_to_sqrt2_for_tiny_gamma() {
        for (half_gamma, tol) in [(5e-17, 1e-2), (5e-21, 1e-6)] {
            let params = QuadrupleParams { alpha: half_gamma, lambda: half_gamma, rho: 1e-5 };
            let s = matching_spectrum(2, params).unwrap();
            assert!((s.min() - std::f64::consts::SQRT_2).abs() < tol, "{half_gamma}: {} {}", s.min(), s.max());
            assert!((s.max() - std::f64::consts::SQRT_2).abs() < tol);
        }
    }
}
