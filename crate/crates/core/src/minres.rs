//! Preconditioned MINRES for symmetric (possibly indefinite) systems with an
//! SPD preconditioner, following the Lanczos/Givens recurrence of Paige and
//! Saunders. The stopping test uses the preconditioned residual norm
//! `‖r_j‖_{M⁻¹} / ‖b‖_{M⁻¹}` tracked by the recurrence.

use serde::Serialize;

use crate::linalg::{axpy, dot};
use crate::operator::LinearOperator;
use crate::{Error, Result};

/// Relative tolerances below this are raised to it.
pub const TOL_FLOOR: f64 = 1e-14;

/// Upper limit on the default iteration budget.
pub const MAXIT_CAP: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinresResult {
    pub solution: Vec<f64>,
    /// Number of matrix-vector products with `A`.
    pub iterations: usize,
    /// Relative preconditioned residual norms; `[0] = 1`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl MinresResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

/// `min(10 n, 50 000)`.
pub fn default_maxit(n: usize) -> usize {
    (10 * n).min(MAXIT_CAP)
}

#[derive(Debug, Clone, Copy)]
pub struct MinresOptions {
    pub tol: f64,
    pub maxit: Option<usize>,
}

impl Default for MinresOptions {
    fn default() -> Self {
        Self { tol: 1e-8, maxit: None }
    }
}

/// Solves `A x = b` from `x₀ = 0`, with `m_inv` applying the inverse of an
/// SPD preconditioner.
pub fn minres(
    a: &dyn LinearOperator,
    m_inv: &dyn LinearOperator,
    b: &[f64],
    opts: MinresOptions,
) -> Result<MinresResult> {
    let n = a.dim();
    crate::linalg::check_len(n, b.len())?;
    crate::linalg::check_len(n, m_inv.dim())?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let tol = opts.tol.max(TOL_FLOOR);
    let maxit = opts.maxit.unwrap_or_else(|| default_maxit(n));

    let mut x = vec![0.0; n];
    let mut history = vec![1.0];

    let mut r1 = b.to_vec();
    let mut y = m_inv.apply_vec(&r1);
    let beta1_sq = dot(&r1, &y);
    if beta1_sq < 0.0 {
        return Err(Error::IndefinitePreconditioner { iteration: 0 });
    }
    if beta1_sq == 0.0 {
        return Ok(MinresResult { solution: x, iterations: 0, residual_history: history, converged: true });
    }
    let beta1 = beta1_sq.sqrt();

    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let mut phibar = beta1;
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w1 = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut itn = 0;

    while itn < maxit {
        itn += 1;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        a.apply(&v, &mut y);
        if itn >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        m_inv.apply(&r2, &mut y);
        oldb = beta;
        let beta_sq = dot(&r2, &y);
        if beta_sq < 0.0 {
            return Err(Error::IndefinitePreconditioner { iteration: itn });
        }
        if !beta_sq.is_finite() || !alfa.is_finite() {
            return Err(Error::Breakdown { iteration: itn });
        }
        beta = beta_sq.sqrt();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
        }
        axpy(phi, &w, &mut x);

        let rel = phibar / beta1;
        history.push(rel);
        if rel <= tol {
            return Ok(MinresResult { solution: x, iterations: itn, residual_history: history, converged: true });
        }
        if beta == 0.0 {
            // invariant subspace found without meeting the tolerance
            return Err(Error::Breakdown { iteration: itn });
        }
    }
    Err(Error::MaxIterations(Box::new(MinresResult {
        solution: x,
        iterations: itn,
        residual_history: history,
        converged: false,
    })))
}

/// Convenience wrapper that turns `MaxIterations` into an unconverged result.
pub fn minres_lenient(
    a: &dyn LinearOperator,
    m_inv: &dyn LinearOperator,
    b: &[f64],
    opts: MinresOptions,
) -> Result<MinresResult> {
    match minres(a, m_inv, b, opts) {
        Err(Error::MaxIterations(r)) => Ok(*r),
        other => other,
    }
}
