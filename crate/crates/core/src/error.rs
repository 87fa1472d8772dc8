use thiserror::Error;

use crate::minres::MinresResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("eigenvalue iteration did not converge for index {index}")]
    NoConvergence { index: usize },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("block A_{0} is not positive semi-definite")]
    NotSemiDefinite(usize),

    #[error("Schur complement S_{0} is not positive definite")]
    SchurNotSpd(usize),

    #[error("invalid block system: {0}")]
    InvalidSystem(String),

    #[error("scaling factor c_{index} = {value} must be positive")]
    NonPositiveFactor { index: usize, value: f64 },

    #[error("preconditioner is not symmetric positive definite")]
    NotSpdPreconditioner,

    #[error("unsupported element type: {0}")]
    UnsupportedElement(String),

    #[error("inactive set is empty")]
    EmptyInactiveSet,

    #[error("degenerate triangle {index} (signed area {area:.3e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("MINRES breakdown at iteration {iteration}")]
    Breakdown { iteration: usize },

    #[error("preconditioner produced a negative inner product at iteration {iteration}")]
    IndefinitePreconditioner { iteration: usize },

    #[error("MINRES did not converge within {} iterations (relative residual {:.3e})",
        .0.iterations, .0.residual_history.last().copied().unwrap_or(f64::NAN))]
    MaxIterations(Box<MinresResult>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
