//! Multiple saddle-point systems, their Schur complement preconditioners and
//! a preconditioned MINRES solver.

pub mod approx;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod linalg;
pub mod minres;
pub mod operator;
pub mod precond;
pub mod saddle;
pub mod verify;

pub use error::{Error, Result};
