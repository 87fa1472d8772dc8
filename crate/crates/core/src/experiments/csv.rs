//! CSV output. Floats carry 17 significant digits; timing columns are only
//! written on request so that repeated runs give identical files.

use std::io::Write;

use super::{EigRow, IterRow, PdeRow};
use crate::Result;

pub const EIGS_HEADER: &str = "k,trial,preconditioner,eigenvalue";
pub const ITERS_HEADER: &str = "k,preconditioner,trial,iterations,dof,converged";
pub const PDE_HEADER: &str = "problem,h,alpha,lambda,rho,cheb_m,preconditioner,iterations,converged,dof";

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_eigs<W: Write>(mut w: W, rows: &[EigRow]) -> Result<()> {
    writeln!(w, "{EIGS_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.k, r.trial, r.preconditioner, fmt_f64(r.eigenvalue))?;
    }
    Ok(())
}

pub fn write_iters<W: Write>(mut w: W, rows: &[IterRow], timings: bool) -> Result<()> {
    writeln!(w, "{ITERS_HEADER}{}", if timings { ",seconds" } else { "" })?;
    for r in rows {
        write!(w, "{},{},{},{},{},{}", r.k, r.preconditioner, r.trial, r.iterations, r.dof, r.converged)?;
        if timings {
            write!(w, ",{}", fmt_f64(r.seconds))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_pde<W: Write>(mut w: W, rows: &[PdeRow], timings: bool) -> Result<()> {
    writeln!(w, "{PDE_HEADER}{}", if timings { ",seconds" } else { "" })?;
    for r in rows {
        write!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.problem,
            fmt_f64(r.h),
            fmt_f64(r.alpha),
            fmt_opt(r.lambda),
            fmt_opt(r.rho),
            r.cheb_m,
            r.preconditioner,
            r.iterations,
            r.converged,
            r.dof
        )?;
        if timings {
            write!(w, ",{}", fmt_f64(r.seconds))?;
        }
        writeln!(w)?;
    }
    Ok(())
}
