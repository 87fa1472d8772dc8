//! C ABI over the `multisaddle` library.
//!
//! Objects are opaque handles created by `msp_*_new`/`msp_*_build`-style
//! functions and released with the matching `*_free`. Every function returns
//! an [`MspStatus`]; on failure a description is available from
//! [`msp_last_error`] on the same thread. Panics never cross the boundary.
//!
//! Dense matrices are passed row-major. Vectors are passed as a pointer plus
//! a length that must equal the relevant dimension.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use multisaddle::approx::{double_block_approximations, quadruple_block_approximations};
use multisaddle::experiments::random::{random_trial, RandomRecipe};
use multisaddle::fem::{build_double_saddle, build_quadruple_saddle, DoubleProblem, QuadrupleParams, QuadrupleProblem};
use multisaddle::linalg::{Block, DenseMatrix};
use multisaddle::minres::{minres, MinresOptions};
use multisaddle::operator::LinearOperator;
use multisaddle::precond::{ideal_blocks, scaled_blocks, BlockApproxSet, BlockPreconditioner, PreconditionerKind};
use multisaddle::saddle::{schur_chain, BlockSaddleSystem};
use multisaddle::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPositiveDefinite = 4,
    SchurNotSpd = 5,
    NotConverged = 6,
    Breakdown = 7,
    Io = 8,
    Parse = 9,
    Panic = 10,
    Internal = 11,
}

/// Preconditioner structure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MspPreconditionerKind {
    /// `diag(Â_0, Ŝ_1, …, Ŝ_k)`.
    BlockDiagonal = 0,
    /// `P_L P_D⁻¹ P_U`.
    Factorized = 1,
}

impl From<MspPreconditionerKind> for PreconditionerKind {
    fn from(k: MspPreconditionerKind) -> Self {
        match k {
            MspPreconditionerKind::BlockDiagonal => PreconditionerKind::BlockDiagonal,
            MspPreconditionerKind::Factorized => PreconditionerKind::Factorized,
        }
    }
}

enum Origin {
    Plain,
    Double(Box<DoubleProblem>),
    Quadruple(Box<QuadrupleProblem>),
}

struct SystemData {
    system: BlockSaddleSystem,
    rhs: Option<Vec<f64>>,
    origin: Origin,
}

/// Opaque block saddle-point system.
pub struct MspSystem {
    inner: Arc<SystemData>,
}

/// Opaque preconditioner; keeps its system alive.
pub struct MspPreconditioner {
    system: Arc<SystemData>,
    approx: BlockApproxSet,
    kind: PreconditionerKind,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(MspStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } => MspStatus::DimensionMismatch,
            Error::NotPositiveDefinite { .. } | Error::NotSemiDefinite(_) | Error::NotSpdPreconditioner => {
                MspStatus::NotPositiveDefinite
            }
            Error::IndefinitePreconditioner { .. } => MspStatus::NotPositiveDefinite,
            Error::SchurNotSpd(_) => MspStatus::SchurNotSpd,
            Error::MaxIterations(_) => MspStatus::NotConverged,
            Error::Breakdown { .. } => MspStatus::Breakdown,
            Error::Io(_) => MspStatus::Io,
            Error::Parse(_) | Error::Json(_) => MspStatus::Parse,
            Error::NotSymmetric(_)
            | Error::InvalidSystem(_)
            | Error::NonPositiveFactor { .. }
            | Error::NonFinite
            | Error::EmptyInactiveSet
            | Error::DegenerateTriangle { .. }
            | Error::UnsupportedElement(_) => MspStatus::InvalidArgument,
            _ => MspStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(MspStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure(MspStatus::NullPointer, format!("{name} is null"))
}

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            MspStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            MspStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(name))
}

fn expect_len(name: &str, got: usize, want: usize) -> Result<(), Failure> {
    if got != want {
        return Err(Failure(MspStatus::DimensionMismatch, format!("{name}: length {got}, expected {want}")));
    }
    Ok(())
}

unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, Failure> {
    if ptr.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(ptr).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn emit_system(out: *mut *mut MspSystem, data: SystemData) -> Result<(), Failure> {
    *out = Box::into_raw(Box::new(MspSystem { inner: Arc::new(data) }));
    Ok(())
}

/// Message describing the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn msp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn msp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a system from dense row-major blocks.
///
/// `sizes` has `k + 1` entries. `a_blocks[j]` points to `sizes[j]²` values
/// (`j = 0..=k`); `b_blocks[j - 1]` points to `sizes[j]·sizes[j-1]` values
/// (`j = 1..=k`).
///
/// # Safety
/// All pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msp_system_from_dense(
    k: usize,
    sizes: *const usize,
    a_blocks: *const *const f64,
    b_blocks: *const *const f64,
    out: *mut *mut MspSystem,
) -> MspStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        if sizes.is_null() || a_blocks.is_null() || b_blocks.is_null() {
            return Err(null("sizes/a_blocks/b_blocks"));
        }
        let sizes = std::slice::from_raw_parts(sizes, k + 1);
        if sizes.contains(&0) {
            return Err(invalid("block sizes must be positive"));
        }
        let a_ptrs = std::slice::from_raw_parts(a_blocks, k + 1);
        let b_ptrs = std::slice::from_raw_parts(b_blocks, k);
        let diag = (0..=k)
            .map(|j| {
                let data = slice(a_ptrs[j], sizes[j] * sizes[j], "a_blocks[j]")?.to_vec();
                Ok(Block::Dense(DenseMatrix::new(sizes[j], sizes[j], data)?))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let off = (1..=k)
            .map(|j| {
                let data = slice(b_ptrs[j - 1], sizes[j] * sizes[j - 1], "b_blocks[j]")?.to_vec();
                Ok(Block::Dense(DenseMatrix::new(sizes[j], sizes[j - 1], data)?))
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        let system = BlockSaddleSystem::new(diag, off)?;
        emit_system(out, SystemData { system, rhs: None, origin: Origin::Plain })
    })
}

/// Random test system number `trial` for `(k, seed)`, with right-hand side `A w`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msp_system_random(k: usize, seed: u64, trial: usize, out: *mut *mut MspSystem) -> MspStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        let t = random_trial(&RandomRecipe::new(k, seed), trial)?;
        emit_system(out, SystemData { system: t.system, rhs: Some(t.rhs), origin: Origin::Plain })
    })
}

/// Double saddle-point problem on the unit square with `h = 2^-level`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msp_system_double(level: u32, alpha: f64, out: *mut *mut MspSystem) -> MspStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(1..=10).contains(&level) || !(alpha > 0.0) {
            return Err(invalid("need 1 <= level <= 10 and alpha > 0"));
        }
        let p = build_double_saddle(level, alpha)?;
        let (system, rhs) = (p.system.clone(), p.rhs.clone());
        emit_system(out, SystemData { system, rhs: Some(rhs), origin: Origin::Double(Box::new(p)) })
    })
}

/// Quadruple saddle-point problem on the unit disc with `h = 2^-level`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msp_system_quadruple(
    level: u32,
    alpha: f64,
    lambda: f64,
    rho: f64,
    out: *mut *mut MspSystem,
) -> MspStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(1..=8).contains(&level) || !(alpha > 0.0 && lambda > 0.0 && rho > 0.0) {
            return Err(invalid("need 1 <= level <= 8 and positive alpha, lambda, rho"));
        }
        let p = build_quadruple_saddle(level, QuadrupleParams { alpha, lambda, rho })?;
        let (system, rhs) = (p.system.clone(), p.rhs.clone());
        emit_system(out, SystemData { system, rhs: Some(rhs), origin: Origin::Quadruple(Box::new(p)) })
    })
}

/// Loads a system written by [`msp_system_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msp_system_load(path: *const c_char, out: *mut *mut MspSystem) -> MspStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let system = BlockSaddleSystem::load_dir(&path_arg(path)?)?;
        emit_system(out, SystemData { system, rhs: None, origin: Origin::Plain })
    })
}

/// Writes the blocks as MatrixMarket files plus a manifest into directory `path`.
///
/// # Safety
/// `sys` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn msp_system_save(sys: *const MspSystem, path: *const c_char) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        let dir = path_arg(path)?;
        std::fs::create_dir_all(&dir).map_err(Error::from)?;
        sys.inner.system.save_dir(&dir)?;
        Ok(())
    })
}

/// Number of blocks minus one.
///
/// # Safety
/// `sys` must be a live handle; `k` writable.
#[no_mangle]
pub unsafe extern "C" fn msp_system_k(sys: *const MspSystem, k: *mut usize) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        *k.as_mut().ok_or_else(|| null("k"))? = sys.inner.system.k();
        Ok(())
    })
}

/// Total dimension.
///
/// # Safety
/// `sys` must be a live handle; `dim` writable.
#[no_mangle]
pub unsafe extern "C" fn msp_system_dim(sys: *const MspSystem, dim: *mut usize) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        *dim.as_mut().ok_or_else(|| null("dim"))? = sys.inner.system.dim();
        Ok(())
    })
}

/// Size of block `j`.
///
/// # Safety
/// `sys` must be a live handle; `size` writable.
#[no_mangle]
pub unsafe extern "C" fn msp_system_block_size(sys: *const MspSystem, j: usize, size: *mut usize) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        if j > sys.inner.system.k() {
            return Err(invalid(format!("block {j} out of range")));
        }
        *size.as_mut().ok_or_else(|| null("size"))? = sys.inner.system.size(j);
        Ok(())
    })
}

/// Copies the built-in right-hand side into `rhs` (length `dim`).
/// Systems built from raw blocks or files have none (`InvalidArgument`).
///
/// # Safety
/// `sys` must be a live handle; `rhs` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn msp_system_rhs(sys: *const MspSystem, rhs: *mut f64, len: usize) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        let src = sys.inner.rhs.as_ref().ok_or_else(|| invalid("system has no built-in right-hand side"))?;
        expect_len("rhs", len, src.len())?;
        slice_mut(rhs, len, "rhs")?.copy_from_slice(src);
        Ok(())
    })
}

/// `y = A x`.
///
/// # Safety
/// `sys` must be a live handle; `x`, `y` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn msp_system_apply(sys: *const MspSystem, x: *const f64, y: *mut f64, len: usize) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        expect_len("x", len, sys.inner.system.dim())?;
        let x = slice(x, len, "x")?.to_vec();
        sys.inner.system.apply(&x, slice_mut(y, len, "y")?);
        Ok(())
    })
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `sys` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn msp_system_free(sys: *mut MspSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

unsafe fn emit_preconditioner(
    out: *mut *mut MspPreconditioner,
    sys: &MspSystem,
    approx: BlockApproxSet,
    kind: MspPreconditionerKind,
) -> Result<(), Failure> {
    // validates sizes against the system
    BlockPreconditioner::new(kind.into(), &approx, &sys.inner.system)?;
    *out = Box::into_raw(Box::new(MspPreconditioner { system: sys.inner.clone(), approx, kind: kind.into() }));
    Ok(())
}

/// Preconditioner with exact blocks `A_0, S_1, …, S_k` (dense Schur chain).
///
/// # Safety
/// `sys` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msp_preconditioner_exact(
    sys: *const MspSystem,
    kind: MspPreconditionerKind,
    out: *mut *mut MspPreconditioner,
) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let chain = schur_chain(&sys.inner.system)?;
        emit_preconditioner(out, sys, ideal_blocks(&chain), kind)
    })
}

/// Exact blocks multiplied by `factors[j] > 0` (`k + 1` values).
///
/// # Safety
/// `sys` must be a live handle; `factors` valid for `len` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msp_preconditioner_scaled(
    sys: *const MspSystem,
    kind: MspPreconditionerKind,
    factors: *const f64,
    len: usize,
    out: *mut *mut MspPreconditioner,
) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        if out.is_null() {
            return Err(null("out"));
        }
        expect_len("factors", len, sys.inner.system.k() + 1)?;
        let factors = slice(factors, len, "factors")?;
        let chain = schur_chain(&sys.inner.system)?;
        emit_preconditioner(out, sys, scaled_blocks(&chain, factors)?, kind)
    })
}

/// Inexact block approximations for systems built by [`msp_system_double`] or
/// [`msp_system_quadruple`], with `cheb_steps` Chebyshev steps for the mass matrix.
///
/// # Safety
/// `sys` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msp_preconditioner_fem(
    sys: *const MspSystem,
    kind: MspPreconditionerKind,
    cheb_steps: usize,
    out: *mut *mut MspPreconditioner,
) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if cheb_steps == 0 {
            return Err(invalid("cheb_steps must be at least 1"));
        }
        let approx = match &sys.inner.origin {
            Origin::Double(p) => double_block_approximations(p, cheb_steps)?,
            Origin::Quadruple(p) => quadruple_block_approximations(p, cheb_steps)?,
            Origin::Plain => return Err(invalid("system was not built from a finite element problem")),
        };
        emit_preconditioner(out, sys, approx, kind)
    })
}

/// `y = P⁻¹ x`.
///
/// # Safety
/// `p` must be a live handle; `x`, `y` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn msp_preconditioner_apply(
    p: *const MspPreconditioner,
    x: *const f64,
    y: *mut f64,
    len: usize,
) -> MspStatus {
    guard(|| {
        let p = handle(p, "p")?;
        let op = BlockPreconditioner::new(p.kind, &p.approx, &p.system.system)?;
        expect_len("x", len, op.dim())?;
        let x = slice(x, len, "x")?.to_vec();
        op.apply(&x, slice_mut(y, len, "y")?);
        Ok(())
    })
}

/// Releases a preconditioner. Null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn msp_preconditioner_free(p: *mut MspPreconditioner) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Preconditioned MINRES from `x = 0` until the relative preconditioned
/// residual drops below `tol`. `maxit = 0` picks a size-based default.
///
/// On `NotConverged` the last iterate is still written to `x`. `iterations`
/// and `residual` (final relative residual) may be null.
///
/// # Safety
/// Handles must be live, `sys` must be the system `p` was built for, `b` and
/// `x` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn msp_minres_solve(
    sys: *const MspSystem,
    p: *const MspPreconditioner,
    b: *const f64,
    x: *mut f64,
    len: usize,
    tol: f64,
    maxit: usize,
    iterations: *mut usize,
    residual: *mut f64,
) -> MspStatus {
    guard(|| {
        let sys = handle(sys, "sys")?;
        let p = handle(p, "p")?;
        if !Arc::ptr_eq(&sys.inner, &p.system) {
            return Err(invalid("preconditioner was built for a different system"));
        }
        if !(tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        let system = &sys.inner.system;
        expect_len("b", len, system.dim())?;
        let b = slice(b, len, "b")?;
        let x = slice_mut(x, len, "x")?;
        let op = BlockPreconditioner::new(p.kind, &p.approx, system)?;
        let opts = MinresOptions { tol, maxit: (maxit > 0).then_some(maxit) };
        let (result, failure) = match minres(system, &op, b, opts) {
            Ok(r) => (r, None),
            Err(Error::MaxIterations(partial)) => {
                let msg = format!("MINRES did not converge within {} iterations", partial.iterations);
                (*partial, Some(Failure(MspStatus::NotConverged, msg)))
            }
            Err(e) => return Err(e.into()),
        };
        x.copy_from_slice(&result.solution);
        if let Some(it) = iterations.as_mut() {
            *it = result.iterations;
        }
        if let Some(r) = residual.as_mut() {
            *r = result.final_residual();
        }
        failure.map_or(Ok(()), Err)
    })
}
