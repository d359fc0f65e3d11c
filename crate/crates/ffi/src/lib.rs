//! C interface to `entreg`.
//!
//! Matrices cross the boundary as row-major `double` arrays. Objects are
//! opaque handles created by `entreg_*_new`-style functions and released
//! with the matching `_free`. Every fallible call returns an
//! [`EntregStatus`]; on failure [`entreg_last_error_message`] describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use entreg::basis::{build_basis_matrix, BasisMatrix};
use entreg::bench::{run_solver, SolverSpec};
use entreg::dynamics::TimeSeriesSet;
use entreg::er::{entropic_regression, ErConfig, ToleranceMode};
use entreg::infotheory::{estimate_cmi, ShuffleTestConfig};
use entreg::solvers::{SolverId, SparseSolution};
use entreg::Error;
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntregStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntregSolver {
    Ls = 0,
    Ols = 1,
    Lasso = 2,
    Cs = 3,
    Sindy = 4,
    Tw = 5,
    Er = 6,
}

/// Options for [`entreg_er_solve`]; start from [`entreg_er_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EntregErOptions {
    pub knn_k: usize,
    /// Nonzero selects a fresh tolerance per forward step.
    pub dynamic_tolerance: u8,
    pub alpha: f64,
    pub n_shuffles: usize,
    /// Zero means `min(K, rows / 2)`.
    pub max_forward_terms: usize,
    pub seed: u64,
}

/// Candidate-function matrix Φ.
pub struct EntregBasis {
    inner: BasisMatrix,
}

/// Solver output.
pub struct EntregSolution {
    inner: SparseSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend_from_slice(msg.as_bytes());
    });
}

fn status_of(err: &Error) -> EntregStatus {
    match err {
        Error::DimensionMismatch(_) => EntregStatus::DimensionMismatch,
        Error::InvalidArgument(_) | Error::Config(_) | Error::TooShort { .. } => EntregStatus::InvalidArgument,
        _ => EntregStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard<F>(f: F) -> EntregStatus
where
    F: FnOnce() -> Result<(), (EntregStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EntregStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("internal panic: {msg}"));
            EntregStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (EntregStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (EntregStatus, String) {
    (EntregStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], (EntregStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `cap`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn entreg_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn entreg_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!(),
    };
    VERSION.as_ptr()
}

/// Evaluates every monomial of degree ≤ `degree` on `n_rows` states of
/// dimension `state_dim` (row-major).
///
/// # Safety
/// `states` must hold `n_rows * state_dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn entreg_basis_from_states(
    states: *const f64,
    n_rows: usize,
    state_dim: usize,
    degree: u32,
    out: *mut *mut EntregBasis,
) -> EntregStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let len = n_rows
            .checked_mul(state_dim)
            .ok_or((EntregStatus::InvalidArgument, "size overflow".into()))?;
        let data = slice(states, len, "states")?;
        let rows = data.chunks(state_dim.max(1)).map(<[f64]>::to_vec).collect();
        let series = TimeSeriesSet::from_rows(rows, 1.0).map_err(lib_err)?;
        let inner = build_basis_matrix(&series, degree).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EntregBasis { inner }));
        Ok(())
    })
}

/// Wraps an explicit `n_rows × n_cols` matrix (row-major).
///
/// # Safety
/// `values` must hold `n_rows * n_cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn entreg_basis_from_matrix(
    values: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut *mut EntregBasis,
) -> EntregStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if n_rows == 0 || n_cols == 0 {
            return Err((EntregStatus::InvalidArgument, "matrix must be nonempty".into()));
        }
        let len = n_rows
            .checked_mul(n_cols)
            .ok_or((EntregStatus::InvalidArgument, "size overflow".into()))?;
        let data = slice(values, len, "values")?;
        let m = DMatrix::from_row_slice(n_rows, n_cols, data);
        *out = Box::into_raw(Box::new(EntregBasis {
            inner: BasisMatrix::from_matrix(m),
        }));
        Ok(())
    })
}

/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn entreg_basis_n_rows(basis: *const EntregBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.inner.n_samples())
}

/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn entreg_basis_n_cols(basis: *const EntregBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.inner.n_candidates())
}

/// # Safety
/// `basis` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn entreg_basis_free(basis: *mut EntregBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

fn spec_for(solver: EntregSolver, param: f64) -> SolverSpec {
    let given = (!param.is_nan()).then_some(param);
    let id = match solver {
        EntregSolver::Ls => SolverId::Ls,
        EntregSolver::Ols => SolverId::Ols,
        EntregSolver::Lasso => SolverId::Lasso,
        EntregSolver::Cs => SolverId::Cs,
        EntregSolver::Sindy => SolverId::Sindy,
        EntregSolver::Tw => SolverId::Tw,
        EntregSolver::Er => SolverId::Er,
    };
    match (SolverSpec::default_for(id), given) {
        (SolverSpec::Ols { .. }, p) => SolverSpec::Ols { threshold: p },
        (SolverSpec::Lasso { .. }, p) => SolverSpec::Lasso { lambda: p },
        (SolverSpec::Cs { .. }, p) => SolverSpec::Cs { epsilon: p },
        (SolverSpec::Sindy { .. }, Some(l)) => SolverSpec::Sindy { lambda: l },
        (SolverSpec::Tw { mu, tol, .. }, Some(l)) => SolverSpec::Tw { lambda: l, mu, tol },
        (spec, _) => spec,
    }
}

/// Solves `Φa ≈ f` with a baseline solver or ER at its defaults.
///
/// `param` is the solver's main hyperparameter (OLS threshold, Lasso λ, CS
/// ε, SINDy/TW λ); pass NaN for the default, which is cross-validation for
/// OLS, Lasso and CS. LS and ER ignore it. `seed` feeds ER's shuffle tests.
///
/// # Safety
/// `basis` must be a live handle, `f` must hold `len` doubles and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn entreg_solve(
    basis: *const EntregBasis,
    f: *const f64,
    len: usize,
    solver: EntregSolver,
    param: f64,
    seed: u64,
    out: *mut *mut EntregSolution,
) -> EntregStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let f = slice(f, len, "f")?;
        let (inner, _) = run_solver(&spec_for(solver, param), &b.inner, f, seed).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EntregSolution { inner }));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn entreg_er_options_default() -> EntregErOptions {
    let d = ErConfig::default();
    EntregErOptions {
        knn_k: d.knn_k,
        dynamic_tolerance: 0,
        alpha: d.shuffle.alpha,
        n_shuffles: d.shuffle.n_shuffles,
        max_forward_terms: 0,
        seed: d.seed,
    }
}

/// Entropic Regression with explicit options (defaults when `options` is
/// null).
///
/// # Safety
/// As [`entreg_solve`]; `options` must be null or point to a valid struct.
#[no_mangle]
pub unsafe extern "C" fn entreg_er_solve(
    basis: *const EntregBasis,
    f: *const f64,
    len: usize,
    options: *const EntregErOptions,
    out: *mut *mut EntregSolution,
) -> EntregStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let f = slice(f, len, "f")?;
        let o = options.as_ref().copied().unwrap_or_else(|| entreg_er_options_default());
        let cfg = ErConfig {
            knn_k: o.knn_k,
            tolerance_mode: if o.dynamic_tolerance != 0 {
                ToleranceMode::Dynamic
            } else {
                ToleranceMode::Static
            },
            shuffle: ShuffleTestConfig {
                alpha: o.alpha,
                n_shuffles: o.n_shuffles,
                seed: 0,
            },
            max_forward_terms: (o.max_forward_terms > 0).then_some(o.max_forward_terms),
            seed: o.seed,
            recompute_backward_tol: false,
        };
        let (inner, _) = entropic_regression(&b.inner, f, &cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EntregSolution { inner }));
        Ok(())
    })
}

/// Number of coefficients (columns of Φ).
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn entreg_solution_len(sol: *const EntregSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.inner.coefficients.len())
}

/// Number of nonzero coefficients.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn entreg_solution_support_len(sol: *const EntregSolution) -> usize {
    sol.as_ref().map_or(0, |s| s.inner.support.len())
}

/// `‖Φa − f‖₂`, or NaN for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn entreg_solution_residual_norm(sol: *const EntregSolution) -> f64 {
    sol.as_ref().map_or(f64::NAN, |s| s.inner.residual_norm)
}

/// 1 when the solver converged, 0 otherwise (or for a null handle).
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn entreg_solution_converged(sol: *const EntregSolution) -> u8 {
    sol.as_ref().map_or(0, |s| s.inner.converged as u8)
}

/// Copies all coefficients into `out` (capacity `cap`).
///
/// # Safety
/// `sol` must be a live handle and `out` valid for `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn entreg_solution_coefficients(
    sol: *const EntregSolution,
    out: *mut f64,
    cap: usize,
) -> EntregStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("sol"))?;
        copy_out(&s.inner.coefficients, out, cap)
    })
}

/// Copies the support indices (ascending) into `out` (capacity `cap`).
///
/// # Safety
/// `sol` must be a live handle and `out` valid for `cap` elements.
#[no_mangle]
pub unsafe extern "C" fn entreg_solution_support(
    sol: *const EntregSolution,
    out: *mut usize,
    cap: usize,
) -> EntregStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("sol"))?;
        copy_out(&s.inner.support, out, cap)
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, cap: usize) -> Result<(), (EntregStatus, String)> {
    if cap < src.len() {
        return Err((
            EntregStatus::BufferTooSmall,
            format!("buffer holds {cap}, {} needed", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// # Safety
/// `sol` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn entreg_solution_free(sol: *mut EntregSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// KSG estimate of `I(X;Y)` in nats for scalar samples.
///
/// # Safety
/// `x` and `y` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn entreg_estimate_mi(
    x: *const f64,
    y: *const f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> EntregStatus {
    entreg_estimate_cmi(x, y, ptr::null(), n, k, out)
}

/// KSG estimate of `I(X;Y|Z)` in nats for scalar samples; a null `z`
/// gives `I(X;Y)`.
///
/// # Safety
/// `x`, `y` and (if non-null) `z` must hold `n` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn entreg_estimate_cmi(
    x: *const f64,
    y: *const f64,
    z: *const f64,
    n: usize,
    k: usize,
    out: *mut f64,
) -> EntregStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let xs = slice(x, n, "x")?;
        let ys = slice(y, n, "y")?;
        let zs: Vec<&[f64]> = if z.is_null() { Vec::new() } else { vec![slice(z, n, "z")?] };
        *out = estimate_cmi(&[xs], &[ys], &zs, k).map_err(lib_err)?;
        Ok(())
    })
}
