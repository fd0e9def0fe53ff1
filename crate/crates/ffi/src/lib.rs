//! C ABI over the `kgs` solver.
//!
//! Every fallible entry point returns a [`KgsStatus`] and writes results
//! through out-pointers. On failure the message is kept per thread and can be
//! read with [`kgs_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kgs::functional::sobolev_constant;
use kgs::groundstate::{solve_constant, ConstantCoefficients, GroundStateReport, SolverOptions};
use kgs::model::{KirchhoffParams, RadialGrid};
use kgs::thresholds::{critical_level, solve_ts_system, threshold_consistency};
use kgs::KgsError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgsStatus {
    Ok = 0,
    NullPointer = 1,
    Structural = 2,
    Domain = 3,
    NoRoot = 4,
    Precondition = 5,
    NonConvergence = 6,
    Inconsistency = 7,
    InsufficientData = 8,
    Parse = 9,
    Io = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&KgsError> for KgsStatus {
    fn from(e: &KgsError) -> Self {
        match e {
            KgsError::Structural(_) => Self::Structural,
            KgsError::Domain(_) => Self::Domain,
            KgsError::NoRoot(_) => Self::NoRoot,
            KgsError::Precondition(_) => Self::Precondition,
            KgsError::NonConvergence { .. } => Self::NonConvergence,
            KgsError::Inconsistency(_) => Self::Inconsistency,
            KgsError::InsufficientData(_) => Self::InsufficientData,
            KgsError::Parse { .. } => Self::Parse,
            KgsError::Io(_) => Self::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    // Interior NULs would truncate the C string; replace them.
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Runs `f`, mapping errors and panics to a status and recording the message.
fn guard(f: impl FnOnce() -> Result<(), KgsStatusError>) -> KgsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KgsStatus::Ok,
        Ok(Err(KgsStatusError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            KgsStatus::Panic
        }
    }
}

struct KgsStatusError(KgsStatus, String);

impl From<KgsError> for KgsStatusError {
    fn from(e: KgsError) -> Self {
        Self(KgsStatus::from(&e), e.to_string())
    }
}

fn null(name: &str) -> KgsStatusError {
    KgsStatusError(KgsStatus::NullPointer, format!("`{name}` is null"))
}

/// Writes `value` through `out` after a null check.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn store<T>(out: *mut T, name: &str, value: T) -> Result<(), KgsStatusError> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next `kgs_*` call on the same thread.
#[no_mangle]
pub extern "C" fn kgs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Solves the threshold system, returning `(t0, s0)`.
///
/// # Safety
/// `t0` and `s0` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kgs_solve_ts(
    a: f64,
    b: f64,
    sobolev: f64,
    lambda: f64,
    t0: *mut f64,
    s0: *mut f64,
) -> KgsStatus {
    guard(|| {
        if t0.is_null() {
            return Err(null("t0"));
        }
        if s0.is_null() {
            return Err(null("s0"));
        }
        let sol = solve_ts_system(a, b, sobolev, lambda)?;
        store(t0, "t0", sol.t0)?;
        store(s0, "s0", sol.s0)
    })
}

/// Compactness level `c*`.
///
/// # Safety
/// `c_star` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_critical_level(
    a: f64,
    b: f64,
    sobolev: f64,
    q: f64,
    c_star: *mut f64,
) -> KgsStatus {
    guard(|| {
        let v = critical_level(a, b, sobolev, q)?.c_star;
        store(c_star, "c_star", v)
    })
}

/// Relative residual of `t0/3 + s0/12 = c*`.
///
/// # Safety
/// `residual` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_threshold_consistency(
    a: f64,
    b: f64,
    sobolev: f64,
    q: f64,
    residual: *mut f64,
) -> KgsStatus {
    guard(|| {
        let v = threshold_consistency(a, b, sobolev, q)?;
        store(residual, "residual", v)
    })
}

/// Discrete Sobolev quotient of the extremal profile on `RadialGrid(radius, nodes)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_sobolev_constant(
    radius: f64,
    nodes: usize,
    out: *mut f64,
) -> KgsStatus {
    guard(|| {
        let grid = RadialGrid::new(radius, nodes)?;
        store(out, "out", sobolev_constant(&grid))
    })
}

/// Constant-coefficient problem on a radial grid.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KgsConstantProblem {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub k: f64,
    pub tau: f64,
    pub nu: f64,
    pub radius: f64,
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
}

/// Opaque solved ground state.
pub struct KgsGroundState {
    report: GroundStateReport,
}

/// Solves `problem` and stores a new handle in `*out`; free it with
/// [`kgs_ground_state_free`]. An unconverged run still yields a handle and
/// returns `NonConvergence`.
///
/// # Safety
/// `problem` must point to a valid struct and `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_solve_constant(
    problem: *const KgsConstantProblem,
    out: *mut *mut KgsGroundState,
) -> KgsStatus {
    guard(|| {
        if problem.is_null() {
            return Err(null("problem"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let pr = *problem;
        let cc = ConstantCoefficients::new(pr.k, pr.tau, pr.nu)?;
        let params = KirchhoffParams::new(pr.a, pr.b, pr.p)?;
        let grid = RadialGrid::new(pr.radius, pr.nodes)?;
        let opts = SolverOptions {
            tol: pr.tol,
            max_iter: pr.max_iter,
        };
        let report = solve_constant(cc, params, grid, &opts)?;
        let converged = report.converged;
        let (iters, grad) = (report.iterations, report.grad_sup);
        out.write(Box::into_raw(Box::new(KgsGroundState { report })));
        if converged {
            Ok(())
        } else {
            Err(KgsStatusError(
                KgsStatus::NonConvergence,
                format!("iteration cap reached after {iters} iterations, gradient {grad}"),
            ))
        }
    })
}

/// # Safety
/// `state` must be null or a live handle.
unsafe fn with_state<T>(
    state: *const KgsGroundState,
    out: *mut T,
    f: impl FnOnce(&GroundStateReport) -> T,
) -> KgsStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        store(out, "out", f(&s.report))
    })
}

/// # Safety
/// `state` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_ground_state_level(
    state: *const KgsGroundState,
    out: *mut f64,
) -> KgsStatus {
    with_state(state, out, |r| r.level)
}

/// # Safety
/// `state` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_ground_state_nehari_residual(
    state: *const KgsGroundState,
    out: *mut f64,
) -> KgsStatus {
    with_state(state, out, |r| r.nehari_residual)
}

/// Writes 1 if the solver met its tolerance, else 0.
///
/// # Safety
/// `state` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_ground_state_converged(
    state: *const KgsGroundState,
    out: *mut i32,
) -> KgsStatus {
    with_state(state, out, |r| i32::from(r.converged))
}

/// # Safety
/// `state` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_ground_state_iterations(
    state: *const KgsGroundState,
    out: *mut usize,
) -> KgsStatus {
    with_state(state, out, |r| r.iterations)
}

/// Number of grid values.
///
/// # Safety
/// `state` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn kgs_ground_state_len(
    state: *const KgsGroundState,
    out: *mut usize,
) -> KgsStatus {
    with_state(state, out, |r| r.field.len())
}

/// Copies the nodal values into `buf`, which must hold at least `len` doubles.
///
/// # Safety
/// `state` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kgs_ground_state_copy_values(
    state: *const KgsGroundState,
    buf: *mut f64,
    len: usize,
) -> KgsStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = s.report.field.values();
        if len < values.len() {
            return Err(KgsStatusError(
                KgsStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kgs_ground_state_free(state: *mut KgsGroundState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn last_error() -> String {
        let p = kgs_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
    }

    #[test]
    fn status_mapping_covers_error_kinds() {
        assert_eq!(
            KgsStatus::from(&KgsError::Domain("x".into())),
            KgsStatus::Domain
        );
        assert_eq!(
            KgsStatus::from(&KgsError::NonConvergence {
                reason: "x".into(),
                trace: vec![]
            }),
            KgsStatus::NonConvergence
        );
        assert_eq!(
            KgsStatus::from(&KgsError::Parse {
                line: 1,
                message: "x".into()
            }),
            KgsStatus::Parse
        );
    }

    #[test]
    fn guard_catches_panics() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, KgsStatus::Panic);
        assert!(last_error().contains("boom"));
    }

    #[test]
    fn success_clears_the_message() {
        let mut c = 0.0;
        assert_eq!(
            unsafe { kgs_critical_level(-1.0, 1.0, 1.0, 1.0, &mut c) },
            KgsStatus::Domain
        );
        assert!(last_error().contains("a must be positive"));
        assert_eq!(
            unsafe { kgs_critical_level(1.0, 1.0, 1.0, 1.0, &mut c) },
            KgsStatus::Ok
        );
        assert!(kgs_last_error().is_null());
    }
}
