//! C ABI over `tdm-core`.
//!
//! Matrices and verdicts are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every entry point returns a
//! [`TdmStatus`]; on failure a message is kept per thread and can be read with
//! [`tdm_last_error`] until the next failing call on that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tdm_core::cli::{decide, Decision, MethodArg};
use tdm_core::colgen::ColgenConfig;
use tdm_core::matrix::{CandidateMatrix, Mode, ValidatedMatrix};
use tdm_core::parametric::{equi_beta_lower, two_sector_gamma_upper};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidMatrix = 2,
    InvalidArgument = 3,
    /// The solver stopped without a verdict; bounds are still available.
    Undecided = 4,
    SolverError = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdmMode {
    Tdm = 0,
    Bcm = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdmMethod {
    Auto = 0,
    Full = 1,
    Colgen = 2,
    Symmetric = 3,
}

/// Validated input matrix.
pub struct TdmMatrix {
    inner: ValidatedMatrix,
}

/// Outcome of [`tdm_check`].
pub struct TdmVerdict {
    decision: Decision,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: TdmStatus, msg: impl Into<String>) -> TdmStatus {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

/// Runs `f`, turning a panic into [`TdmStatus::Panic`].
fn guard(f: impl FnOnce() -> TdmStatus) -> TdmStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(TdmStatus::Panic, "internal panic"))
}

/// Message of the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tdm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn tdm_status_str(status: TdmStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TdmStatus::Ok => c"ok",
        TdmStatus::NullPointer => c"null pointer",
        TdmStatus::InvalidMatrix => c"invalid matrix",
        TdmStatus::InvalidArgument => c"invalid argument",
        TdmStatus::Undecided => c"undecided",
        TdmStatus::SolverError => c"solver error",
        TdmStatus::OutOfRange => c"index out of range",
        TdmStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Sets the process-wide comparison tolerance. Must be positive and finite.
#[no_mangle]
pub extern "C" fn tdm_set_tolerance(tau: f64) -> TdmStatus {
    if !(tau.is_finite() && tau > 0.0) {
        return fail(TdmStatus::InvalidArgument, format!("tolerance {tau} must be positive and finite"));
    }
    tdm_core::set_tolerance(tau);
    TdmStatus::Ok
}

#[no_mangle]
pub extern "C" fn tdm_tolerance() -> f64 {
    tdm_core::tolerance()
}

/// Copies and validates a row-major `d × d` matrix.
///
/// # Safety
/// `entries` must point to `d * d` readable doubles and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn tdm_matrix_new(d: usize, entries: *const f64, mode: TdmMode, out: *mut *mut TdmMatrix) -> TdmStatus {
    guard(|| {
        if entries.is_null() || out.is_null() {
            return fail(TdmStatus::NullPointer, "entries and out must be non-null");
        }
        let Some(len) = d.checked_mul(d) else {
            return fail(TdmStatus::InvalidArgument, format!("d = {d} overflows"));
        };
        // SAFETY: the caller guarantees `d * d` readable doubles.
        let values = unsafe { std::slice::from_raw_parts(entries, len) }.to_vec();
        let m = match CandidateMatrix::from_row_major(d, values) {
            Ok(m) => m,
            Err(e) => return fail(TdmStatus::InvalidArgument, e.to_string()),
        };
        let mode = match mode {
            TdmMode::Tdm => Mode::Tdm,
            TdmMode::Bcm => Mode::Bcm,
        };
        match m.validate(mode) {
            Ok(inner) => {
                // SAFETY: `out` is non-null and writable per the contract.
                unsafe { *out = Box::into_raw(Box::new(TdmMatrix { inner })) };
                TdmStatus::Ok
            }
            Err(e) => fail(TdmStatus::InvalidMatrix, e.to_string()),
        }
    })
}

/// Releases a matrix. Null is ignored.
///
/// # Safety
/// `m` must come from [`tdm_matrix_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tdm_matrix_free(m: *mut TdmMatrix) {
    if !m.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Dimension of `m`, or 0 for null.
///
/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn tdm_matrix_dim(m: *const TdmMatrix) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { m.as_ref() }.map_or(0, |m| m.inner.d())
}

/// Decides membership. On [`TdmStatus::Ok`] or [`TdmStatus::Undecided`] a
/// verdict handle is stored in `out`; otherwise `out` is set to null.
///
/// # Safety
/// `m` must be a live matrix handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tdm_check(m: *const TdmMatrix, method: TdmMethod, out: *mut *mut TdmVerdict) -> TdmStatus {
    guard(|| {
        if out.is_null() {
            return fail(TdmStatus::NullPointer, "out must be non-null");
        }
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = ptr::null_mut() };
        // SAFETY: null or live per the contract.
        let Some(m) = (unsafe { m.as_ref() }) else {
            return fail(TdmStatus::NullPointer, "matrix handle is null");
        };
        let method = match method {
            TdmMethod::Auto => MethodArg::Auto,
            TdmMethod::Full => MethodArg::Full,
            TdmMethod::Colgen => MethodArg::Colgen,
            TdmMethod::Symmetric => MethodArg::Symmetric,
        };
        let decision = match decide(&m.inner, method, &ColgenConfig::default()) {
            Ok(d) => d,
            Err(e) => return fail(TdmStatus::SolverError, e.to_string()),
        };
        let json = serde_json::to_string(&decision).expect("decision serializes");
        let json = CString::new(json).expect("JSON has no interior NUL");
        let status = if decision.member.is_some() { TdmStatus::Ok } else { TdmStatus::Undecided };
        // SAFETY: as above.
        unsafe { *out = Box::into_raw(Box::new(TdmVerdict { decision, json })) };
        status
    })
}

/// Releases a verdict. Null is ignored.
///
/// # Safety
/// `v` must come from [`tdm_check`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tdm_verdict_free(v: *mut TdmVerdict) {
    if !v.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(v) });
    }
}

/// 1 for a member, 0 for a non-member, −1 when undecided or `v` is null.
///
/// # Safety
/// `v` must be null or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn tdm_verdict_member(v: *const TdmVerdict) -> i32 {
    // SAFETY: null or live per the contract.
    match unsafe { v.as_ref() }.and_then(|v| v.decision.member) {
        Some(true) => 1,
        Some(false) => 0,
        None => -1,
    }
}

/// Number of atoms in the membership certificate (0 when there is none).
///
/// # Safety
/// `v` must be null or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn tdm_verdict_certificate_len(v: *const TdmVerdict) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { v.as_ref() }
        .and_then(|v| v.decision.verdict.as_ref()?.certificate.as_ref().map(|c| c.len()))
        .unwrap_or(0)
}

/// Atom `i` of the certificate: bit `k` of `bits` is coordinate `k` of the
/// vertex.
///
/// # Safety
/// `v` must be a live verdict handle; `bits` and `weight` writable.
#[no_mangle]
pub unsafe extern "C" fn tdm_verdict_certificate_atom(v: *const TdmVerdict, i: usize, bits: *mut u64, weight: *mut f64) -> TdmStatus {
    guard(|| {
        // SAFETY: null or live per the contract.
        let (Some(v), false, false) = (unsafe { v.as_ref() }, bits.is_null(), weight.is_null()) else {
            return fail(TdmStatus::NullPointer, "verdict, bits and weight must be non-null");
        };
        let Some(c) = v.decision.verdict.as_ref().and_then(|x| x.certificate.as_ref()) else {
            return fail(TdmStatus::OutOfRange, "verdict has no certificate");
        };
        if i >= c.len() {
            return fail(TdmStatus::OutOfRange, format!("atom {i} of {}", c.len()));
        }
        // SAFETY: both pointers are non-null and writable.
        unsafe {
            *bits = c.vertices[i].bits();
            *weight = c.weights[i];
        }
        TdmStatus::Ok
    })
}

/// Length of the Farkas ray (0 when there is none).
///
/// # Safety
/// `v` must be null or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn tdm_verdict_farkas_len(v: *const TdmVerdict) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { v.as_ref() }
        .and_then(|v| v.decision.verdict.as_ref()?.farkas_ray.as_ref().map(Vec::len))
        .unwrap_or(0)
}

/// Copies the Farkas ray into `buf`, which must hold at least
/// [`tdm_verdict_farkas_len`] doubles.
///
/// # Safety
/// `v` must be a live verdict handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tdm_verdict_farkas(v: *const TdmVerdict, buf: *mut f64, len: usize) -> TdmStatus {
    guard(|| {
        // SAFETY: null or live per the contract.
        let (Some(v), false) = (unsafe { v.as_ref() }, buf.is_null()) else {
            return fail(TdmStatus::NullPointer, "verdict and buf must be non-null");
        };
        let Some(ray) = v.decision.verdict.as_ref().and_then(|x| x.farkas_ray.as_ref()) else {
            return fail(TdmStatus::OutOfRange, "verdict has no Farkas ray");
        };
        if len < ray.len() {
            return fail(TdmStatus::OutOfRange, format!("buffer holds {len}, ray has {}", ray.len()));
        }
        // SAFETY: `buf` is writable for `len ≥ ray.len()` doubles.
        unsafe { ptr::copy_nonoverlapping(ray.as_ptr(), buf, ray.len()) };
        TdmStatus::Ok
    })
}

/// The verdict as JSON, valid for the lifetime of `v`.
///
/// # Safety
/// `v` must be null or a live verdict handle.
#[no_mangle]
pub unsafe extern "C" fn tdm_verdict_json(v: *const TdmVerdict) -> *const c_char {
    // SAFETY: null or live per the contract.
    unsafe { v.as_ref() }.map_or(ptr::null(), |v| v.json.as_ptr())
}

/// Smallest off-diagonal value of a `d`-dimensional equi-correlation BCM with
/// diagonal `alpha`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdm_equi_beta_lower(alpha: f64, d: usize, out: *mut f64) -> TdmStatus {
    guard(|| {
        if out.is_null() {
            return fail(TdmStatus::NullPointer, "out must be non-null");
        }
        if !(0.0..=1.0).contains(&alpha) || d < 2 {
            return fail(TdmStatus::InvalidArgument, format!("need alpha in [0, 1] and d >= 2, got ({alpha}, {d})"));
        }
        // SAFETY: non-null and writable.
        unsafe { *out = equi_beta_lower(alpha, d) };
        TdmStatus::Ok
    })
}

/// Largest cross-sector value `γ` for a two-sector TDM.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tdm_two_sector_gamma_upper(alpha: f64, beta: f64, d1: usize, d2: usize, out: *mut f64) -> TdmStatus {
    guard(|| {
        if out.is_null() {
            return fail(TdmStatus::NullPointer, "out must be non-null");
        }
        match two_sector_gamma_upper(alpha, beta, d1, d2) {
            Ok(g) => {
                // SAFETY: non-null and writable.
                unsafe { *out = g };
                TdmStatus::Ok
            }
            Err(e) => fail(TdmStatus::InvalidArgument, e.to_string()),
        }
    })
}
