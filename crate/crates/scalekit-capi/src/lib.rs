//! C ABI over the scale-function library: opaque handles, integer status
//! codes, and a thread-local last-error message. All functions are panic-
//! safe; a caught panic reports `SK_STATUS_PANIC` instead of unwinding
//! across the boundary.
//!
//! Memory rules: every `*_new`/`*_build` output must be released with the
//! matching `*_free`; `sk_last_error` stays valid on the calling thread
//! until the next failing call there.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use scalekit::chain::{build_chain, gamma_coefficients};
use scalekit::cli::{build_triplet, parse_config};
use scalekit::process::LevyTriplet;
use scalekit::scale::{compute_table, evaluate_w_at, evaluate_z_at, phi_root, ScaleTable};
use scalekit::Error;

/// Status of a call. Nonzero values match the CLI exit codes where a
/// counterpart exists.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkStatus {
    Ok = 0,
    InvalidConfig = 2,
    InadmissibleStep = 3,
    NumericalRange = 4,
    NullArgument = 5,
    Panic = 6,
}

/// Opaque model handle.
pub struct SkTriplet(LevyTriplet);

/// Opaque scale-table handle.
pub struct SkTable(ScaleTable);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SkStatus {
    match err {
        Error::InvalidModel(_) | Error::InvalidArgument(_) => SkStatus::InvalidConfig,
        Error::InadmissibleStep { .. } => SkStatus::InadmissibleStep,
        Error::InfiniteMass(_) | Error::NumericalRange(_) | Error::QuadratureBudget(_) => {
            SkStatus::NumericalRange
        }
    }
}

fn guard<F: FnOnce() -> SkStatus>(f: F) -> SkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            SkStatus::Panic
        }
    }
}

fn fail(err: Error) -> SkStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread, or NULL if none.
#[no_mangle]
pub extern "C" fn sk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Parse a model from a TOML document containing a `[model]` section (the
/// same schema the CLI accepts) and return an owned handle.
///
/// # Safety
/// `toml_text` must be a valid NUL-terminated string; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_triplet_from_toml(
    toml_text: *const c_char,
    out: *mut *mut SkTriplet,
) -> SkStatus {
    if toml_text.is_null() || out.is_null() {
        set_error("null argument".into());
        return SkStatus::NullArgument;
    }
    let text = match CStr::from_ptr(toml_text).to_str() {
        Ok(t) => t.to_owned(),
        Err(_) => {
            set_error("config text is not valid UTF-8".into());
            return SkStatus::InvalidConfig;
        }
    };
    guard(
        || match parse_config(&text).and_then(|c| build_triplet(&c.model)) {
            Ok(t) => {
                *out = Box::into_raw(Box::new(SkTriplet(t)));
                SkStatus::Ok
            }
            Err(e) => fail(e),
        },
    )
}

/// Release a model handle. NULL is a no-op.
///
/// # Safety
/// `t` must be a pointer previously returned by `sk_triplet_from_toml`.
#[no_mangle]
pub unsafe extern "C" fn sk_triplet_free(t: *mut SkTriplet) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Laplace exponent of the model at a real argument `beta >= 0`.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sk_psi(t: *const SkTriplet, beta: f64, out: *mut f64) -> SkStatus {
    if t.is_null() || out.is_null() {
        set_error("null argument".into());
        return SkStatus::NullArgument;
    }
    let trip = &(*t).0;
    guard(|| match trip.psi_real(beta) {
        Ok(v) => {
            *out = v;
            SkStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Largest root of psi = q.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sk_phi(t: *const SkTriplet, q: f64, out: *mut f64) -> SkStatus {
    if t.is_null() || out.is_null() {
        set_error("null argument".into());
        return SkStatus::NullArgument;
    }
    let trip = &(*t).0;
    guard(|| match phi_root(|b| trip.psi_real(b), q) {
        Ok(p) => {
            *out = p.phi;
            SkStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Build W and Z tables on the grid {0, h, ..., n h}.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sk_table_build(
    t: *const SkTriplet,
    q: f64,
    h: f64,
    n: usize,
    out: *mut *mut SkTable,
) -> SkStatus {
    if t.is_null() || out.is_null() {
        set_error("null argument".into());
        return SkStatus::NullArgument;
    }
    let trip = &(*t).0;
    guard(|| {
        let build = || {
            let chain = build_chain(trip, h, n + 1)?;
            let gamma = gamma_coefficients(&chain, n + 1)?;
            compute_table(&gamma, q, n)
        };
        match build() {
            Ok(table) => {
                *out = Box::into_raw(Box::new(SkTable(table)));
                SkStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a table handle. NULL is a no-op.
///
/// # Safety
/// `t` must be a pointer previously returned by `sk_table_build`.
#[no_mangle]
pub unsafe extern "C" fn sk_table_free(t: *mut SkTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of grid entries (n + 1). Returns 0 for NULL.
///
/// # Safety
/// `t` must be a valid table pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn sk_table_len(t: *const SkTable) -> usize {
    if t.is_null() {
        return 0;
    }
    let tab = &(*t).0;
    tab.w.len()
}

/// Grid step of the table. Returns NaN for NULL.
///
/// # Safety
/// `t` must be a valid table pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn sk_table_h(t: *const SkTable) -> f64 {
    if t.is_null() {
        return f64::NAN;
    }
    (*t).0.h
}

/// Index shift applied when evaluating W at a point (0 or 1).
///
/// # Safety
/// `t` must be a valid table pointer or NULL.
#[no_mangle]
pub unsafe extern "C" fn sk_table_delta0(t: *const SkTable) -> u8 {
    if t.is_null() {
        return 0;
    }
    (*t).0.delta0
}

/// Raw W table entry at a grid index.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sk_table_w(t: *const SkTable, index: usize, out: *mut f64) -> SkStatus {
    if t.is_null() || out.is_null() {
        set_error("null argument".into());
        return SkStatus::NullArgument;
    }
    let tab = &(*t).0;
    match tab.w.get(index) {
        Some(v) => {
            *out = *v;
            SkStatus::Ok
        }
        None => {
            set_error(format!("index {index} outside table"));
            SkStatus::InvalidConfig
        }
    }
}

/// Z value (1 + the cumulative part) at a grid index.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sk_table_z(t: *const SkTable, index: usize, out: *mut f64) -> SkStatus {
    if t.is_null() || out.is_null() {
        set_error("null argument".into());
        return SkStatus::NullArgument;
    }
    let tab = &(*t).0;
    match tab.z_at_index(index) {
        Ok(v) => {
            *out = v;
            SkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// W evaluated at a continuous grid point, with the delta0 index shift.
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sk_table_eval_w(t: *const SkTable, x: f64, out: *mut f64) -> SkStatus {
    if t.is_null() || out.is_null() {
        set_error("null argument".into());
        return SkStatus::NullArgument;
    }
    match evaluate_w_at(&(*t).0, x) {
        Ok(v) => {
            *out = v;
            SkStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Z evaluated at a continuous grid point (no shift).
///
/// # Safety
/// `t` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sk_table_eval_z(t: *const SkTable, x: f64, out: *mut f64) -> SkStatus {
    if t.is_null() || out.is_null() {
        set_error("null argument".into());
        return SkStatus::NullArgument;
    }
    match evaluate_z_at(&(*t).0, x) {
        Ok(v) => {
            *out = v;
            SkStatus::Ok
        }
        Err(e) => fail(e),
    }
}
