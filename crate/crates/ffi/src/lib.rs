//! C ABI over the heterotest library.
//!
//! Models and suites cross the boundary as opaque handles created from JSON
//! text. Every fallible call returns an [`HtStatus`]; on failure the message
//! is available from [`ht_last_error`] on the same thread. Strings handed
//! out by the library must be released with [`ht_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use heterotest::csxms::{
    check_component_dft, generate_csxms_test_suite, validate_system, CsxmSystem,
};
use heterotest::dft::check_dft;
use heterotest::psystem::{
    generate_coverage_test_set, psystem_run, validate_psystem, PSystem, RunMode,
};
use heterotest::suite::{generate_sxm_test_suite, TestSuite};
use heterotest::sxm::{validate_sxm, Sxm};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    /// The model is ill-formed or fails the design-for-test conditions.
    Invalid = 4,
    /// Test or trace generation failed (for example a branch explosion).
    Generation = 5,
    /// The operation does not apply to this kind of model.
    WrongKind = 6,
    Panic = 7,
}

/// What a model handle holds.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HtModelKind {
    Sxm = 0,
    System = 1,
    PSystem = 2,
}

#[derive(Debug, thiserror::Error)]
enum FfiError {
    #[error("null pointer passed as {0}")]
    Null(&'static str),
    #[error("string is not UTF-8: {0}")]
    Utf8(#[from] std::str::Utf8Error),
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Generation(String),
    #[error("operation needs {0}")]
    WrongKind(&'static str),
}

impl FfiError {
    fn status(&self) -> HtStatus {
        match self {
            FfiError::Null(_) => HtStatus::NullPointer,
            FfiError::Utf8(_) => HtStatus::InvalidUtf8,
            FfiError::Parse(_) => HtStatus::Parse,
            FfiError::Invalid(_) => HtStatus::Invalid,
            FfiError::Generation(_) => HtStatus::Generation,
            FfiError::WrongKind(_) => HtStatus::WrongKind,
        }
    }
}

enum Inner {
    Sxm(Sxm),
    System(CsxmSystem),
    PSystem(PSystem),
}

/// An opaque model handle.
pub struct HtModel(Inner);

/// An opaque test suite handle.
pub struct HtSuite(TestSuite);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> HtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HtStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            e.status()
        }
        Err(_) => {
            set_error("internal panic".into());
            HtStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    Ok(CStr::from_ptr(p).to_str()?)
}

unsafe fn inner<'a>(p: *const HtModel) -> Result<&'a Inner, FfiError> {
    p.as_ref().map(|m| &m.0).ok_or(FfiError::Null("model"))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Null("out"));
    }
    *out = CString::new(s).expect("JSON has no nul bytes").into_raw();
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("library types serialize")
}

/// The message of the last failed call on this thread, or null. The
/// pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn ht_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ht_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ht_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a model from JSON. Models with a `structure` key are P systems,
/// those with `components` communicating systems, anything else a stream
/// X-machine.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ht_model_from_json(
    json: *const c_char,
    out: *mut *mut HtModel,
) -> HtStatus {
    guard(|| {
        if out.is_null() {
            return Err(FfiError::Null("out"));
        }
        let value: serde_json::Value = serde_json::from_str(text(json, "json")?)?;
        let inner = if value.get("structure").is_some() {
            Inner::PSystem(serde_json::from_value(value)?)
        } else if value.get("components").is_some() {
            Inner::System(serde_json::from_value(value)?)
        } else {
            Inner::Sxm(serde_json::from_value(value)?)
        };
        *out = Box::into_raw(Box::new(HtModel(inner)));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`ht_model_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ht_model_free(model: *mut HtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_model_kind(model: *const HtModel, out: *mut HtModelKind) -> HtStatus {
    guard(|| {
        if out.is_null() {
            return Err(FfiError::Null("out"));
        }
        *out = match inner(model)? {
            Inner::Sxm(_) => HtModelKind::Sxm,
            Inner::System(_) => HtModelKind::System,
            Inner::PSystem(_) => HtModelKind::PSystem,
        };
        Ok(())
    })
}

/// Writes the validation report as JSON to `out`. A model with violations
/// still returns `Ok`; inspect the `violations` array.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_model_validate(
    model: *const HtModel,
    out: *mut *mut c_char,
) -> HtStatus {
    guard(|| {
        let report = match inner(model)? {
            Inner::Sxm(m) => validate_sxm(m),
            Inner::System(s) => validate_system(s),
            Inner::PSystem(p) => validate_psystem(p),
        };
        put_string(out, json(&report))
    })
}

/// Writes the design-for-test report as JSON: one object for a machine, an
/// array with one entry per component for a system.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_model_check_dft(
    model: *const HtModel,
    out: *mut *mut c_char,
) -> HtStatus {
    guard(|| {
        let s = match inner(model)? {
            Inner::Sxm(m) => json(&check_dft(m).map_err(|e| FfiError::Invalid(e.to_string()))?),
            Inner::System(s) => {
                json(&check_component_dft(s).map_err(|e| FfiError::Invalid(e.to_string()))?)
            }
            Inner::PSystem(_) => return Err(FfiError::WrongKind("a stream X-machine or a system")),
        };
        put_string(out, s)
    })
}

/// Generates a W-method suite with `extra_states` extra states.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_generate_suite(
    model: *const HtModel,
    extra_states: u32,
    out: *mut *mut HtSuite,
) -> HtStatus {
    guard(|| {
        if out.is_null() {
            return Err(FfiError::Null("out"));
        }
        let k = extra_states as usize;
        let suite = match inner(model)? {
            Inner::Sxm(m) => {
                let report = validate_sxm(m);
                if !report.is_valid() {
                    return Err(FfiError::Invalid(json(&report.violations)));
                }
                generate_sxm_test_suite(m, k).map_err(|e| FfiError::Generation(e.to_string()))?
            }
            Inner::System(s) => {
                generate_csxms_test_suite(s, k)
                    .map_err(|e| FfiError::Generation(e.to_string()))?
                    .0
            }
            Inner::PSystem(_) => return Err(FfiError::WrongKind("a stream X-machine or a system")),
        };
        *out = Box::into_raw(Box::new(HtSuite(suite)));
        Ok(())
    })
}

/// Number of test cases in a suite, or 0 for null.
///
/// # Safety
/// `suite` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ht_suite_len(suite: *const HtSuite) -> usize {
    suite.as_ref().map_or(0, |s| s.0.cases.len())
}

/// # Safety
/// `suite` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_suite_to_json(
    suite: *const HtSuite,
    out: *mut *mut c_char,
) -> HtStatus {
    guard(|| {
        let suite = suite.as_ref().ok_or(FfiError::Null("suite"))?;
        put_string(out, json(&suite.0))
    })
}

/// Releases a suite. Null is ignored.
///
/// # Safety
/// `suite` must come from [`ht_generate_suite`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ht_suite_free(suite: *mut HtSuite) {
    if !suite.is_null() {
        drop(Box::from_raw(suite));
    }
}

/// Runs a P system for `depth` steps and writes the traces as a JSON
/// array. With `all_branches` nonzero every maximally parallel choice is
/// followed and `seed` is ignored.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_psystem_run(
    model: *const HtModel,
    depth: u32,
    all_branches: i32,
    seed: u64,
    out: *mut *mut c_char,
) -> HtStatus {
    guard(|| {
        let Inner::PSystem(ps) = inner(model)? else {
            return Err(FfiError::WrongKind("a P system"));
        };
        let mode = if all_branches != 0 {
            RunMode::AllBranches
        } else {
            RunMode::Seeded(seed)
        };
        let traces = psystem_run(ps, depth as usize, mode)
            .map_err(|e| FfiError::Generation(e.to_string()))?;
        put_string(out, json(&traces))
    })
}

/// Writes the rule-coverage test set of computations up to `depth` steps.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ht_psystem_coverage(
    model: *const HtModel,
    depth: u32,
    out: *mut *mut c_char,
) -> HtStatus {
    guard(|| {
        let Inner::PSystem(ps) = inner(model)? else {
            return Err(FfiError::WrongKind("a P system"));
        };
        let set = generate_coverage_test_set(ps, depth as usize)
            .map_err(|e| FfiError::Generation(e.to_string()))?;
        put_string(out, json(&set))
    })
}
