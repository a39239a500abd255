//! C ABI over `spl-core`.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `*_free`. Every fallible call returns an [`SplStatus`]; on failure the
//! message is available from [`spl_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use spl_core::case2::Status;
use spl_core::config::{Overrides, RunConfig};
use spl_core::eigen::{first_eigenpair, EigenOptions};
use spl_core::mesh::{build_mesh, DiscreteSpace, Domain};
use spl_core::run::{error_exit_code, run, RunOutcome, EXIT_CONFIG};
use spl_core::weights::Weight;
use spl_core::SplError;

/// Return codes. 0 to 3 coincide with the `spl` exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplStatus {
    Ok = 0,
    SolverFailure = 1,
    ConfigError = 2,
    CertificateFailure = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    BufferTooSmall = 6,
    Panic = 7,
    UnknownName = 8,
}

/// Aggregate certificate outcome of a completed run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplCertificate {
    Pass = 0,
    Warn = 1,
    Fail = 2,
}

/// Parsed and validated run configuration.
pub struct SplConfig {
    inner: RunConfig,
}

/// Outcome of [`spl_run`].
pub struct SplResult {
    outcome: RunOutcome,
    report: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(s).expect("nul bytes removed")));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &SplError) -> SplStatus {
    if error_exit_code(e) == EXIT_CONFIG {
        SplStatus::ConfigError
    } else {
        SplStatus::SolverFailure
    }
}

fn fail(e: SplError) -> SplStatus {
    let status = status_of(&e);
    let msg = match e.stage() {
        Some(stage) => format!("stage {stage}: {e}"),
        None => e.to_string(),
    };
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SplStatus) -> SplStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SplStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SplStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        return Err(SplStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        SplStatus::InvalidUtf8
    })
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Last error message on this thread, or null. Valid until the next call
/// into this library from the same thread.
#[no_mangle]
pub extern "C" fn spl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML config file. Relative table paths resolve against its
/// directory.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spl_config_from_file(path: *const c_char, out: *mut *mut SplConfig) -> SplStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return SplStatus::NullPointer;
        }
        let path = tri!(str_arg(path, "path"));
        match RunConfig::from_file(Path::new(path), &Overrides::default()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SplConfig { inner }));
                SplStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses TOML text. `base_dir` may be null (current directory).
///
/// # Safety
/// `text` and `base_dir` (if non-null) must be NUL-terminated strings and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spl_config_from_toml(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut SplConfig,
) -> SplStatus {
    guard(|| {
        if out.is_null() {
            set_error("out is null");
            return SplStatus::NullPointer;
        }
        let text = tri!(str_arg(text, "text"));
        let base = if base_dir.is_null() {
            PathBuf::from(".")
        } else {
            PathBuf::from(tri!(str_arg(base_dir, "base_dir")))
        };
        match RunConfig::from_str_with(text, &base, &Overrides::default()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SplConfig { inner }));
                SplStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Redirects the outputs of a config.
///
/// # Safety
/// `cfg` must come from a config constructor; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn spl_config_set_output(cfg: *mut SplConfig, dir: *const c_char) -> SplStatus {
    guard(|| {
        let Some(cfg) = cfg.as_mut() else {
            set_error("cfg is null");
            return SplStatus::NullPointer;
        };
        cfg.inner.output = PathBuf::from(tri!(str_arg(dir, "dir")));
        SplStatus::Ok
    })
}

/// Overrides the random seed.
///
/// # Safety
/// `cfg` must come from a config constructor.
#[no_mangle]
pub unsafe extern "C" fn spl_config_set_seed(cfg: *mut SplConfig, seed: u64) -> SplStatus {
    guard(|| {
        let Some(cfg) = cfg.as_mut() else {
            set_error("cfg is null");
            return SplStatus::NullPointer;
        };
        cfg.inner.seed = seed;
        SplStatus::Ok
    })
}

/// # Safety
/// `cfg` must be null or come from a config constructor, and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn spl_config_free(cfg: *mut SplConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured case and writes its outputs. On `Ok` or
/// `CertificateFailure` `*out` receives a result handle; otherwise it is
/// left null.
///
/// # Safety
/// `cfg` must come from a config constructor and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spl_run(cfg: *const SplConfig, out: *mut *mut SplResult) -> SplStatus {
    guard(|| {
        let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
            set_error("cfg or out is null");
            return SplStatus::NullPointer;
        };
        *out = ptr::null_mut();
        match run(&cfg.inner) {
            Ok(outcome) => {
                let text = serde_json::to_string(&outcome.report).expect("json value serializes");
                let report = CString::new(text).expect("json has no NUL");
                let status = if outcome.status == Status::Fail {
                    set_error("a hard certificate failed");
                    SplStatus::CertificateFailure
                } else {
                    SplStatus::Ok
                };
                *out = Box::into_raw(Box::new(SplResult { outcome, report }));
                status
            }
            Err(e) => fail(e),
        }
    })
}

/// Aggregate certificate status; `Fail` for a null handle.
///
/// # Safety
/// `res` must be null or come from [`spl_run`].
#[no_mangle]
pub unsafe extern "C" fn spl_result_status(res: *const SplResult) -> SplCertificate {
    match res.as_ref().map(|r| r.outcome.status) {
        Some(Status::Pass) => SplCertificate::Pass,
        Some(Status::Warn) => SplCertificate::Warn,
        _ => SplCertificate::Fail,
    }
}

/// Status of one named certificate; `UnknownName` if there is none.
///
/// # Safety
/// `res` must come from [`spl_run`]; `name` must be NUL-terminated; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spl_result_certificate(
    res: *const SplResult,
    name: *const c_char,
    out: *mut SplCertificate,
) -> SplStatus {
    guard(|| {
        let (Some(res), false) = (res.as_ref(), out.is_null()) else {
            set_error("res or out is null");
            return SplStatus::NullPointer;
        };
        let name = tri!(str_arg(name, "name"));
        match res.outcome.certificates.get(name) {
            Some(s) => {
                *out = match s {
                    Status::Pass => SplCertificate::Pass,
                    Status::Warn => SplCertificate::Warn,
                    Status::Fail => SplCertificate::Fail,
                };
                SplStatus::Ok
            }
            None => {
                set_error(format!("unknown certificate `{name}`"));
                SplStatus::UnknownName
            }
        }
    })
}

/// JSON report, owned by the handle.
///
/// # Safety
/// `res` must be null or come from [`spl_run`].
#[no_mangle]
pub unsafe extern "C" fn spl_result_report_json(res: *const SplResult) -> *const c_char {
    res.as_ref().map_or(ptr::null(), |r| r.report.as_ptr())
}

/// # Safety
/// `res` must be null or come from [`spl_run`], and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn spl_result_free(res: *mut SplResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// First eigenpair of the p-Laplacian on (a, b) with unit weight. Writes
/// λ₁ to `lambda1`; if `values` is non-null, the sup-normalized nodal
/// eigenfunction (`elements + 1` values) is copied there, provided
/// `len >= elements + 1`.
///
/// # Safety
/// `lambda1` must be valid; `values` must be null or point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spl_eigen_interval(
    a: f64,
    b: f64,
    elements: usize,
    p: f64,
    lambda1: *mut f64,
    values: *mut f64,
    len: usize,
) -> SplStatus {
    guard(|| {
        if lambda1.is_null() {
            set_error("lambda1 is null");
            return SplStatus::NullPointer;
        }
        if !values.is_null() && len < elements + 1 {
            set_error(format!("values needs {} entries, got {len}", elements + 1));
            return SplStatus::BufferTooSmall;
        }
        let pair = Weight::constant(1.0, 1, p)
            .and_then(|w| DiscreteSpace::new(build_mesh(&Domain::interval(a, b), elements)?, &w))
            .and_then(|s| first_eigenpair(&s, &EigenOptions::default()));
        match pair {
            Ok(e) => {
                *lambda1 = e.lambda1;
                if !values.is_null() {
                    ptr::copy_nonoverlapping(e.e1.values().as_ptr(), values, e.e1.len());
                }
                SplStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_arguments_are_reported() {
        unsafe {
            let mut cfg = ptr::null_mut();
            assert_eq!(spl_config_from_toml(ptr::null(), ptr::null(), &mut cfg), SplStatus::NullPointer);
            assert!(!spl_last_error().is_null());
            assert_eq!(spl_run(ptr::null(), ptr::null_mut()), SplStatus::NullPointer);
            assert_eq!(spl_result_status(ptr::null()), SplCertificate::Fail);
            spl_config_free(ptr::null_mut());
            spl_result_free(ptr::null_mut());
        }
    }

    #[test]
    fn panics_are_contained() {
        assert_eq!(guard(|| panic!("boom")), SplStatus::Panic);
        let msg = unsafe { CStr::from_ptr(spl_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }
}
