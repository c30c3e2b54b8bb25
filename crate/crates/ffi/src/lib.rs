//! C ABI over `pairgen`.
//!
//! Models and suites cross the boundary as opaque handles created by this
//! library and released with the matching `*_free` function. Every fallible
//! call returns a `PgStatus` code; on failure, `pg_last_error` describes the
//! most recent error on the calling thread. Strings returned by the library
//! are NUL-terminated, owned by the caller, and released with
//! `pg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;
use std::time::Duration;

use pairgen::interactions::build_universe;
use pairgen::pipeline::{check_soundness, minimize_suite, run, PipelineConfig};
use pairgen::{io, ConstraintSet, FactorSystem, TestSuite};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    OutOfRange = 4,
    ModelMismatch = 5,
    Generate = 6,
    Unsound = 7,
    Panic = 8,
}

/// A parsed factor system with its constraints.
pub struct PgModel {
    system: Arc<FactorSystem>,
    constraints: ConstraintSet,
}

/// A test suite bound to the model it was created from.
pub struct PgSuite {
    suite: TestSuite,
    degraded: bool,
}

/// Generation settings. Obtain defaults from `pg_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgOptions {
    pub weighted: bool,
    /// Share of warm-start rows retained, in [0, 1].
    pub alpha: f64,
    pub step_time_limit_s: f64,
    pub minimize_time_limit_s: f64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: PgStatus, msg: impl Into<String>) -> PgStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `PgStatus::Panic`.
fn guard(f: impl FnOnce() -> PgStatus) -> PgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PgStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, PgStatus> {
    if p.is_null() {
        return Err(fail(PgStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PgStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn give_string(s: String, out: *mut *mut c_char) -> PgStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            PgStatus::Ok
        }
        Err(_) => fail(PgStatus::Parse, "output contains a NUL byte"),
    }
}

fn duration(secs: f64) -> Result<Duration, PgStatus> {
    Duration::try_from_secs_f64(secs).map_err(|_| fail(PgStatus::OutOfRange, format!("invalid time limit {secs}")))
}

fn config(opts: &PgOptions) -> Result<PipelineConfig, PgStatus> {
    Ok(PipelineConfig {
        weighted: opts.weighted,
        alpha: opts.alpha,
        step_time_limit: duration(opts.step_time_limit_s)?,
        minimize_time_limit: duration(opts.minimize_time_limit_s)?,
        seed: opts.seed,
        ..PipelineConfig::default()
    })
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(PgStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn pg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn pg_options_default() -> PgOptions {
    let d = PipelineConfig::default();
    PgOptions {
        weighted: d.weighted,
        alpha: d.alpha,
        step_time_limit_s: d.step_time_limit.as_secs_f64(),
        minimize_time_limit_s: d.minimize_time_limit.as_secs_f64(),
        seed: d.seed,
    }
}

/// Parses model text (factor lines plus `AVOID:` and `MUST:` lines).
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_model_parse(text: *const c_char, out: *mut *mut PgModel) -> PgStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match io::parse_model(text) {
            Ok((system, constraints)) => {
                *out = Box::into_raw(Box::new(PgModel {
                    system: Arc::new(system),
                    constraints,
                }));
                PgStatus::Ok
            }
            Err(e) => fail(PgStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `model` must come from `pg_model_parse` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pg_model_free(model: *mut PgModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn pg_model_factor_count(model: *const PgModel) -> usize {
    model.as_ref().map_or(0, |m| m.system.factor_count())
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_model_level_count(model: *const PgModel, factor: usize, out: *mut usize) -> PgStatus {
    guard(|| {
        non_null!(model, out);
        let m = &*model;
        if factor >= m.system.factor_count() {
            return fail(PgStatus::OutOfRange, format!("factor {factor} out of range"));
        }
        *out = m.system.levels(factor);
        PgStatus::Ok
    })
}

/// Runs the full pipeline. `warm` may be null; when given it must be a suite
/// over the same model. `opts` may be null for defaults.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_generate(
    model: *const PgModel,
    opts: *const PgOptions,
    warm: *const PgSuite,
    out: *mut *mut PgSuite,
) -> PgStatus {
    guard(|| {
        non_null!(model, out);
        let m = &*model;
        let opts = opts.as_ref().copied().unwrap_or_else(|| pg_options_default());
        let cfg = match config(&opts) {
            Ok(c) => c,
            Err(s) => return s,
        };
        let warm = warm.as_ref().map(|w| &w.suite);
        if warm.is_some_and(|w| !w.is_over(&m.system)) {
            return fail(PgStatus::ModelMismatch, "warm-start suite belongs to another model");
        }
        match run(&m.system, &m.constraints, &cfg, warm) {
            Ok(r) => {
                let degraded = r.degradation.is_degraded();
                *out = Box::into_raw(Box::new(PgSuite {
                    suite: r.final_suite,
                    degraded,
                }));
                PgStatus::Ok
            }
            Err(e) => fail(PgStatus::Generate, e.to_string()),
        }
    })
}

/// Reads a CSV suite (header row of factor names) against `model`.
///
/// # Safety
/// `model` must be live, `csv` a valid string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_suite_from_csv(model: *const PgModel, csv: *const c_char, out: *mut *mut PgSuite) -> PgStatus {
    guard(|| {
        non_null!(model, out);
        let text = match read_str(csv) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match io::read_suite_csv(text, &(*model).system) {
            Ok(suite) => {
                *out = Box::into_raw(Box::new(PgSuite { suite, degraded: false }));
                PgStatus::Ok
            }
            Err(e) => fail(PgStatus::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `suite` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pg_suite_free(suite: *mut PgSuite) {
    if !suite.is_null() {
        drop(Box::from_raw(suite));
    }
}

/// # Safety
/// `suite` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn pg_suite_len(suite: *const PgSuite) -> usize {
    suite.as_ref().map_or(0, |s| s.suite.len())
}

/// True when generation fell back to a non-proven step or a non-minimal
/// reduction.
///
/// # Safety
/// `suite` must be a live handle or null (which yields false).
#[no_mangle]
pub unsafe extern "C" fn pg_suite_degraded(suite: *const PgSuite) -> bool {
    suite.as_ref().is_some_and(|s| s.degraded)
}

/// Level index of `factor` in row `row`.
///
/// # Safety
/// `suite` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_suite_level(suite: *const PgSuite, row: usize, factor: usize, out: *mut usize) -> PgStatus {
    guard(|| {
        non_null!(suite, out);
        let s = &(*suite).suite;
        match s.cases().get(row) {
            Some(tc) if factor < tc.len() => {
                *out = tc.level(factor);
                PgStatus::Ok
            }
            _ => fail(PgStatus::OutOfRange, format!("cell ({row}, {factor}) out of range")),
        }
    })
}

/// Writes the suite as CSV with level names. Free the result with
/// `pg_string_free`.
///
/// # Safety
/// `suite` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_suite_to_csv(suite: *const PgSuite, out: *mut *mut c_char) -> PgStatus {
    guard(|| {
        non_null!(suite, out);
        match io::write_suite_csv(&(*suite).suite) {
            Ok(text) => give_string(text, out),
            Err(e) => fail(PgStatus::Parse, e.to_string()),
        }
    })
}

/// Checks full coverage of achievable pairs, must inclusion and avoid
/// cleanliness. Returns `Ok` with `*sound` set either way.
///
/// # Safety
/// Handles must be live and `sound` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_verify(model: *const PgModel, suite: *const PgSuite, sound: *mut bool) -> PgStatus {
    guard(|| {
        non_null!(model, suite, sound);
        let (m, s) = (&*model, &(*suite).suite);
        if !s.is_over(&m.system) {
            return fail(PgStatus::ModelMismatch, "suite does not match the model");
        }
        let universe = build_universe(&m.system, &m.constraints, false);
        let report = check_soundness(s, &universe, &m.constraints);
        *sound = report.is_sound();
        if !report.is_sound() {
            set_error(format!("{report:?}"));
        }
        PgStatus::Ok
    })
}

/// Removes redundant rows from a sound suite by exact set cover.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_minimize(model: *const PgModel, suite: *const PgSuite, time_limit_s: f64, out: *mut *mut PgSuite) -> PgStatus {
    guard(|| {
        non_null!(model, suite, out);
        let (m, s) = (&*model, &(*suite).suite);
        if !s.is_over(&m.system) {
            return fail(PgStatus::ModelMismatch, "suite does not match the model");
        }
        let limit = match duration(time_limit_s) {
            Ok(d) => d,
            Err(st) => return st,
        };
        let universe = build_universe(&m.system, &m.constraints, false);
        let report = check_soundness(s, &universe, &m.constraints);
        if !report.is_sound() {
            return fail(PgStatus::Unsound, format!("refusing to minimize an unsound suite: {report:?}"));
        }
        let suite = TestSuite::new(Arc::clone(&m.system), s.cases().to_vec()).expect("checked against the model");
        match minimize_suite(&suite, &universe, m.constraints.must(), limit, pairgen::milp::REFERENCE_BACKEND) {
            Ok(min) => {
                *out = Box::into_raw(Box::new(PgSuite {
                    suite: min.suite,
                    degraded: !min.proven_minimal,
                }));
                PgStatus::Ok
            }
            Err(e) => fail(PgStatus::Generate, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn pg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
