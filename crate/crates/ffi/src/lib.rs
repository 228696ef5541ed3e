//! C ABI for the termstruct library.
//!
//! Scenarios are opaque handles created from JSON; results come back as
//! JSON strings allocated by this library (free them with
//! `ts_string_free`). All functions return a `TsStatus`; on failure the
//! thread-local message from `ts_last_error` describes what went wrong.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use termstruct::drift_engine::{construct_consistent_drift, residual_check};
use termstruct::model::{BondModel, ModelSampler, PathBundle};
use termstruct::sim_lab::mc::{mc_martingale_test, representation_equivalence_test};
use termstruct::sim_lab::{binomial_oracle, ScenarioFile};
use termstruct::TsError;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(msg).ok();
    });
}

/// Status codes mirroring the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    /// Schema or JSON parse failure.
    Schema = 2,
    /// Numeric or model failure.
    Numeric = 3,
    /// An audit or test did not pass.
    Audit = 4,
    /// A required pointer argument was null.
    NullArgument = 5,
    /// A string argument was not valid UTF-8.
    Utf8 = 6,
}

fn status_of(e: &TsError) -> TsStatus {
    match e {
        TsError::Schema(_) | TsError::Json(_) => TsStatus::Schema,
        _ => TsStatus::Numeric,
    }
}

/// Opaque scenario handle: the parsed file plus the built model.
pub struct TsScenario {
    scenario: ScenarioFile,
    model: BondModel,
}

fn to_out_string(s: String, out: *mut *mut c_char) -> TsStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            TsStatus::Ok
        }
        Err(_) => {
            set_error("report contained an interior NUL byte".into());
            TsStatus::Numeric
        }
    }
}

/// Last error message for this thread, or null. The pointer is valid until
/// the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn ts_last_error() -> *const c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(c) => c.as_ptr(),
        None => ptr::null(),
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse a scenario from JSON and build its model.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer; the
/// returned handle must be freed with `ts_scenario_free`.
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_parse(
    json: *const c_char,
    out: *mut *mut TsScenario,
) -> TsStatus {
    if json.is_null() || out.is_null() {
        set_error("null argument".into());
        return TsStatus::NullArgument;
    }
    let Ok(text) = CStr::from_ptr(json).to_str() else {
        set_error("scenario JSON is not valid UTF-8".into());
        return TsStatus::Utf8;
    };
    match ScenarioFile::from_str(text).and_then(|sc| {
        let model = sc.to_model()?;
        Ok(TsScenario {
            scenario: sc,
            model,
        })
    }) {
        Ok(handle) => {
            *out = Box::into_raw(Box::new(handle));
            TsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Load a scenario from a file path.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_load(
    path: *const c_char,
    out: *mut *mut TsScenario,
) -> TsStatus {
    if path.is_null() || out.is_null() {
        set_error("null argument".into());
        return TsStatus::NullArgument;
    }
    let Ok(p) = CStr::from_ptr(path).to_str() else {
        set_error("path is not valid UTF-8".into());
        return TsStatus::Utf8;
    };
    match ScenarioFile::from_path(Path::new(p)).and_then(|sc| {
        let model = sc.to_model()?;
        Ok(TsScenario {
            scenario: sc,
            model,
        })
    }) {
        Ok(handle) => {
            *out = Box::into_raw(Box::new(handle));
            TsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Free a scenario handle.
///
/// # Safety
/// `handle` must come from `ts_scenario_parse`/`ts_scenario_load` and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_free(handle: *mut TsScenario) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must come from a `*_json` out-parameter of this library.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Solve the drift conditions and install the consistent drift in place.
///
/// # Safety
/// `handle` must be a valid scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ts_construct_drift(handle: *mut TsScenario) -> TsStatus {
    let Some(h) = handle.as_mut() else {
        set_error("null handle".into());
        return TsStatus::NullArgument;
    };
    match construct_consistent_drift(&h.model) {
        Ok(built) => {
            h.model = built.model;
            TsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

fn sample_paths(model: &BondModel, seed: u64, n: usize) -> termstruct::Result<Vec<PathBundle>> {
    let sampler = ModelSampler::new(Arc::new(model.clone()))?;
    (0..n as u64)
        .map(|i| {
            let mut rng = termstruct::rng::path_rng(seed, i);
            sampler.sample(&mut rng)
        })
        .collect()
}

/// Run the residual audit over `paths` simulated paths; the report comes
/// back as JSON in `json_out`. Returns `Audit` when any residual exceeds
/// 1e-8.
///
/// # Safety
/// `handle` must be valid and `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_residual_audit(
    handle: *const TsScenario,
    seed: u64,
    paths: u64,
    json_out: *mut *mut c_char,
) -> TsStatus {
    let Some(h) = handle.as_ref() else {
        set_error("null handle".into());
        return TsStatus::NullArgument;
    };
    if json_out.is_null() {
        set_error("null out pointer".into());
        return TsStatus::NullArgument;
    }
    let run = || -> termstruct::Result<(String, bool)> {
        let bundles = sample_paths(&h.model, seed, paths.max(1) as usize)?;
        let report = residual_check(&h.model, &bundles, &h.scenario.maturities)?;
        let pass = report.overall_max <= 1e-8;
        Ok((serde_json::to_string(&report)?, pass))
    };
    match run() {
        Ok((json, pass)) => {
            let st = to_out_string(json, json_out);
            if st != TsStatus::Ok {
                return st;
            }
            if pass {
                TsStatus::Ok
            } else {
                TsStatus::Audit
            }
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Monte Carlo martingale test; the report comes back as JSON.
/// Returns `Audit` when max |z| exceeds the scenario threshold.
///
/// # Safety
/// `handle` must be valid and `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_mc_test(
    handle: *const TsScenario,
    seed: u64,
    paths: u64,
    json_out: *mut *mut c_char,
) -> TsStatus {
    let Some(h) = handle.as_ref() else {
        set_error("null handle".into());
        return TsStatus::NullArgument;
    };
    if json_out.is_null() {
        set_error("null out pointer".into());
        return TsStatus::NullArgument;
    }
    let run = || -> termstruct::Result<(String, bool)> {
        let checkpoints = h.scenario.checkpoints(&h.model.grid)?;
        let report = mc_martingale_test(
            &h.model,
            &h.scenario.maturities,
            paths.max(1) as usize,
            &checkpoints,
            seed,
            h.scenario.mc.z_threshold,
        )?;
        let pass = report.pass;
        Ok((serde_json::to_string(&report)?, pass))
    };
    match run() {
        Ok((json, pass)) => {
            let st = to_out_string(json, json_out);
            if st != TsStatus::Ok {
                return st;
            }
            if pass {
                TsStatus::Ok
            } else {
                TsStatus::Audit
            }
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Max pathwise discrepancy among the three price representations.
///
/// # Safety
/// `handle` must be valid and `max_error_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_representation_test(
    handle: *const TsScenario,
    seed: u64,
    paths: u64,
    max_error_out: *mut f64,
) -> TsStatus {
    let Some(h) = handle.as_ref() else {
        set_error("null handle".into());
        return TsStatus::NullArgument;
    };
    if max_error_out.is_null() {
        set_error("null out pointer".into());
        return TsStatus::NullArgument;
    }
    match representation_equivalence_test(
        &h.model,
        &h.scenario.maturities,
        paths.max(1) as usize,
        seed,
    ) {
        Ok(worst) => {
            *max_error_out = worst;
            TsStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}

/// Full-enumeration oracle for two-period specs; tables as JSON.
///
/// # Safety
/// `handle` must be valid and `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_oracle(
    handle: *const TsScenario,
    json_out: *mut *mut c_char,
) -> TsStatus {
    let Some(h) = handle.as_ref() else {
        set_error("null handle".into());
        return TsStatus::NullArgument;
    };
    if json_out.is_null() {
        set_error("null out pointer".into());
        return TsStatus::NullArgument;
    }
    match binomial_oracle(&h.model, &h.scenario.maturities)
        .and_then(|t| Ok(serde_json::to_string(&t)?))
    {
        Ok(json) => to_out_string(json, json_out),
        Err(e) => {
            set_error(e.to_string());
            status_of(&e)
        }
    }
}
