//! C ABI for the simulator: opaque handles, integer status codes, and a
//! thread-local last-error message.
//!
//! Every function that can fail returns a [`WsStatus`]; on failure the
//! human-readable cause is retrievable with [`ws_last_error_message`] from
//! the same thread. Handles are created and destroyed strictly by this
//! library: scenarios with `ws_scenario_*`, reports with `ws_report_free`,
//! strings with `ws_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use wrenchsim::cli::{metrics_from_report, parse_document, Document, MetricsReport};
use wrenchsim::sim::{run_simulation, Scenario, SimError};
use wrenchsim::task::TaskReport;

/// Status codes returned by every fallible entry point.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidScenario = 4,
    TaskAborted = 5,
    NumericalDivergence = 6,
    IoError = 7,
}

/// Opaque scenario handle.
pub struct WsScenario {
    inner: Scenario,
}

/// Opaque result handle for one completed run.
pub struct WsReport {
    report: TaskReport,
    metrics: MetricsReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: WsStatus, message: String) -> WsStatus {
    let cstring = CString::new(message)
        .unwrap_or_else(|_| CString::new("error message contained a NUL byte").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
    status
}

fn sim_error_status(e: &SimError) -> WsStatus {
    match e {
        SimError::InvalidScenario(_) => WsStatus::InvalidScenario,
        SimError::TaskAborted(_) => WsStatus::TaskAborted,
        SimError::NumericalDivergence { .. } => WsStatus::NumericalDivergence,
    }
}

/// Message for the most recent failure on this thread, or NULL if none.
///
/// The pointer stays valid until the next failing call on the same thread;
/// do not free it.
#[no_mangle]
pub extern "C" fn ws_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |msg| msg.as_ptr())
    })
}

unsafe fn scenario_from_text(text: &str, out: *mut *mut WsScenario) -> WsStatus {
    let file = match parse_document(text) {
        Ok(Document::Scenario(file)) => file,
        Ok(Document::Replay(_)) => {
            return fail(
                WsStatus::ParseError,
                "replay documents describe recorded geometry and cannot be run".into(),
            );
        }
        Err(e) => return fail(WsStatus::ParseError, e.to_string()),
    };
    match file.to_scenario() {
        Ok(scenario) => {
            *out = Box::into_raw(Box::new(WsScenario { inner: scenario }));
            WsStatus::Ok
        }
        Err(e) => fail(WsStatus::InvalidScenario, e.to_string()),
    }
}

/// Parse a TOML scenario document into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer; on
/// `WS_STATUS_OK` the caller owns `*out` and must release it with
/// `ws_scenario_free`.
#[no_mangle]
pub unsafe extern "C" fn ws_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut WsScenario,
) -> WsStatus {
    if text.is_null() || out.is_null() {
        return fail(WsStatus::NullArgument, "text and out must be non-NULL".into());
    }
    *out = ptr::null_mut();
    let text = match CStr::from_ptr(text).to_str() {
        Ok(t) => t,
        Err(e) => return fail(WsStatus::InvalidUtf8, format!("scenario text is not UTF-8: {e}")),
    };
    scenario_from_text(text, out)
}

/// Read and parse a TOML scenario file into a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer; on
/// `WS_STATUS_OK` the caller owns `*out` and must release it with
/// `ws_scenario_free`.
#[no_mangle]
pub unsafe extern "C" fn ws_scenario_load(
    path: *const c_char,
    out: *mut *mut WsScenario,
) -> WsStatus {
    if path.is_null() || out.is_null() {
        return fail(WsStatus::NullArgument, "path and out must be non-NULL".into());
    }
    *out = ptr::null_mut();
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(e) => return fail(WsStatus::InvalidUtf8, format!("path is not UTF-8: {e}")),
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(WsStatus::IoError, format!("cannot read {path}: {e}")),
    };
    scenario_from_text(&text, out)
}

/// Replace the scenario's RNG seed.
///
/// # Safety
/// `scenario` must be a live handle from `ws_scenario_from_toml` or
/// `ws_scenario_load`.
#[no_mangle]
pub unsafe extern "C" fn ws_scenario_set_seed(scenario: *mut WsScenario, seed: u64) -> WsStatus {
    match scenario.as_mut() {
        Some(s) => {
            s.inner.seed = seed;
            WsStatus::Ok
        }
        None => fail(WsStatus::NullArgument, "scenario must be non-NULL".into()),
    }
}

/// Replace the scenario's timestep in seconds; must be positive.
///
/// # Safety
/// `scenario` must be a live handle from `ws_scenario_from_toml` or
/// `ws_scenario_load`.
#[no_mangle]
pub unsafe extern "C" fn ws_scenario_set_dt(scenario: *mut WsScenario, dt: f64) -> WsStatus {
    let s = match scenario.as_mut() {
        Some(s) => s,
        None => return fail(WsStatus::NullArgument, "scenario must be non-NULL".into()),
    };
    if !(dt > 0.0 && dt.is_finite()) {
        return fail(WsStatus::InvalidScenario, "dt must be positive and finite".into());
    }
    s.inner.dt = dt;
    WsStatus::Ok
}

/// Release a scenario handle; NULL is a no-op.
///
/// # Safety
/// `scenario` must be NULL or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ws_scenario_free(scenario: *mut WsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run the scenario to completion and hand back a report.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer; on `WS_STATUS_OK`
/// the caller owns `*out` and must release it with `ws_report_free`.
#[no_mangle]
pub unsafe extern "C" fn ws_run(scenario: *const WsScenario, out: *mut *mut WsReport) -> WsStatus {
    let s = match scenario.as_ref() {
        Some(s) => s,
        None => return fail(WsStatus::NullArgument, "scenario must be non-NULL".into()),
    };
    if out.is_null() {
        return fail(WsStatus::NullArgument, "out must be non-NULL".into());
    }
    *out = ptr::null_mut();
    match run_simulation(&s.inner) {
        Ok((report, _)) => {
            let metrics = metrics_from_report(
                &report,
                s.inner.payload.com_offset.x,
                s.inner.plan.layer_index,
            );
            *out = Box::into_raw(Box::new(WsReport { report, metrics }));
            WsStatus::Ok
        }
        Err(e) => fail(sim_error_status(&e), e.to_string()),
    }
}

unsafe fn with_report<T>(
    report: *const WsReport,
    out: *mut T,
    read: impl FnOnce(&WsReport) -> T,
) -> WsStatus {
    match (report.as_ref(), out.is_null()) {
        (Some(r), false) => {
            *out = read(r);
            WsStatus::Ok
        }
        _ => fail(WsStatus::NullArgument, "report and out must be non-NULL".into()),
    }
}

/// Final mass estimate, kg.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ws_report_mass_estimate(
    report: *const WsReport,
    out: *mut f64,
) -> WsStatus {
    with_report(report, out, |r| r.report.mass_estimate.m_hat)
}

/// Filtered CoM-offset estimate, meters, written as x,y,z.
///
/// # Safety
/// `report` must be a live handle and `out` must point to at least three
/// f64 slots.
#[no_mangle]
pub unsafe extern "C" fn ws_report_offset_estimate(
    report: *const WsReport,
    out: *mut f64,
) -> WsStatus {
    let r = match report.as_ref() {
        Some(r) => r,
        None => return fail(WsStatus::NullArgument, "report must be non-NULL".into()),
    };
    if out.is_null() {
        return fail(WsStatus::NullArgument, "out must be non-NULL".into());
    }
    let v = r.report.offset_estimate.r_hat_filtered;
    *out.add(0) = v.x;
    *out.add(1) = v.y;
    *out.add(2) = v.z;
    WsStatus::Ok
}

/// Distance between commanded and achieved TCP at release, meters.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ws_report_execution_error(
    report: *const WsReport,
    out: *mut f64,
) -> WsStatus {
    with_report(report, out, |r| r.report.placement.execution_error)
}

/// Whether the placed object rests inside the support region.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ws_report_stable(report: *const WsReport, out: *mut bool) -> WsStatus {
    with_report(report, out, |r| r.report.stable)
}

/// Full metrics document as a JSON string; distances in mm.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer; on `WS_STATUS_OK`
/// the caller owns `*out` and must release it with `ws_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ws_report_metrics_json(
    report: *const WsReport,
    out: *mut *mut c_char,
) -> WsStatus {
    let r = match report.as_ref() {
        Some(r) => r,
        None => return fail(WsStatus::NullArgument, "report must be non-NULL".into()),
    };
    if out.is_null() {
        return fail(WsStatus::NullArgument, "out must be non-NULL".into());
    }
    *out = ptr::null_mut();
    let json = match serde_json::to_string(&r.metrics) {
        Ok(j) => j,
        Err(e) => return fail(WsStatus::IoError, format!("cannot serialize metrics: {e}")),
    };
    match CString::new(json) {
        Ok(c) => {
            *out = c.into_raw();
            WsStatus::Ok
        }
        Err(_) => fail(WsStatus::IoError, "metrics JSON contained a NUL byte".into()),
    }
}

/// Release a string returned by this library; NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a pointer obtained from `ws_report_metrics_json`
/// that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ws_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release a report handle; NULL is a no-op.
///
/// # Safety
/// `report` must be NULL or a live handle that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ws_report_free(report: *mut WsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
