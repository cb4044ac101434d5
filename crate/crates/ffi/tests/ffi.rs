//! Drives the C entry points the way a foreign caller would: raw pointers,
//! status codes, and explicit frees.

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use wrenchsim_ffi::*;

fn reference_toml() -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.toml");
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    let ptr = ws_last_error_message();
    assert!(!ptr.is_null(), "expected an error message");
    unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string()
}

#[test]
fn full_run_through_the_c_surface() {
    unsafe {
        let text = reference_toml();
        let mut scenario: *mut WsScenario = ptr::null_mut();
        assert_eq!(ws_scenario_from_toml(text.as_ptr(), &mut scenario), WsStatus::Ok);
        assert!(!scenario.is_null());

        let mut report: *mut WsReport = ptr::null_mut();
        assert_eq!(ws_run(scenario, &mut report), WsStatus::Ok);
        assert!(!report.is_null());

        let mut mass = 0.0_f64;
        assert_eq!(ws_report_mass_estimate(report, &mut mass), WsStatus::Ok);
        assert!((mass - 1.0).abs() <= 1e-9, "mass {mass}");

        let mut offset = [0.0_f64; 3];
        assert_eq!(ws_report_offset_estimate(report, offset.as_mut_ptr()), WsStatus::Ok);
        assert!((offset[0] - 0.085).abs() <= 1e-9, "offset {offset:?}");
        assert!(offset[1].abs() <= 1e-9 && offset[2].abs() <= 1e-9);

        let mut exec_err = f64::NAN;
        assert_eq!(ws_report_execution_error(report, &mut exec_err), WsStatus::Ok);
        assert!(exec_err <= 1e-9, "execution error {exec_err}");

        let mut stable = false;
        assert_eq!(ws_report_stable(report, &mut stable), WsStatus::Ok);
        assert!(stable);

        let mut json: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(ws_report_metrics_json(report, &mut json), WsStatus::Ok);
        let parsed: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(parsed["stable_layers"], 1);
        assert!((parsed["placement"]["commanded_tcp_mm"][0].as_f64().unwrap() - -385.0).abs() <= 1e-6);
        ws_string_free(json);

        ws_report_free(report);
        ws_scenario_free(scenario);
    }
}

#[test]
fn load_from_file_and_overrides() {
    unsafe {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/noisy.toml");
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        let mut scenario: *mut WsScenario = ptr::null_mut();
        assert_eq!(ws_scenario_load(c_path.as_ptr(), &mut scenario), WsStatus::Ok);

        assert_eq!(ws_scenario_set_seed(scenario, 99), WsStatus::Ok);
        assert_eq!(ws_scenario_set_dt(scenario, 0.004), WsStatus::Ok);
        assert_eq!(ws_scenario_set_dt(scenario, -1.0), WsStatus::InvalidScenario);
        assert!(last_error().contains("dt"));

        let mut report: *mut WsReport = ptr::null_mut();
        assert_eq!(ws_run(scenario, &mut report), WsStatus::Ok);
        ws_report_free(report);
        ws_scenario_free(scenario);
    }
}

#[test]
fn missing_file_reports_io_error() {
    unsafe {
        let c_path = CString::new("/nonexistent/scenario.toml").unwrap();
        let mut scenario: *mut WsScenario = ptr::null_mut();
        assert_eq!(ws_scenario_load(c_path.as_ptr(), &mut scenario), WsStatus::IoError);
        assert!(scenario.is_null());
        assert!(last_error().contains("/nonexistent/scenario.toml"));
    }
}

#[test]
fn parse_failures_set_the_thread_error() {
    unsafe {
        let bad = CString::new("not toml at all [").unwrap();
        let mut scenario: *mut WsScenario = ptr::null_mut();
        assert_eq!(ws_scenario_from_toml(bad.as_ptr(), &mut scenario), WsStatus::ParseError);
        assert!(scenario.is_null());
        assert!(!last_error().is_empty());

        let replay = CString::new(
            "[replay]\ntarget_mm = [0.0, 0.0]\nideal_correction_mm = [0.0, 0.0]\n\
             estimated_correction_mm = [0.0, 0.0]\nactual_tcp_mm = [0.0, 0.0]\n",
        )
        .unwrap();
        assert_eq!(
            ws_scenario_from_toml(replay.as_ptr(), &mut scenario),
            WsStatus::ParseError
        );
        assert!(last_error().contains("replay"));
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut scenario: *mut WsScenario = ptr::null_mut();
        assert_eq!(
            ws_scenario_from_toml(ptr::null(), &mut scenario),
            WsStatus::NullArgument
        );
        let text = reference_toml();
        assert_eq!(
            ws_scenario_from_toml(text.as_ptr(), ptr::null_mut()),
            WsStatus::NullArgument
        );
        assert_eq!(ws_run(ptr::null(), ptr::null_mut()), WsStatus::NullArgument);
        assert_eq!(ws_report_mass_estimate(ptr::null(), ptr::null_mut()), WsStatus::NullArgument);
        assert_eq!(ws_scenario_set_seed(ptr::null_mut(), 1), WsStatus::NullArgument);
        ws_scenario_free(ptr::null_mut());
        ws_report_free(ptr::null_mut());
        ws_string_free(ptr::null_mut());
    }
}

#[test]
fn aborting_scenario_maps_to_task_aborted() {
    unsafe {
        let text = String::from_utf8(reference_toml().into_bytes()).unwrap();
        let stuck = CString::new(text.replace("seed = 7", "seed = 7\nwaypoint_timeout_s = 0.1"))
            .unwrap();
        let mut scenario: *mut WsScenario = ptr::null_mut();
        assert_eq!(ws_scenario_from_toml(stuck.as_ptr(), &mut scenario), WsStatus::Ok);
        let mut report: *mut WsReport = ptr::null_mut();
        assert_eq!(ws_run(scenario, &mut report), WsStatus::TaskAborted);
        assert!(report.is_null());
        assert!(last_error().contains("not reached"));
        ws_scenario_free(scenario);
    }
}

#[test]
fn generated_header_covers_the_surface() {
    let header_path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/wrenchsim.h");
    let header = std::fs::read_to_string(header_path).expect("header generated at build time");
    for symbol in [
        "ws_scenario_from_toml",
        "ws_scenario_load",
        "ws_scenario_set_seed",
        "ws_scenario_set_dt",
        "ws_scenario_free",
        "ws_run",
        "ws_report_mass_estimate",
        "ws_report_offset_estimate",
        "ws_report_execution_error",
        "ws_report_stable",
        "ws_report_metrics_json",
        "ws_report_free",
        "ws_string_free",
        "ws_last_error_message",
        "WS_STATUS_TASK_ABORTED",
        "typedef struct WsScenario WsScenario;",
        "typedef struct WsReport WsReport;",
    ] {
        assert!(header.contains(symbol), "header missing {symbol}");
    }
}
