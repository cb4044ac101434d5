//! Command-line front end: scenario documents, metric reports in mm, and the
//! run / sweep / stack / plotdata entry points.
//!
//! Exit codes are fixed: 0 success, 1 usage or configuration error, 2 task
//! abort (including numerical divergence). Distances are meters inside the
//! library and millimeters in every human-facing artifact.

use crate::control::{Waypoint, WaypointAction, DEFAULT_SETTLE_VELOCITY};
use crate::numerics::{Mat3, Vec3};
use crate::plant::{GravityModel, PayloadTruth};
use crate::sensing::SensorConfig;
use crate::sim::{run_simulation, AngularPerturbation, Scenario, SimError, TrajectoryLog};
use crate::task::{
    evaluate_equilibrium, replay_placement, CorrectionPolicy, TaskPlan, TaskReport,
    DEFAULT_SUPPORT_HALF_WIDTH, DEFAULT_WAYPOINT_TIMEOUT,
};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// Caps sweep parallelism; 0 or unset picks the rayon default.
pub const THREADS_ENV: &str = "WRENCHSIM_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Usage or configuration problem; exit code 1.
    #[error("{0}")]
    Config(String),
    /// The task itself failed; exit code 2.
    #[error("{0}")]
    Abort(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Abort(_) => 2,
        }
    }
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidScenario(_) => CliError::Config(e.to_string()),
        SimError::TaskAborted(_) | SimError::NumericalDivergence { .. } => {
            CliError::Abort(e.to_string())
        }
    }
}

fn io_error(what: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("{what} {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// Scenario documents

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn mat3(rows: [[f64; 3]; 3]) -> Mat3 {
    Mat3::new([
        rows[0][0], rows[0][1], rows[0][2], //
        rows[1][0], rows[1][1], rows[1][2], //
        rows[2][0], rows[2][1], rows[2][2],
    ])
}

fn default_gravity() -> f64 {
    -9.81
}
fn default_dt() -> f64 {
    crate::sim::DEFAULT_DT
}
fn default_settle() -> f64 {
    DEFAULT_SETTLE_VELOCITY
}
fn default_timeout() -> f64 {
    DEFAULT_WAYPOINT_TIMEOUT
}
fn default_scale() -> f64 {
    1.0
}
fn default_layers() -> usize {
    1
}
fn default_half_width() -> f64 {
    DEFAULT_SUPPORT_HALF_WIDTH
}
fn default_correction() -> CorrectionPolicy {
    CorrectionPolicy::Required
}
fn default_gain_m() -> [f64; 3] {
    [10.0, 10.0, 10.0]
}
fn default_gain_b() -> [f64; 3] {
    [80.0, 80.0, 80.0]
}
fn default_gain_k() -> [f64; 3] {
    [200.0, 200.0, 200.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadFile {
    pub mass_kg: f64,
    pub com_offset_m: [f64; 3],
    /// Full 3x3 inertia tensor about the CoM, row major.
    pub inertia_kgm2: [[f64; 3]; 3],
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorFile {
    #[serde(rename = "sigma_f_N")]
    pub sigma_f_n: f64,
    #[serde(rename = "sigma_tau_Nm")]
    pub sigma_tau_nm: f64,
    #[serde(rename = "bias_f_N")]
    pub bias_f_n: [f64; 3],
    #[serde(rename = "bias_tau_Nm")]
    pub bias_tau_nm: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsFile {
    /// Virtual mass diagonal, kg.
    #[serde(rename = "M", default = "default_gain_m")]
    pub m: [f64; 3],
    /// Virtual damping diagonal, N·s/m.
    #[serde(rename = "B", default = "default_gain_b")]
    pub b: [f64; 3],
    /// Virtual stiffness diagonal, N/m.
    #[serde(rename = "K", default = "default_gain_k")]
    pub k: [f64; 3],
}

impl Default for GainsFile {
    fn default() -> Self {
        GainsFile {
            m: default_gain_m(),
            b: default_gain_b(),
            k: default_gain_k(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointFile {
    pub position_m: [f64; 3],
    pub tolerance_m: f64,
    #[serde(default)]
    pub dwell_s: f64,
    #[serde(default = "default_action")]
    pub action: WaypointAction,
}

fn default_action() -> WaypointAction {
    WaypointAction::None
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub waypoints: Vec<WaypointFile>,
    pub place_nominal_m: [f64; 3],
    pub layer_height_m: f64,
    /// Stack depth used by the stack command.
    #[serde(default = "default_layers")]
    pub layers: usize,
    pub support_x_m: f64,
    #[serde(default = "default_half_width")]
    pub support_half_width_m: f64,
    #[serde(default = "default_correction")]
    pub correction: CorrectionPolicy,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationFile {
    /// Peak angular acceleration, rad/s².
    pub amp: f64,
    /// Excitation frequency, Hz.
    pub freq: f64,
}

/// Per-layer payload override for stacking runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackObjectFile {
    pub com_offset_m: [f64; 3],
    pub mass_kg: Option<f64>,
}

/// Declarative scenario document; unknown keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub payload: PayloadFile,
    #[serde(default = "default_gravity")]
    pub gravity_mps2: f64,
    #[serde(default)]
    pub sensor: SensorFile,
    #[serde(default)]
    pub gains: GainsFile,
    pub plan: PlanFile,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default)]
    pub tracking_lag_s: f64,
    #[serde(default)]
    pub angular_perturbation: Option<PerturbationFile>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_settle")]
    pub settle_velocity_mps: f64,
    #[serde(default = "default_timeout")]
    pub waypoint_timeout_s: f64,
    #[serde(default)]
    pub assume_known_mass: bool,
    #[serde(default = "default_scale")]
    pub mass_estimate_scale: f64,
    /// Per-layer payloads for the stack command, ground layer first.
    #[serde(default)]
    pub stack_objects: Option<Vec<StackObjectFile>>,
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        if !(self.payload.mass_kg > 0.0 && self.payload.mass_kg.is_finite()) {
            return Err(CliError::Config(
                "invalid scenario: payload.mass_kg must be positive".into(),
            ));
        }
        if self.plan.layers < 1 {
            return Err(CliError::Config(
                "invalid scenario: plan.layers must be at least 1".into(),
            ));
        }
        let scenario = Scenario {
            payload: PayloadTruth {
                mass: self.payload.mass_kg,
                com_offset: vec3(self.payload.com_offset_m),
                inertia: mat3(self.payload.inertia_kgm2),
            },
            gravity: GravityModel::new(self.gravity_mps2),
            // sensor.seed is assigned from the scenario seed at run time.
            sensor: SensorConfig {
                sigma_f: self.sensor.sigma_f_n,
                sigma_tau: self.sensor.sigma_tau_nm,
                bias_f: vec3(self.sensor.bias_f_n),
                bias_tau: vec3(self.sensor.bias_tau_nm),
                seed: 0,
            },
            gains: crate::control::AdmittanceGains {
                m_a: Mat3::diag(self.gains.m[0], self.gains.m[1], self.gains.m[2]),
                b_a: Mat3::diag(self.gains.b[0], self.gains.b[1], self.gains.b[2]),
                k_a: Mat3::diag(self.gains.k[0], self.gains.k[1], self.gains.k[2]),
            },
            plan: TaskPlan {
                waypoints: self
                    .plan
                    .waypoints
                    .iter()
                    .map(|w| Waypoint {
                        position: vec3(w.position_m),
                        tolerance: w.tolerance_m,
                        dwell: w.dwell_s,
                        action: w.action,
                    })
                    .collect(),
                place_nominal: vec3(self.plan.place_nominal_m),
                layer_height: self.plan.layer_height_m,
                layer_index: 0,
                support_x: self.plan.support_x_m,
                support_half_width: self.plan.support_half_width_m,
                correction: self.plan.correction,
            },
            dt: self.dt_s,
            tracking_lag: self.tracking_lag_s,
            angular_perturbation: self.angular_perturbation.map(|p| AngularPerturbation {
                amplitude: p.amp,
                frequency: p.freq,
            }),
            seed: self.seed,
            settle_velocity: self.settle_velocity_mps,
            waypoint_timeout: self.waypoint_timeout_s,
            assume_known_mass: self.assume_known_mass,
            mass_estimate_scale: self.mass_estimate_scale,
        };
        scenario
            .validate()
            .map_err(|m| CliError::Config(format!("invalid scenario: {m}")))?;
        Ok(scenario)
    }
}

/// Placement-arithmetic replay document: recorded trial geometry in mm,
/// horizontal plane only.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFile {
    pub target_mm: [f64; 2],
    pub ideal_correction_mm: [f64; 2],
    pub estimated_correction_mm: [f64; 2],
    pub actual_tcp_mm: [f64; 2],
    #[serde(default)]
    pub layer_index: usize,
    #[serde(default = "default_layer_height")]
    pub layer_height_m: f64,
    /// Defaults to the target abscissa.
    #[serde(default)]
    pub support_x_mm: Option<f64>,
    #[serde(default = "default_half_width_mm")]
    pub support_half_width_mm: f64,
}

fn default_layer_height() -> f64 {
    0.04
}
fn default_half_width_mm() -> f64 {
    DEFAULT_SUPPORT_HALF_WIDTH * 1000.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReplayDoc {
    replay: ReplayFile,
}

/// Either a full scenario or a placement replay.
#[derive(Clone, Debug)]
pub enum Document {
    Scenario(Box<ScenarioFile>),
    Replay(ReplayFile),
}

pub fn parse_document(text: &str) -> Result<Document, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("scenario parse error: {e}")))?;
    if table.contains_key("replay") {
        let doc: ReplayDoc = toml::from_str(text)
            .map_err(|e| CliError::Config(format!("scenario parse error: {e}")))?;
        Ok(Document::Replay(doc.replay))
    } else {
        let file: ScenarioFile = toml::from_str(text)
            .map_err(|e| CliError::Config(format!("scenario parse error: {e}")))?;
        Ok(Document::Scenario(Box::new(file)))
    }
}

pub fn load_document(path: &Path) -> Result<Document, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error("cannot read", path, e))?;
    parse_document(&text)
}

// ---------------------------------------------------------------------------
// Reports

/// One stacked object in the per-object table; all values mm.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ObjectRow {
    pub layer: usize,
    pub actual_com_x_mm: f64,
    pub estimated_com_x_mm: f64,
    /// Achieved CoM x relative to the commanded TCP, i.e. truth plus
    /// execution slip.
    pub implemented_com_x_mm: f64,
    pub margin_mm: f64,
    pub stable: bool,
}

/// Placement geometry in mm, mirroring the internal meters exactly (×1000).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlacementMm {
    pub target_mm: [f64; 3],
    pub ideal_correction_mm: [f64; 3],
    pub ideal_corrected_tcp_mm: [f64; 3],
    pub estimated_correction_mm: [f64; 3],
    pub commanded_tcp_mm: [f64; 3],
    pub actual_tcp_mm: [f64; 3],
    pub object_com_final_x_mm: f64,
}

/// Serialized run metrics; every distance in mm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub offset_rmse_x_mm: Option<f64>,
    pub tcp_rmse_x_mm: Option<f64>,
    pub correction_command_error_mm: f64,
    pub release_error_vs_ideal_mm: f64,
    pub execution_error_mm: f64,
    pub mass_estimate_kg: Option<f64>,
    pub stable_layers: usize,
    pub objects: Vec<ObjectRow>,
    pub placement: PlacementMm,
}

fn mm(v: f64) -> f64 {
    v * 1000.0
}

fn mm3(v: Vec3) -> [f64; 3] {
    [mm(v.x), mm(v.y), mm(v.z)]
}

fn placement_mm(p: &crate::task::PlacementResult) -> PlacementMm {
    PlacementMm {
        target_mm: mm3(p.target),
        ideal_correction_mm: mm3(p.ideal_correction),
        ideal_corrected_tcp_mm: mm3(p.ideal_corrected_tcp),
        estimated_correction_mm: mm3(p.estimated_correction),
        commanded_tcp_mm: mm3(p.commanded_tcp),
        actual_tcp_mm: mm3(p.actual_tcp),
        object_com_final_x_mm: mm(p.object_com_final_x),
    }
}

/// Build the per-object row for one completed cycle.
fn object_row(report: &TaskReport, actual_com_x: f64, layer: usize) -> ObjectRow {
    let p = &report.placement;
    ObjectRow {
        layer,
        actual_com_x_mm: mm(actual_com_x),
        estimated_com_x_mm: mm(report.offset_estimate.r_hat_filtered.x),
        implemented_com_x_mm: mm(p.object_com_final_x - p.commanded_tcp.x),
        margin_mm: mm(report.stability_margin),
        stable: report.stable,
    }
}

/// Convert one run's report to the mm metrics document.
pub fn metrics_from_report(report: &TaskReport, actual_com_x: f64, layer: usize) -> MetricsReport {
    let p = &report.placement;
    MetricsReport {
        offset_rmse_x_mm: report.offset_rmse_x.map(mm),
        tcp_rmse_x_mm: report.tcp_rmse_x.map(mm),
        correction_command_error_mm: mm(p.correction_command_error),
        release_error_vs_ideal_mm: mm(p.release_error_vs_ideal),
        execution_error_mm: mm(p.execution_error),
        mass_estimate_kg: Some(report.mass_estimate.m_hat),
        stable_layers: report.stable as usize,
        objects: vec![object_row(report, actual_com_x, layer)],
        placement: placement_mm(p),
    }
}

/// Pure placement arithmetic on recorded mm geometry.
pub fn replay_to_metrics(replay: &ReplayFile) -> MetricsReport {
    let to_m = |a: [f64; 2]| Vec3::new(a[0] / 1000.0, a[1] / 1000.0, 0.0);
    let res = replay_placement(
        to_m(replay.target_mm),
        to_m(replay.ideal_correction_mm),
        to_m(replay.estimated_correction_mm),
        to_m(replay.actual_tcp_mm),
        replay.layer_index,
        replay.layer_height_m,
    );
    let support_x = replay.support_x_mm.unwrap_or(replay.target_mm[0]) / 1000.0;
    let half_width = replay.support_half_width_mm / 1000.0;
    let (stable, margin) = evaluate_equilibrium(res.object_com_final_x, support_x, half_width);
    MetricsReport {
        offset_rmse_x_mm: None,
        tcp_rmse_x_mm: None,
        correction_command_error_mm: mm(res.correction_command_error),
        release_error_vs_ideal_mm: mm(res.release_error_vs_ideal),
        execution_error_mm: mm(res.execution_error),
        mass_estimate_kg: None,
        stable_layers: stable as usize,
        objects: vec![ObjectRow {
            layer: replay.layer_index,
            actual_com_x_mm: -replay.ideal_correction_mm[0],
            estimated_com_x_mm: -replay.estimated_correction_mm[0],
            implemented_com_x_mm: mm(res.object_com_final_x - res.commanded_tcp.x),
            margin_mm: mm(margin),
            stable,
        }],
        placement: placement_mm(&res),
    }
}

pub fn summary_text(metrics: &MetricsReport) -> String {
    let mut s = String::new();
    let p = &metrics.placement;
    if let Some(m) = metrics.mass_estimate_kg {
        let _ = writeln!(s, "mass estimate: {m:.9} kg");
    }
    for row in &metrics.objects {
        let _ = writeln!(
            s,
            "object {}: actual {:.4} mm, estimated {:.4} mm, implemented {:.4} mm, margin {:.4} mm, {}",
            row.layer,
            row.actual_com_x_mm,
            row.estimated_com_x_mm,
            row.implemented_com_x_mm,
            row.margin_mm,
            if row.stable { "stable" } else { "UNSTABLE" },
        );
    }
    let _ = writeln!(
        s,
        "commanded tcp: ({:.4}, {:.4}) mm, actual tcp: ({:.4}, {:.4}) mm",
        p.commanded_tcp_mm[0], p.commanded_tcp_mm[1], p.actual_tcp_mm[0], p.actual_tcp_mm[1],
    );
    let _ = writeln!(
        s,
        "correction-command error: {:.4} mm, release error vs ideal: {:.4} mm, execution error: {:.4} mm",
        metrics.correction_command_error_mm,
        metrics.release_error_vs_ideal_mm,
        metrics.execution_error_mm,
    );
    if let (Some(o), Some(t)) = (metrics.offset_rmse_x_mm, metrics.tcp_rmse_x_mm) {
        let _ = writeln!(s, "offset rmse x: {o:.4} mm, tcp rmse x: {t:.4} mm");
    }
    let _ = writeln!(s, "stable layers: {}", metrics.stable_layers);
    s
}

// ---------------------------------------------------------------------------
// Sweep

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    SigmaTau,
    SigmaF,
    TrackingLag,
    PerturbationAmp,
}

pub const SWEEP_PARAMS: [(&str, SweepParam); 4] = [
    ("sensor.sigma_tau", SweepParam::SigmaTau),
    ("sensor.sigma_f", SweepParam::SigmaF),
    ("tracking_lag", SweepParam::TrackingLag),
    ("angular_perturbation.amp", SweepParam::PerturbationAmp),
];

impl SweepParam {
    pub fn parse(name: &str) -> Result<SweepParam, CliError> {
        SWEEP_PARAMS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, p)| *p)
            .ok_or_else(|| {
                let names: Vec<&str> = SWEEP_PARAMS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!(
                    "unknown sweep parameter {name:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }

    pub fn apply(self, scenario: &mut Scenario, value: f64) {
        match self {
            SweepParam::SigmaTau => scenario.sensor.sigma_tau = value,
            SweepParam::SigmaF => scenario.sensor.sigma_f = value,
            SweepParam::TrackingLag => scenario.tracking_lag = value,
            SweepParam::PerturbationAmp => match scenario.angular_perturbation.as_mut() {
                Some(p) => p.amplitude = value,
                None => {
                    scenario.angular_perturbation = Some(AngularPerturbation {
                        amplitude: value,
                        frequency: 0.5,
                    })
                }
            },
        }
    }
}

/// Aggregated result of the trials at one sweep value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub trials: usize,
    pub offset_rmse_x_mm_mean: f64,
    pub offset_rmse_x_mm_std: f64,
    pub com_error_mm_mean: f64,
    pub com_error_mm_std: f64,
    pub stable_count: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Run `trials` seeded runs per value, trial seeds paired across values.
pub fn sweep_rows(
    base: &Scenario,
    param: SweepParam,
    values: &[f64],
    trials: usize,
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep values list is empty".into()));
    }
    if trials == 0 {
        return Err(CliError::Config("sweep trials must be at least 1".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|v| (0..trials).map(move |t| (v, t)))
        .collect();
    let threads = match std::env::var(THREADS_ENV) {
        Err(_) => 0usize,
        Ok(s) => s.trim().parse().map_err(|_| {
            CliError::Config(format!("{THREADS_ENV} must be a nonnegative integer, got {s:?}"))
        })?,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;

    use rayon::prelude::*;
    let results: Vec<Result<(f64, f64, bool), CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(vi, trial)| {
                let mut scenario = base.clone();
                param.apply(&mut scenario, values[vi]);
                scenario.seed = base.seed.wrapping_add(trial as u64);
                let (report, _) = run_simulation(&scenario).map_err(|e| {
                    let base_err = sim_error(e);
                    let msg = format!(
                        "sweep value {} trial {trial}: {base_err}",
                        values[vi]
                    );
                    match base_err {
                        CliError::Config(_) => CliError::Config(msg),
                        CliError::Abort(_) => CliError::Abort(msg),
                    }
                })?;
                let rmse = report.offset_rmse_x.unwrap_or(0.0);
                let com_err =
                    (report.placement.object_com_final_x - scenario.plan.support_x).abs();
                Ok((mm(rmse), mm(com_err), report.stable))
            })
            .collect()
    });

    let mut rows = Vec::with_capacity(values.len());
    for (vi, &value) in values.iter().enumerate() {
        let mut rmses = Vec::with_capacity(trials);
        let mut com_errs = Vec::with_capacity(trials);
        let mut stable_count = 0usize;
        for t in 0..trials {
            match &results[vi * trials + t] {
                Ok((rmse, com, stable)) => {
                    rmses.push(*rmse);
                    com_errs.push(*com);
                    stable_count += *stable as usize;
                }
                Err(e) => {
                    return Err(match e {
                        CliError::Config(m) => CliError::Config(m.clone()),
                        CliError::Abort(m) => CliError::Abort(m.clone()),
                    })
                }
            }
        }
        let (rm, rs) = mean_std(&rmses);
        let (cm, cs) = mean_std(&com_errs);
        rows.push(SweepRow {
            value,
            trials,
            offset_rmse_x_mm_mean: rm,
            offset_rmse_x_mm_std: rs,
            com_error_mm_mean: cm,
            com_error_mm_std: cs,
            stable_count,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(parameter: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "parameter,value,trials,offset_rmse_x_mm_mean,offset_rmse_x_mm_std,\
         com_error_mm_mean,com_error_mm_std,stable_count\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{parameter},{:.8e},{},{:.8e},{:.8e},{:.8e},{:.8e},{}",
            r.value,
            r.trials,
            r.offset_rmse_x_mm_mean,
            r.offset_rmse_x_mm_std,
            r.com_error_mm_mean,
            r.com_error_mm_std,
            r.stable_count,
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Stack

/// Outcome of running `layers` sequential cycles; on an abort the rows
/// collected so far are kept alongside the failing layer's error.
pub struct StackOutcome {
    pub rows: Vec<ObjectRow>,
    pub reports: Vec<TaskReport>,
    pub failure: Option<(usize, CliError)>,
}

pub fn run_stack(
    file: &ScenarioFile,
    base: &Scenario,
    layers: usize,
) -> Result<StackOutcome, CliError> {
    if layers < 1 {
        return Err(CliError::Config("layers must be at least 1".into()));
    }
    if let Some(objects) = &file.stack_objects {
        if objects.len() < layers {
            return Err(CliError::Config(format!(
                "stack_objects lists {} entries but {layers} layers were requested",
                objects.len()
            )));
        }
    }
    let mut rows = Vec::with_capacity(layers);
    let mut reports = Vec::with_capacity(layers);
    for layer in 0..layers {
        let mut scenario = base.clone();
        scenario.plan.layer_index = layer;
        if let Some(objects) = &file.stack_objects {
            let obj = &objects[layer];
            scenario.payload.com_offset = vec3(obj.com_offset_m);
            if let Some(mass) = obj.mass_kg {
                scenario.payload.mass = mass;
            }
        }
        match run_simulation(&scenario) {
            Ok((report, _)) => {
                rows.push(object_row(&report, scenario.payload.com_offset.x, layer));
                reports.push(report);
            }
            Err(e) => {
                return Ok(StackOutcome {
                    rows,
                    reports,
                    failure: Some((layer, sim_error(e))),
                });
            }
        }
    }
    Ok(StackOutcome {
        rows,
        reports,
        failure: None,
    })
}

pub fn stack_csv(rows: &[ObjectRow]) -> String {
    let mut out = String::from(
        "layer,actual_com_x_mm,estimated_com_x_mm,implemented_com_x_mm,margin_mm,stable\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.8e},{:.8e},{:.8e},{:.8e},{}",
            r.layer,
            r.actual_com_x_mm,
            r.estimated_com_x_mm,
            r.implemented_com_x_mm,
            r.margin_mm,
            r.stable,
        );
    }
    out
}

// ---------------------------------------------------------------------------
// Plotdata

/// Extract narrow-format (time, signal, value) rows from a trajectory CSV.
///
/// Values are copied verbatim, so formatting stays bit-stable; rows whose
/// requested cell is empty are skipped.
pub fn plotdata_extract(csv: &str, signals: &[String]) -> Result<String, CliError> {
    let mut lines = csv.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("trajectory log is empty".into()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"time_s") {
        return Err(CliError::Config(
            "trajectory log does not start with a time_s column".into(),
        ));
    }
    let mut indices = Vec::with_capacity(signals.len());
    for sig in signals {
        match columns.iter().position(|c| c == sig) {
            Some(0) | None => {
                return Err(CliError::Config(format!(
                    "unknown signal {sig:?}; available columns: {}",
                    columns[1..].join(", ")
                )));
            }
            Some(idx) => indices.push(idx),
        }
    }
    let mut out = String::from("time_s,signal,value\n");
    let mut data_rows = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != columns.len() {
            return Err(CliError::Config(format!(
                "trajectory log row {} has {} fields, expected {}",
                lineno + 2,
                cells.len(),
                columns.len()
            )));
        }
        data_rows += 1;
        for (sig, &idx) in signals.iter().zip(&indices) {
            if !cells[idx].is_empty() {
                let _ = writeln!(out, "{},{},{}", cells[0], sig, cells[idx]);
            }
        }
    }
    if data_rows == 0 {
        return Err(CliError::Config("trajectory log has no data rows".into()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Command-line surface

#[derive(Debug, Parser)]
#[command(
    name = "wrenchsim",
    version,
    about = "Deterministic pick-and-place simulator with payload wrench estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Replace the scenario's RNG seed.
    #[arg(long, global = true)]
    pub seed_override: Option<u64>,
    /// Replace the scenario's timestep, s.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Suppress the stdout summary.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario; writes trajectory.csv, report.json, summary.txt.
    Run { scenario: PathBuf },
    /// Run seeded trials over a list of parameter values; writes sweep.csv.
    Sweep {
        scenario: PathBuf,
        /// One of: sensor.sigma_tau, sensor.sigma_f, tracking_lag,
        /// angular_perturbation.amp.
        #[arg(long)]
        parameter: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Run one cycle per layer; writes stack.csv and report.json.
    Stack {
        scenario: PathBuf,
        /// Overrides the plan's layer count.
        #[arg(long)]
        layers: Option<usize>,
    },
    /// Re-emit logged signals as narrow (time, signal, value) rows.
    Plotdata {
        trajectory: PathBuf,
        /// Comma-separated column names from trajectory.csv.
        #[arg(long, value_delimiter = ',', required = true)]
        signals: Vec<String>,
    },
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error("cannot create", dir, e))?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| io_error("cannot write", &path, e))?;
    Ok(path)
}

fn report_json(metrics: &MetricsReport) -> Result<String, CliError> {
    serde_json::to_string_pretty(metrics)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))
}

fn apply_overrides(scenario: &mut Scenario, cli: &Cli) {
    if let Some(seed) = cli.seed_override {
        scenario.seed = seed;
    }
    if let Some(dt) = cli.dt {
        scenario.dt = dt;
    }
}

fn emit(quiet: bool, text: &str) {
    if !quiet {
        print!("{text}");
        let _ = std::io::stdout().flush();
    }
}

fn cmd_run(cli: &Cli, scenario_path: &Path) -> Result<(), CliError> {
    match load_document(scenario_path)? {
        Document::Replay(replay) => {
            let metrics = replay_to_metrics(&replay);
            write_file(&cli.out, "report.json", &report_json(&metrics)?)?;
            let summary = summary_text(&metrics);
            write_file(&cli.out, "summary.txt", &summary)?;
            emit(cli.quiet, &summary);
            Ok(())
        }
        Document::Scenario(file) => {
            let mut scenario = file.to_scenario()?;
            apply_overrides(&mut scenario, cli);
            let (report, log) = run_simulation(&scenario).map_err(sim_error)?;
            let metrics = metrics_from_report(&report, scenario.payload.com_offset.x, 0);
            write_trajectory(&cli.out, &log)?;
            write_file(&cli.out, "report.json", &report_json(&metrics)?)?;
            let summary = summary_text(&metrics);
            write_file(&cli.out, "summary.txt", &summary)?;
            emit(cli.quiet, &summary);
            Ok(())
        }
    }
}

fn write_trajectory(dir: &Path, log: &TrajectoryLog) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error("cannot create", dir, e))?;
    let path = dir.join("trajectory.csv");
    let file = fs::File::create(&path).map_err(|e| io_error("cannot write", &path, e))?;
    let mut out = std::io::BufWriter::new(file);
    log.write_csv(&mut out)
        .and_then(|()| out.flush())
        .map_err(|e| io_error("cannot write", &path, e))
}

fn cmd_sweep(
    cli: &Cli,
    scenario_path: &Path,
    parameter: &str,
    values: &[f64],
    trials: usize,
) -> Result<(), CliError> {
    let param = SweepParam::parse(parameter)?;
    let file = match load_document(scenario_path)? {
        Document::Scenario(file) => file,
        Document::Replay(_) => {
            return Err(CliError::Config(
                "sweep needs a full scenario, not a replay document".into(),
            ));
        }
    };
    let mut base = file.to_scenario()?;
    apply_overrides(&mut base, cli);
    let rows = sweep_rows(&base, param, values, trials)?;
    let csv = sweep_csv(parameter, &rows);
    write_file(&cli.out, "sweep.csv", &csv)?;
    emit(cli.quiet, &csv);
    Ok(())
}

fn cmd_stack(cli: &Cli, scenario_path: &Path, layers: Option<usize>) -> Result<(), CliError> {
    let file = match load_document(scenario_path)? {
        Document::Scenario(file) => file,
        Document::Replay(_) => {
            return Err(CliError::Config(
                "stack needs a full scenario, not a replay document".into(),
            ));
        }
    };
    let mut base = file.to_scenario()?;
    apply_overrides(&mut base, cli);
    let layers = layers.unwrap_or(file.plan.layers);
    let outcome = run_stack(&file, &base, layers)?;
    let csv = stack_csv(&outcome.rows);
    write_file(&cli.out, "stack.csv", &csv)?;
    emit(cli.quiet, &csv);
    if let Some(last) = outcome.reports.last() {
        let mut metrics = metrics_from_report(
            last,
            outcome.rows.last().map(|r| r.actual_com_x_mm / 1000.0).unwrap_or(0.0),
            outcome.rows.len() - 1,
        );
        metrics.objects = outcome.rows.clone();
        metrics.stable_layers = outcome.rows.iter().filter(|r| r.stable).count();
        write_file(&cli.out, "report.json", &report_json(&metrics)?)?;
    }
    match outcome.failure {
        Some((layer, e)) => {
            let msg = format!("layer {layer}: {e}");
            Err(match e {
                CliError::Config(_) => CliError::Config(msg),
                CliError::Abort(_) => CliError::Abort(msg),
            })
        }
        None => Ok(()),
    }
}

fn cmd_plotdata(cli: &Cli, trajectory: &Path, signals: &[String]) -> Result<(), CliError> {
    let csv =
        fs::read_to_string(trajectory).map_err(|e| io_error("cannot read", trajectory, e))?;
    let narrow = plotdata_extract(&csv, signals)?;
    write_file(&cli.out, "plotdata.csv", &narrow)?;
    emit(cli.quiet, &narrow);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { scenario } => cmd_run(cli, scenario),
        Command::Sweep {
            scenario,
            parameter,
            values,
            trials,
        } => cmd_sweep(cli, scenario, parameter, values, *trials),
        Command::Stack { scenario, layers } => cmd_stack(cli, scenario, *layers),
        Command::Plotdata { trajectory, signals } => cmd_plotdata(cli, trajectory, signals),
    }
}

/// Parse arguments and execute; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if informational { 0 } else { 1 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_scenario_toml() -> String {
        r#"
seed = 7

[payload]
mass_kg = 1.0
com_offset_m = [0.085, 0.0, 0.0]
inertia_kgm2 = [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.01]]

[plan]
place_nominal_m = [-0.30, 0.30, 0.12]
layer_height_m = 0.04
support_x_m = -0.30

[[plan.waypoints]]
position_m = [0.0, 0.3, 0.4]
tolerance_m = 0.002
dwell_s = 0.2

[[plan.waypoints]]
position_m = [0.3, 0.3, 0.25]
tolerance_m = 0.002
dwell_s = 0.2

[[plan.waypoints]]
position_m = [0.3, 0.3, 0.10]
tolerance_m = 0.002
dwell_s = 0.3
action = "grasp"

[[plan.waypoints]]
position_m = [0.3, 0.3, 0.10]
tolerance_m = 0.080
dwell_s = 0.2
action = "begin_mass_window"

[[plan.waypoints]]
position_m = [0.3, 0.3, 0.10]
tolerance_m = 0.080
dwell_s = 1.2
action = "begin_com_window"

[[plan.waypoints]]
position_m = [0.3, 0.3, 0.32]
tolerance_m = 0.002
dwell_s = 0.3

[[plan.waypoints]]
position_m = [0.05, 0.3, 0.35]
tolerance_m = 0.002
dwell_s = 0.3

[[plan.waypoints]]
position_m = [-0.10, 0.3, 0.35]
tolerance_m = 0.002
dwell_s = 0.2
action = "end_com_window"

[[plan.waypoints]]
position_m = [-0.30, 0.3, 0.12]
tolerance_m = 0.002
dwell_s = 5.0
action = "release"
"#
        .to_string()
    }

    #[test]
    fn minimal_toml_matches_reference_scenario() {
        let doc = parse_document(&minimal_scenario_toml()).unwrap();
        let scenario = match doc {
            Document::Scenario(file) => file.to_scenario().unwrap(),
            Document::Replay(_) => panic!("expected scenario"),
        };
        let reference = Scenario::reference();
        assert_eq!(format!("{scenario:?}"), format!("{reference:?}"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = minimal_scenario_toml() + "\nbogus_key = 1\n";
        match parse_document(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("bogus_key"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn negative_mass_names_the_field() {
        let text = minimal_scenario_toml().replace("mass_kg = 1.0", "mass_kg = -1.0");
        let doc = parse_document(&text).unwrap();
        let file = match doc {
            Document::Scenario(file) => file,
            Document::Replay(_) => unreachable!(),
        };
        match file.to_scenario() {
            Err(CliError::Config(msg)) => assert!(msg.contains("payload.mass_kg"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn replay_document_reproduces_recorded_trial() {
        let text = r#"
[replay]
target_mm = [-300.0, 300.0]
ideal_correction_mm = [85.0, 0.0]
estimated_correction_mm = [82.84, -1.66]
actual_tcp_mm = [-218.12, 298.69]
"#;
        let replay = match parse_document(text).unwrap() {
            Document::Replay(r) => r,
            Document::Scenario(_) => panic!("expected replay"),
        };
        let metrics = replay_to_metrics(&replay);
        let p = &metrics.placement;
        assert!((p.commanded_tcp_mm[0] - -217.16).abs() < 1e-9);
        assert!((p.commanded_tcp_mm[1] - 298.34).abs() < 1e-9);
        assert!((metrics.correction_command_error_mm - 2.73).abs() <= 0.02);
        assert!((metrics.release_error_vs_ideal_mm - 3.38).abs() <= 0.02);
        assert!((metrics.execution_error_mm - 1.03).abs() <= 0.02);
        assert_eq!(metrics.objects[0].actual_com_x_mm, -85.0);
    }

    #[test]
    fn metrics_mm_equal_meters_times_thousand_exactly() {
        let scenario = Scenario::reference();
        let (report, _) = run_simulation(&scenario).unwrap();
        let metrics = metrics_from_report(&report, scenario.payload.com_offset.x, 0);
        assert_eq!(
            metrics.execution_error_mm.to_bits(),
            (report.placement.execution_error * 1000.0).to_bits()
        );
        assert_eq!(
            metrics.placement.commanded_tcp_mm[0].to_bits(),
            (report.placement.commanded_tcp.x * 1000.0).to_bits()
        );
        assert_eq!(
            metrics.offset_rmse_x_mm.unwrap().to_bits(),
            (report.offset_rmse_x.unwrap() * 1000.0).to_bits()
        );
    }

    #[test]
    fn sweep_parameter_names_are_closed_set() {
        assert!(SweepParam::parse("sensor.sigma_tau").is_ok());
        assert!(SweepParam::parse("sensor.sigma_f").is_ok());
        assert!(SweepParam::parse("tracking_lag").is_ok());
        assert!(SweepParam::parse("angular_perturbation.amp").is_ok());
        match SweepParam::parse("gains.K") {
            Err(CliError::Config(msg)) => assert!(msg.contains("sensor.sigma_tau")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn sweep_rejects_empty_values() {
        let base = Scenario::reference();
        assert!(sweep_rows(&base, SweepParam::SigmaTau, &[], 1).is_err());
    }

    #[test]
    fn plotdata_extracts_requested_columns() {
        let csv = "time_s,phase,a,b\n0.0e0,approach,1.5e0,\n2.0e-3,approach,2.5e0,9.0e0\n";
        let narrow =
            plotdata_extract(csv, &["b".to_string(), "a".to_string()]).unwrap();
        let lines: Vec<&str> = narrow.lines().collect();
        assert_eq!(lines[0], "time_s,signal,value");
        assert_eq!(lines[1], "0.0e0,a,1.5e0");
        assert_eq!(lines[2], "2.0e-3,b,9.0e0");
        assert_eq!(lines[3], "2.0e-3,a,2.5e0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn plotdata_rejects_unknown_signal_listing_columns() {
        let csv = "time_s,phase,a\n0.0e0,approach,1.0e0\n";
        match plotdata_extract(csv, &["missing".to_string()]) {
            Err(CliError::Config(msg)) => {
                assert!(msg.contains("missing"));
                assert!(msg.contains("phase, a"), "{msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn plotdata_rejects_empty_and_headerless_logs() {
        assert!(plotdata_extract("", &["a".to_string()]).is_err());
        assert!(plotdata_extract("time_s,a\n", &["a".to_string()]).is_err());
    }
}
