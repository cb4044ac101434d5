//! Fixed-step closed-loop simulation wiring plant, sensor, staged
//! estimators, admittance controller, and task sequencing, with full
//! time-series logging.

use crate::control::{
    admittance_accel, integrate_controller, waypoint_reached, AdmittanceGains, ControllerState,
    Waypoint, WaypointAction, DEFAULT_SETTLE_VELOCITY,
};
use crate::estimation::{
    accumulate_offset_sample, estimate_mass_sample, finalize_mass, offset_rmse,
    payload_force_estimate, solve_offset, Axis, MassEstimate, OffsetBuffer, OffsetEstimate,
    DEFAULT_FORCE_FLOOR, DEFAULT_GUARD_EPS, DEFAULT_MIN_MASS_SAMPLES, DEFAULT_MIN_OFFSET_SAMPLES,
    OFFSET_FILTER_ALPHA, RESOLVE_CADENCE_STEPS,
};
use crate::numerics::{Mat3, Vec3};
use crate::plant::{step_plant, synthesize_wrench, GravityModel, KinematicState, PayloadTruth};
use crate::sensing::{lowpass, ForceTorqueSensor, SensorConfig, Wrench};
use crate::task::{
    placement_errors, stacking_place, CorrectionPolicy, PlacementResult, TaskPlan, TaskReport,
    DEFAULT_SUPPORT_HALF_WIDTH, DEFAULT_WAYPOINT_TIMEOUT,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io;

/// Any controller or plant state beyond this magnitude fails the run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Default control and sensing period, s.
pub const DEFAULT_DT: f64 = 0.002;

/// Sinusoidal angular excitation about the tool y axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AngularPerturbation {
    /// Peak angular acceleration, rad/s².
    pub amplitude: f64,
    /// Excitation frequency, Hz; must be positive.
    pub frequency: f64,
}

impl AngularPerturbation {
    /// (omega, alpha) at time `t`: alpha_y = A·sin(2πft), omega_y its
    /// integral from a zero initial rate.
    pub fn angular_state(&self, t: f64) -> (Vec3, Vec3) {
        let w = 2.0 * PI * self.frequency;
        let alpha = self.amplitude * (w * t).sin();
        let omega = self.amplitude / w * (1.0 - (w * t).cos());
        (Vec3::new(0.0, omega, 0.0), Vec3::new(0.0, alpha, 0.0))
    }
}

/// Complete configuration of one simulation run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub payload: PayloadTruth,
    pub gravity: GravityModel,
    /// Noise and bias parameters; the stream seed comes from `seed`.
    pub sensor: SensorConfig,
    pub gains: AdmittanceGains,
    pub plan: TaskPlan,
    pub dt: f64,
    /// First-order velocity-tracking time constant of the plant, s.
    pub tracking_lag: f64,
    pub angular_perturbation: Option<AngularPerturbation>,
    /// Seeds the measurement-noise stream.
    pub seed: u64,
    pub settle_velocity: f64,
    pub waypoint_timeout: f64,
    /// Skip mass estimation and compensate with the true mass from the
    /// grasp instant onward.
    pub assume_known_mass: bool,
    /// Fault-injection multiplier applied to the finalized mass estimate
    /// before compensation; the reported estimate stays unscaled.
    pub mass_estimate_scale: f64,
}

impl Scenario {
    /// Canonical regression fixture: 1 kg payload offset 85 mm in x, carried
    /// through approach, grasp, a static mass window, a CoM window spanning
    /// vertical and horizontal transport legs, and a corrected stack place.
    pub fn reference() -> Scenario {
        let wp = |x: f64, y: f64, z: f64, tol: f64, dwell: f64, action: WaypointAction| Waypoint {
            position: Vec3::new(x, y, z),
            tolerance: tol,
            dwell,
            action,
        };
        // The mass window holds a generous tolerance: with compensation still
        // off, the loaded equilibrium sits K_a⁻¹·F_p ≈ 49 mm above the
        // reference and the tight 2 mm band would never be entered.
        let waypoints = vec![
            wp(0.0, 0.3, 0.4, 0.002, 0.2, WaypointAction::None),
            wp(0.3, 0.3, 0.25, 0.002, 0.2, WaypointAction::None),
            wp(0.3, 0.3, 0.10, 0.002, 0.3, WaypointAction::Grasp),
            wp(0.3, 0.3, 0.10, 0.080, 0.2, WaypointAction::BeginMassWindow),
            wp(0.3, 0.3, 0.10, 0.080, 1.2, WaypointAction::BeginComWindow),
            wp(0.3, 0.3, 0.32, 0.002, 0.3, WaypointAction::None),
            wp(0.05, 0.3, 0.35, 0.002, 0.3, WaypointAction::None),
            wp(-0.10, 0.3, 0.35, 0.002, 0.2, WaypointAction::EndComWindow),
            wp(-0.30, 0.3, 0.12, 0.002, 5.0, WaypointAction::Release),
        ];
        Scenario {
            payload: PayloadTruth {
                mass: 1.0,
                com_offset: Vec3::new(0.085, 0.0, 0.0),
                inertia: Mat3::diag(0.01, 0.01, 0.01),
            },
            gravity: GravityModel::default(),
            sensor: SensorConfig::default(),
            gains: AdmittanceGains::default(),
            plan: TaskPlan {
                waypoints,
                place_nominal: Vec3::new(-0.30, 0.30, 0.12),
                layer_height: 0.04,
                layer_index: 0,
                support_x: -0.30,
                support_half_width: DEFAULT_SUPPORT_HALF_WIDTH,
                correction: CorrectionPolicy::Required,
            },
            dt: DEFAULT_DT,
            tracking_lag: 0.0,
            angular_perturbation: None,
            seed: 7,
            settle_velocity: DEFAULT_SETTLE_VELOCITY,
            waypoint_timeout: DEFAULT_WAYPOINT_TIMEOUT,
            assume_known_mass: false,
            mass_estimate_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err("dt must be positive and finite".into());
        }
        if !(self.tracking_lag >= 0.0 && self.tracking_lag.is_finite()) {
            return Err("tracking_lag must be nonnegative and finite".into());
        }
        if !(self.payload.mass >= 0.0 && self.payload.mass.is_finite()) {
            return Err("payload.mass must be nonnegative and finite".into());
        }
        if !self.payload.com_offset.is_finite() {
            return Err("payload.com_offset must be finite".into());
        }
        if !self.payload.inertia.is_finite() || !self.payload.inertia.is_symmetric(1e-9) {
            return Err("payload.inertia must be finite and symmetric".into());
        }
        if !(self.sensor.sigma_f >= 0.0 && self.sensor.sigma_f.is_finite()) {
            return Err("sensor.sigma_f must be nonnegative and finite".into());
        }
        if !(self.sensor.sigma_tau >= 0.0 && self.sensor.sigma_tau.is_finite()) {
            return Err("sensor.sigma_tau must be nonnegative and finite".into());
        }
        if !self.sensor.bias_f.is_finite() || !self.sensor.bias_tau.is_finite() {
            return Err("sensor bias must be finite".into());
        }
        if !(self.settle_velocity > 0.0 && self.settle_velocity.is_finite()) {
            return Err("settle_velocity must be positive and finite".into());
        }
        if !(self.waypoint_timeout > 0.0 && self.waypoint_timeout.is_finite()) {
            return Err("waypoint_timeout must be positive and finite".into());
        }
        if !(self.mass_estimate_scale >= 0.0 && self.mass_estimate_scale.is_finite()) {
            return Err("mass_estimate_scale must be nonnegative and finite".into());
        }
        if let Some(p) = &self.angular_perturbation {
            if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
                return Err("angular_perturbation.amplitude must be nonnegative".into());
            }
            if !(p.frequency > 0.0 && p.frequency.is_finite()) {
                return Err("angular_perturbation.frequency must be positive".into());
            }
        }
        self.gains
            .validate()
            .map_err(|e| format!("gains invalid: {e}"))?;
        self.plan.validate()
    }
}

/// Task phase active during a step, for logging and plotting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskPhase {
    Approach,
    Grasped,
    MassWindow,
    ComWindow,
    Transport,
    Place,
    Done,
}

impl TaskPhase {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskPhase::Approach => "approach",
            TaskPhase::Grasped => "grasped",
            TaskPhase::MassWindow => "mass_window",
            TaskPhase::ComWindow => "com_window",
            TaskPhase::Transport => "transport",
            TaskPhase::Place => "place",
            TaskPhase::Done => "done",
        }
    }
}

/// One logged step; estimate columns are None until the estimate exists.
#[derive(Clone, Copy, Debug)]
pub struct LogRow {
    pub time: f64,
    pub phase: TaskPhase,
    pub p_ref: Vec3,
    pub p_a: Vec3,
    pub v_a: Vec3,
    pub p_tcp: Vec3,
    pub measured: Wrench,
    pub true_wrench: Wrench,
    pub f_exc: Vec3,
    pub m_hat: Option<f64>,
    pub r_hat_raw: Option<Vec3>,
    pub r_hat_filtered: Option<Vec3>,
}

pub const CSV_HEADER: &str = "time_s,phase,\
p_ref_x,p_ref_y,p_ref_z,p_a_x,p_a_y,p_a_z,v_a_x,v_a_y,v_a_z,\
p_tcp_x,p_tcp_y,p_tcp_z,\
f_meas_x,f_meas_y,f_meas_z,tau_meas_x,tau_meas_y,tau_meas_z,\
f_true_x,f_true_y,f_true_z,tau_true_x,tau_true_y,tau_true_z,\
f_exc_x,f_exc_y,f_exc_z,\
m_hat,r_hat_x_raw,r_hat_y_raw,r_hat_z_raw,\
r_hat_x_filtered,r_hat_y_filtered,r_hat_z_filtered";

/// Uniform-grid trajectory log of one run.
#[derive(Clone, Debug, Default)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub rows: Vec<LogRow>,
}

impl TrajectoryLog {
    /// Write the log as CSV; floats carry nine significant digits, absent
    /// estimates stay as empty cells.
    pub fn write_csv<W: io::Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let mut line = String::with_capacity(800);
        for row in &self.rows {
            line.clear();
            let _ = write!(line, "{:.8e},{}", row.time, row.phase.as_str());
            for v in [
                row.p_ref,
                row.p_a,
                row.v_a,
                row.p_tcp,
                row.measured.force,
                row.measured.moment,
                row.true_wrench.force,
                row.true_wrench.moment,
                row.f_exc,
            ] {
                let _ = write!(line, ",{:.8e},{:.8e},{:.8e}", v.x, v.y, v.z);
            }
            match row.m_hat {
                Some(m) => {
                    let _ = write!(line, ",{m:.8e}");
                }
                None => line.push(','),
            }
            for r in [row.r_hat_raw, row.r_hat_filtered] {
                match r {
                    Some(v) => {
                        let _ = write!(line, ",{:.8e},{:.8e},{:.8e}", v.x, v.y, v.z);
                    }
                    None => line.push_str(",,,"),
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Why a run was aborted before completing the task.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AbortReason {
    #[error("waypoint {index} not reached within {timeout} s")]
    WaypointTimeout { index: usize, timeout: f64 },
    #[error("offset not identifiable and correction is required")]
    NotIdentifiable,
    #[error("mass estimation failed: {0}")]
    MassEstimationFailed(String),
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("task aborted: {0}")]
    TaskAborted(AbortReason),
    #[error("numerical divergence at t = {t} s")]
    NumericalDivergence { t: f64 },
}

fn diverged(ctrl: &ControllerState, plant: &KinematicState) -> bool {
    let finite = ctrl.p_a.is_finite() && ctrl.v_a.is_finite() && plant.p_tcp.is_finite();
    !finite
        || ctrl.p_a.norm() > DIVERGENCE_LIMIT
        || ctrl.v_a.norm() > DIVERGENCE_LIMIT
        || plant.p_tcp.norm() > DIVERGENCE_LIMIT
}

/// Run one scenario to completion and assemble the report and log.
///
/// Each step synthesizes the true payload wrench from the plant state,
/// samples the sensor, feeds the active estimation window, applies the
/// excitation force once the mass estimate exists, integrates the admittance
/// law, commands the plant with the admittance velocity, and finally checks
/// waypoint attainment, dwell expiry, and action firing. Deterministic for a
/// given scenario value.
pub fn run_simulation(scenario: &Scenario) -> Result<(TaskReport, TrajectoryLog), SimError> {
    scenario.validate().map_err(SimError::InvalidScenario)?;
    let plan = &scenario.plan;
    let release_idx = plan.release_index();
    let dt = scenario.dt;

    let start = plan.waypoints[0].position;
    let mut ctrl = ControllerState {
        p_a: start,
        ..ControllerState::default()
    };
    let mut plant = KinematicState {
        p_tcp: start,
        ..KinematicState::default()
    };
    let mut sensor_cfg = scenario.sensor;
    sensor_cfg.seed = scenario.seed;
    let mut sensor = ForceTorqueSensor::new(sensor_cfg);

    let mut rows: Vec<LogRow> = Vec::new();
    let mut phase = TaskPhase::Approach;
    let mut attached = false;

    let mut wp_idx = 0usize;
    let mut wp_entered_t = 0.0f64;
    let mut reached_at: Option<f64> = None;

    let mut mass_window_open = false;
    let mut mass_samples: Vec<f64> = Vec::new();
    // Mass used by the excitation force; None until the estimate exists.
    let mut active_mass: Option<f64> = None;
    let mut report_mass: Option<MassEstimate> = None;

    let mut offset_buf: Option<OffsetBuffer> = None;
    let mut com_window_start: Option<f64> = None;
    let mut steps_in_window = 0usize;
    let mut latest_offset: Option<OffsetEstimate> = None;
    let mut filtered: Option<Vec3> = None;

    let mut applied_correction: Option<Vec3> = None;
    let mut release_target: Option<Vec3> = None;
    let mut correction_applied = false;
    let mut placement: Option<PlacementResult> = None;

    let mut step = 0usize;
    while wp_idx < plan.waypoints.len() {
        let t = step as f64 * dt;

        if let Some(p) = &scenario.angular_perturbation {
            let (omega, alpha) = p.angular_state(t);
            plant.omega = omega;
            plant.alpha = alpha;
        }

        let true_wrench = if attached {
            synthesize_wrench(&plant, &scenario.payload, &scenario.gravity)
        } else {
            Wrench::ZERO
        };
        let measured = sensor.sample(&true_wrench);

        if mass_window_open {
            if let Ok(m) = estimate_mass_sample(
                measured.force.z,
                plant.a_tcp.z,
                scenario.gravity.g_scalar,
                DEFAULT_GUARD_EPS,
            ) {
                mass_samples.push(m);
            }
        }
        if let Some(buf) = offset_buf.as_mut() {
            if buf.window_end.is_infinite() {
                let _ = accumulate_offset_sample(
                    buf,
                    t,
                    measured.force,
                    measured.moment,
                    DEFAULT_FORCE_FLOOR,
                );
                steps_in_window += 1;
                // Re-solve on a fixed step cadence once enough samples exist.
                if steps_in_window.is_multiple_of(RESOLVE_CADENCE_STEPS)
                    && buf.system.sample_count() >= buf.min_samples
                {
                    if let Ok(mut est) = solve_offset(buf) {
                        let blended = match filtered {
                            Some(prev) => lowpass(prev, est.r_hat_raw, OFFSET_FILTER_ALPHA),
                            None => est.r_hat_raw,
                        };
                        filtered = Some(blended);
                        est.r_hat_filtered = blended;
                        latest_offset = Some(est);
                    }
                }
            }
        }

        ctrl.f_exc = match active_mass {
            Some(m_hat) => -payload_force_estimate(m_hat, plant.a_tcp, scenario.gravity.g_vec),
            None => Vec3::ZERO,
        };

        let p_ref = if wp_idx == release_idx {
            release_target.unwrap_or(plan.waypoints[wp_idx].position)
        } else {
            plan.waypoints[wp_idx].position
        };
        let accel = admittance_accel(&ctrl, &measured, &scenario.gains, p_ref);
        ctrl = integrate_controller(&ctrl, accel, dt).expect("dt validated positive");
        plant = step_plant(&plant, ctrl.v_a, scenario.tracking_lag, dt)
            .expect("dt validated positive");

        if diverged(&ctrl, &plant) {
            return Err(SimError::NumericalDivergence { t });
        }

        rows.push(LogRow {
            time: t,
            phase,
            p_ref,
            p_a: ctrl.p_a,
            v_a: ctrl.v_a,
            p_tcp: plant.p_tcp,
            measured,
            true_wrench,
            f_exc: ctrl.f_exc,
            m_hat: active_mass,
            r_hat_raw: latest_offset.map(|e| e.r_hat_raw),
            r_hat_filtered: filtered,
        });

        let wp = plan.waypoints[wp_idx];
        if reached_at.is_none() {
            let gate = Waypoint {
                position: p_ref,
                ..wp
            };
            if waypoint_reached(&ctrl, &gate, scenario.settle_velocity) {
                reached_at = Some(t);
            } else if t - wp_entered_t > scenario.waypoint_timeout {
                return Err(SimError::TaskAborted(AbortReason::WaypointTimeout {
                    index: wp_idx,
                    timeout: scenario.waypoint_timeout,
                }));
            }
        }
        if let Some(t0) = reached_at {
            if t - t0 >= wp.dwell {
                match wp.action {
                    WaypointAction::None => {}
                    WaypointAction::Grasp => {
                        attached = true;
                        phase = TaskPhase::Grasped;
                        if scenario.assume_known_mass {
                            active_mass = Some(scenario.payload.mass);
                            report_mass = Some(MassEstimate {
                                m_hat: scenario.payload.mass,
                                sample_count: 0,
                                valid: true,
                            });
                        }
                    }
                    WaypointAction::BeginMassWindow => {
                        mass_window_open = true;
                        phase = TaskPhase::MassWindow;
                    }
                    WaypointAction::BeginComWindow => {
                        mass_window_open = false;
                        if !scenario.assume_known_mass {
                            match finalize_mass(&mass_samples, DEFAULT_MIN_MASS_SAMPLES) {
                                Ok(est) => {
                                    active_mass = Some(est.m_hat * scenario.mass_estimate_scale);
                                    report_mass = Some(est);
                                }
                                Err(e) => {
                                    return Err(SimError::TaskAborted(
                                        AbortReason::MassEstimationFailed(e.to_string()),
                                    ));
                                }
                            }
                        }
                        offset_buf = Some(OffsetBuffer::new(t, DEFAULT_MIN_OFFSET_SAMPLES));
                        com_window_start = Some(t);
                        steps_in_window = 0;
                        phase = TaskPhase::ComWindow;
                    }
                    WaypointAction::EndComWindow => {
                        if let Some(buf) = offset_buf.as_mut() {
                            buf.close(t);
                            if buf.system.sample_count() >= buf.min_samples {
                                if let Ok(mut est) = solve_offset(buf) {
                                    let blended = match filtered {
                                        Some(prev) => {
                                            lowpass(prev, est.r_hat_raw, OFFSET_FILTER_ALPHA)
                                        }
                                        None => est.r_hat_raw,
                                    };
                                    filtered = Some(blended);
                                    est.r_hat_filtered = blended;
                                    latest_offset = Some(est);
                                }
                            }
                        }
                        let usable = latest_offset.filter(|e| e.identifiable);
                        let correction = match plan.correction {
                            CorrectionPolicy::Disabled => Vec3::ZERO,
                            CorrectionPolicy::Required => match usable {
                                Some(est) => {
                                    correction_applied = true;
                                    est.r_hat_filtered
                                }
                                None => {
                                    return Err(SimError::TaskAborted(
                                        AbortReason::NotIdentifiable,
                                    ));
                                }
                            },
                            CorrectionPolicy::Optional => match usable {
                                Some(est) => {
                                    correction_applied = true;
                                    est.r_hat_filtered
                                }
                                None => Vec3::ZERO,
                            },
                        };
                        applied_correction = Some(correction);
                        release_target = Some(stacking_place(
                            plan.place_nominal,
                            correction,
                            plan.layer_index,
                            plan.layer_height,
                        ));
                        phase = TaskPhase::Transport;
                    }
                    WaypointAction::Release => {
                        attached = false;
                        let r_true = scenario.payload.com_offset;
                        let r_used = applied_correction.unwrap_or(Vec3::ZERO);
                        let commanded = release_target.expect("set when the CoM window closed");
                        let actual = plant.p_tcp;
                        placement = Some(placement_errors(PlacementResult {
                            target: plan.place_nominal,
                            ideal_correction: Vec3::new(-r_true.x, -r_true.y, 0.0),
                            ideal_corrected_tcp: stacking_place(
                                plan.place_nominal,
                                r_true,
                                plan.layer_index,
                                plan.layer_height,
                            ),
                            estimated_correction: Vec3::new(-r_used.x, -r_used.y, 0.0),
                            commanded_tcp: commanded,
                            actual_tcp: actual,
                            correction_command_error: 0.0,
                            release_error_vs_ideal: 0.0,
                            execution_error: 0.0,
                            object_com_final_x: actual.x + r_true.x,
                        }));
                        phase = TaskPhase::Done;
                    }
                }
                wp_idx += 1;
                wp_entered_t = t;
                reached_at = None;
                if wp_idx == release_idx && phase == TaskPhase::Transport {
                    phase = TaskPhase::Place;
                }
            }
        }
        step += 1;
    }

    let log = TrajectoryLog { dt, rows };
    let placement = placement.expect("validated plan fires release");
    let (stable, stability_margin) = crate::task::evaluate_equilibrium(
        placement.object_com_final_x,
        plan.support_x,
        plan.support_half_width,
    );

    let (offset_rmse_x, tcp_rmse_x) = match com_window_start {
        Some(t0) => {
            let t_end = log.rows.last().map(|r| r.time).unwrap_or(t0);
            let series: Vec<(f64, Vec3)> = log
                .rows
                .iter()
                .filter(|r| r.time >= t0)
                .filter_map(|r| r.r_hat_filtered.map(|v| (r.time, v)))
                .collect();
            let o_rmse = offset_rmse(&series, scenario.payload.com_offset, (t0, t_end), Axis::X)
                .ok();
            let ideal = ideal_trace_from_log(&log, scenario);
            let mut sum = 0.0;
            let mut n = 0usize;
            for (row, ideal_p) in log.rows.iter().zip(&ideal) {
                if row.time >= t0 {
                    sum += (row.p_tcp.x - ideal_p.x) * (row.p_tcp.x - ideal_p.x);
                    n += 1;
                }
            }
            let t_rmse = (n > 0).then(|| (sum / n as f64).sqrt());
            (o_rmse, t_rmse)
        }
        None => (None, None),
    };

    let report = TaskReport {
        mass_estimate: report_mass.expect("validated plan finalizes the mass"),
        offset_estimate: latest_offset.unwrap_or(OffsetEstimate {
            r_hat_raw: Vec3::ZERO,
            r_hat_filtered: Vec3::ZERO,
            rank: 0,
            residual_norm: 0.0,
            identifiable: false,
        }),
        placement,
        offset_rmse_x,
        tcp_rmse_x,
        stable,
        stability_margin,
        correction_applied,
    };
    Ok((report, log))
}

/// Replay a logged run through the same admittance law with the true payload
/// wrench perfectly compensated, yielding the per-step comparison positions.
///
/// The replay consumes the logged measured wrench and reference schedule, so
/// it sees the identical disturbance history with the excitation force set to
/// the negated true payload force instead of the estimate.
pub fn ideal_trace_from_log(log: &TrajectoryLog, scenario: &Scenario) -> Vec<Vec3> {
    let mut ctrl = ControllerState {
        p_a: scenario.plan.waypoints[0].position,
        ..ControllerState::default()
    };
    log.rows
        .iter()
        .map(|row| {
            ctrl.f_exc = -row.true_wrench.force;
            let accel = admittance_accel(&ctrl, &row.measured, &scenario.gains, row.p_ref);
            ctrl = integrate_controller(&ctrl, accel, log.dt).expect("log dt is positive");
            ctrl.p_a
        })
        .collect()
}

/// Run the scenario and return its perfectly compensated comparison trace.
pub fn ideal_admittance_trace(scenario: &Scenario) -> Result<Vec<Vec3>, SimError> {
    let (_, log) = run_simulation(scenario)?;
    Ok(ideal_trace_from_log(&log, scenario))
}
