//! Pick-and-place task layer: waypoint plan validation, staged estimation
//! windows, offset-corrected placement and stacking geometry, equilibrium
//! evaluation, and the placement error metrics.

use crate::control::{Waypoint, WaypointAction};
use crate::estimation::{MassEstimate, OffsetEstimate};
use crate::numerics::Vec3;
use serde::{Deserialize, Serialize};

/// Default half-width of the narrow support bar, m.
pub const DEFAULT_SUPPORT_HALF_WIDTH: f64 = 0.005;
/// Default per-waypoint attainment timeout, simulated seconds.
pub const DEFAULT_WAYPOINT_TIMEOUT: f64 = 30.0;

/// Policy for applying the horizontal placement correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionPolicy {
    /// Abort the task if the offset is not identifiable.
    Required,
    /// Fall back to zero correction if the offset is not identifiable.
    Optional,
    /// Place at the nominal target; the estimate is still reported.
    Disabled,
}

/// Waypoint plan plus placement and support geometry for one cycle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskPlan {
    pub waypoints: Vec<Waypoint>,
    /// Nominal placement command; its (x, y) is the target equilibrium point.
    pub place_nominal: Vec3,
    /// Object layer height for stacking, m.
    pub layer_height: f64,
    /// Zero-based layer index of this cycle.
    pub layer_index: usize,
    /// Equilibrium line abscissa of the support, m.
    pub support_x: f64,
    pub support_half_width: f64,
    pub correction: CorrectionPolicy,
}

impl TaskPlan {
    /// Check action multiplicity and staging order: grasp, then the mass
    /// window, then the CoM window, then release, each exactly once.
    pub fn validate(&self) -> Result<(), String> {
        if self.waypoints.is_empty() {
            return Err("plan.waypoints is empty".into());
        }
        for (i, wp) in self.waypoints.iter().enumerate() {
            if !(wp.tolerance > 0.0 && wp.tolerance.is_finite()) {
                return Err(format!("plan.waypoints[{i}].tolerance must be positive"));
            }
            if !(wp.dwell >= 0.0 && wp.dwell.is_finite()) {
                return Err(format!("plan.waypoints[{i}].dwell must be nonnegative"));
            }
            if !wp.position.is_finite() {
                return Err(format!("plan.waypoints[{i}].position must be finite"));
            }
        }
        let index_of = |action: WaypointAction, name: &str| -> Result<usize, String> {
            let hits: Vec<usize> = self
                .waypoints
                .iter()
                .enumerate()
                .filter(|(_, wp)| wp.action == action)
                .map(|(i, _)| i)
                .collect();
            match hits.as_slice() {
                [i] => Ok(*i),
                [] => Err(format!("plan must contain exactly one {name} action")),
                _ => Err(format!("plan must contain exactly one {name} action")),
            }
        };
        let grasp = index_of(WaypointAction::Grasp, "grasp")?;
        let mass = index_of(WaypointAction::BeginMassWindow, "begin_mass_window")?;
        let com_begin = index_of(WaypointAction::BeginComWindow, "begin_com_window")?;
        let com_end = index_of(WaypointAction::EndComWindow, "end_com_window")?;
        let release = index_of(WaypointAction::Release, "release")?;
        if !(grasp < mass && mass < com_begin && com_begin < com_end && com_end < release) {
            return Err(
                "plan actions must be ordered grasp, begin_mass_window, begin_com_window, \
                 end_com_window, release"
                    .into(),
            );
        }
        if !(self.layer_height > 0.0 && self.layer_height.is_finite()) {
            return Err("plan.layer_height must be positive".into());
        }
        if !(self.support_half_width > 0.0 && self.support_half_width.is_finite()) {
            return Err("plan.support_half_width must be positive".into());
        }
        if !self.place_nominal.is_finite() {
            return Err("plan.place_nominal must be finite".into());
        }
        Ok(())
    }

    pub fn release_index(&self) -> usize {
        self.waypoints
            .iter()
            .position(|wp| wp.action == WaypointAction::Release)
            .expect("validated plan has a release action")
    }
}

/// Placement geometry and errors for one cycle, mirroring the per-trial
/// placement table: all positions in m, errors as horizontal 2-norms.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlacementResult {
    /// Nominal placement command (target equilibrium point in x, y).
    pub target: Vec3,
    /// Correction that would center the true CoM: −(r.x, r.y, 0).
    pub ideal_correction: Vec3,
    pub ideal_corrected_tcp: Vec3,
    /// Correction actually applied: −(r̂.x, r̂.y, 0), zero when disabled.
    pub estimated_correction: Vec3,
    pub commanded_tcp: Vec3,
    pub actual_tcp: Vec3,
    pub correction_command_error: f64,
    pub release_error_vs_ideal: f64,
    pub execution_error: f64,
    pub object_com_final_x: f64,
}

/// Full report of one pick-and-place run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TaskReport {
    pub mass_estimate: MassEstimate,
    pub offset_estimate: OffsetEstimate,
    pub placement: PlacementResult,
    /// RMSE of the filtered offset-estimate x error from the start of the
    /// CoM window to the end of the run, m.
    pub offset_rmse_x: Option<f64>,
    /// RMSE of the TCP x position against the ideal admittance trace over
    /// the same interval, m.
    pub tcp_rmse_x: Option<f64>,
    pub stable: bool,
    pub stability_margin: f64,
    /// False when the correction fell back to zero or was disabled.
    pub correction_applied: bool,
}

/// Horizontal placement correction: p_nominal − (r̂.x, r̂.y, 0).
///
/// The vertical coordinate is untouched; the task geometry fixes it.
pub fn corrected_place(p_nominal: Vec3, r_hat: Vec3) -> Vec3 {
    Vec3::new(p_nominal.x - r_hat.x, p_nominal.y - r_hat.y, p_nominal.z)
}

/// Corrected placement raised to stacking layer n: corrected + (0, 0, n·h).
pub fn stacking_place(p_nominal: Vec3, r_hat: Vec3, n: usize, h: f64) -> Vec3 {
    corrected_place(p_nominal, r_hat) + Vec3::new(0.0, 0.0, n as f64 * h)
}

/// Rigid-body tipping test over a line support: margin = half_width −
/// |object_com_x − support_x|, stable iff the margin is nonnegative.
pub fn evaluate_equilibrium(object_com_x: f64, support_x: f64, half_width: f64) -> (bool, f64) {
    let margin = half_width - (object_com_x - support_x).abs();
    (margin >= 0.0, margin)
}

/// Fill the three error metrics from the geometric fields.
///
/// All three are horizontal (x, y) 2-norms, matching the 2-D placement
/// geometry: the vertical coordinate is fixed by the task.
pub fn placement_errors(mut res: PlacementResult) -> PlacementResult {
    res.correction_command_error = (res.ideal_correction - res.estimated_correction).norm_xy();
    res.release_error_vs_ideal = (res.actual_tcp - res.ideal_corrected_tcp).norm_xy();
    res.execution_error = (res.actual_tcp - res.commanded_tcp).norm_xy();
    res
}

/// Build a placement record from externally supplied corrections, used to
/// replay recorded trial geometry through the same arithmetic.
///
/// `estimated_correction` and `ideal_correction` are correction vectors
/// (already negated offsets); `actual_tcp` is where the TCP released.
pub fn replay_placement(
    target: Vec3,
    ideal_correction: Vec3,
    estimated_correction: Vec3,
    actual_tcp: Vec3,
    layer_index: usize,
    layer_height: f64,
) -> PlacementResult {
    let stack_z = Vec3::new(0.0, 0.0, layer_index as f64 * layer_height);
    let ideal_corrected_tcp = target + ideal_correction + stack_z;
    let commanded_tcp = target + estimated_correction + stack_z;
    // The correction convention is c = −(r.x, r.y), so the true offset is the
    // negated ideal correction.
    let object_com_final_x = actual_tcp.x - ideal_correction.x;
    placement_errors(PlacementResult {
        target,
        ideal_correction,
        ideal_corrected_tcp,
        estimated_correction,
        commanded_tcp,
        actual_tcp,
        correction_command_error: 0.0,
        release_error_vs_ideal: 0.0,
        execution_error: 0.0,
        object_com_final_x,
    })
}

/// Execute one pick-and-place cycle of `plan` under `scenario`, dropping the
/// trajectory log.
pub fn run_pick_place(
    plan: &TaskPlan,
    scenario: &crate::sim::Scenario,
) -> Result<TaskReport, crate::sim::SimError> {
    let mut scenario = scenario.clone();
    scenario.plan = plan.clone();
    crate::sim::run_simulation(&scenario).map(|(report, _)| report)
}
