//! Simulated physical truth: TCP kinematics tracking a commanded Cartesian
//! velocity, and rigid-body payload wrench synthesis at the wrist, including
//! the rotational terms the estimator neglects.

use crate::numerics::{cross, Mat3, Vec3};
use crate::sensing::Wrench;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlantError {
    #[error("timestep must be positive, got {0}")]
    NonpositiveTimestep(f64),
}

/// Ground truth of the simulated payload.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PayloadTruth {
    /// Mass in kg; must be positive.
    pub mass: f64,
    /// CoM position relative to the TCP, base-frame axes, m.
    pub com_offset: Vec3,
    /// Inertia tensor about the CoM, kg·m²; symmetric positive semidefinite.
    pub inertia: Mat3,
}

/// TCP kinematic state in the base frame.
#[derive(Clone, Copy, Debug, Default)]
pub struct KinematicState {
    pub p_tcp: Vec3,
    pub v_tcp: Vec3,
    pub a_tcp: Vec3,
    pub omega: Vec3,
    pub alpha: Vec3,
}

/// Base-frame gravity; `g_vec = (0, 0, g_scalar)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GravityModel {
    pub g_vec: Vec3,
    pub g_scalar: f64,
}

impl GravityModel {
    pub fn new(g_scalar: f64) -> Self {
        GravityModel {
            g_vec: Vec3::new(0.0, 0.0, g_scalar),
            g_scalar,
        }
    }
}

impl Default for GravityModel {
    fn default() -> Self {
        GravityModel::new(-9.81)
    }
}

/// CoM linear acceleration: a_C = a_tcp + alpha × r + omega × (omega × r).
pub fn com_acceleration(state: &KinematicState, r: Vec3) -> Vec3 {
    state.a_tcp + cross(state.alpha, r) + cross(state.omega, cross(state.omega, r))
}

/// Payload-induced wrench at the wrist, base-frame axes.
///
/// The sensor reports the wrench the payload exerts through the wrist:
/// f = m·(a_C − g_vec), so a static payload reads a positive vertical force.
/// τ carries the full rigid-body moment including the rotational terms.
pub fn synthesize_wrench(
    state: &KinematicState,
    payload: &PayloadTruth,
    gravity: &GravityModel,
) -> Wrench {
    let r = payload.com_offset;
    let a_c = com_acceleration(state, r);
    let f = (a_c - gravity.g_vec).scale(payload.mass);
    let tau = cross(r, f)
        + payload.inertia.mul_vec(state.alpha)
        + cross(state.omega, payload.inertia.mul_vec(state.omega));
    Wrench { force: f, moment: tau }
}

/// Advance the TCP one step toward the commanded velocity.
///
/// `tracking_lag` is the first-order time constant of the inner velocity
/// loop; zero means ideal tracking. Angular terms are held as configured.
pub fn step_plant(
    state: &KinematicState,
    commanded_velocity: Vec3,
    tracking_lag: f64,
    dt: f64,
) -> Result<KinematicState, PlantError> {
    if dt <= 0.0 {
        return Err(PlantError::NonpositiveTimestep(dt));
    }
    let v_new = if tracking_lag > 0.0 {
        let blend = 1.0 - (-dt / tracking_lag).exp();
        state.v_tcp + (commanded_velocity - state.v_tcp).scale(blend)
    } else {
        commanded_velocity
    };
    let a_tcp = (v_new - state.v_tcp).scale(1.0 / dt);
    Ok(KinematicState {
        p_tcp: state.p_tcp + v_new.scale(dt),
        v_tcp: v_new,
        a_tcp,
        omega: state.omega,
        alpha: state.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn static_state() -> KinematicState {
        KinematicState::default()
    }

    fn unit_payload(r: Vec3) -> PayloadTruth {
        PayloadTruth {
            mass: 1.0,
            com_offset: r,
            inertia: Mat3::zero(),
        }
    }

    #[test]
    fn com_acceleration_pure_translation() {
        let mut state = static_state();
        state.a_tcp = Vec3::new(0.3, -0.1, 0.7);
        let a_c = com_acceleration(&state, Vec3::new(0.2, 0.1, -0.05));
        assert_eq!(a_c, state.a_tcp);
    }

    #[test]
    fn com_acceleration_angular_term() {
        let mut state = static_state();
        state.alpha = Vec3::new(0.0, 0.0, 1.0);
        let a_c = com_acceleration(&state, Vec3::new(0.1, 0.0, 0.0));
        assert!((a_c - Vec3::new(0.0, 0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn com_acceleration_centripetal_term() {
        let mut state = static_state();
        state.omega = Vec3::new(0.0, 0.0, 2.0);
        let a_c = com_acceleration(&state, Vec3::new(0.1, 0.0, 0.0));
        assert!((a_c - Vec3::new(-0.4, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn static_centered_payload_reads_weight_only() {
        let w = synthesize_wrench(
            &static_state(),
            &unit_payload(Vec3::ZERO),
            &GravityModel::default(),
        );
        assert!((w.force - Vec3::new(0.0, 0.0, 9.81)).norm() < 1e-12);
        assert_eq!(w.moment, Vec3::ZERO);
    }

    #[test]
    fn static_offset_payload_reads_moment() {
        let w = synthesize_wrench(
            &static_state(),
            &unit_payload(Vec3::new(0.085, 0.0, 0.0)),
            &GravityModel::default(),
        );
        assert!((w.force - Vec3::new(0.0, 0.0, 9.81)).norm() < 1e-12);
        assert!((w.moment - Vec3::new(0.0, -0.83385, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn horizontal_acceleration_keeps_moment_consistent() {
        let mut state = static_state();
        state.a_tcp = Vec3::new(1.0, 0.0, 0.0);
        let w = synthesize_wrench(
            &state,
            &unit_payload(Vec3::new(0.085, 0.0, 0.0)),
            &GravityModel::default(),
        );
        assert!((w.force - Vec3::new(1.0, 0.0, 9.81)).norm() < 1e-12);
        assert!((w.moment - Vec3::new(0.0, -0.83385, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn moment_is_exactly_r_cross_f_without_rotation() {
        let mut state = static_state();
        state.a_tcp = Vec3::new(0.4, -0.2, 1.1);
        let payload = PayloadTruth {
            mass: 2.3,
            com_offset: Vec3::new(0.03, -0.07, 0.02),
            inertia: Mat3::diag(0.01, 0.02, 0.015),
        };
        let w = synthesize_wrench(&state, &payload, &GravityModel::default());
        let expected = crate::numerics::cross(payload.com_offset, w.force);
        assert!((w.moment - expected).norm() <= 1e-12 * w.moment.norm().max(1.0));
    }

    #[test]
    fn step_plant_steady_tracking() {
        let mut state = static_state();
        state.v_tcp = Vec3::new(0.05, 0.0, 0.0);
        let next = step_plant(&state, state.v_tcp, 0.0, 0.002).unwrap();
        assert_eq!(next.a_tcp, Vec3::ZERO);
        assert!((next.p_tcp - Vec3::new(0.05 * 0.002, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn step_plant_ideal_tracking_jump() {
        let next = step_plant(&static_state(), Vec3::new(0.1, 0.0, 0.0), 0.0, 0.002).unwrap();
        assert_eq!(next.v_tcp, Vec3::new(0.1, 0.0, 0.0));
        assert_eq!(next.a_tcp, Vec3::new(50.0, 0.0, 0.0));
    }

    #[test]
    fn step_plant_first_order_lag() {
        let next = step_plant(&static_state(), Vec3::new(0.1, 0.0, 0.0), 0.05, 0.002).unwrap();
        assert!((next.v_tcp.x - 0.0039210560847676825).abs() < 1e-15);
        assert_eq!(next.v_tcp.y, 0.0);
    }

    #[test]
    fn step_plant_rest_is_fixed_point() {
        let next = step_plant(&static_state(), Vec3::ZERO, 0.0, 0.002).unwrap();
        assert_eq!(next.p_tcp, Vec3::ZERO);
        assert_eq!(next.v_tcp, Vec3::ZERO);
        assert_eq!(next.a_tcp, Vec3::ZERO);
    }

    #[test]
    fn step_plant_rejects_nonpositive_dt() {
        let err = step_plant(&static_state(), Vec3::ZERO, 0.0, 0.0).unwrap_err();
        assert_eq!(err, PlantError::NonpositiveTimestep(0.0));
    }
}
