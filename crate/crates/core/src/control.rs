//! Translational admittance controller: admittance acceleration from the
//! measured wrench, excitation force, and waypoint reference, integrated with
//! semi-implicit Euler to the commanded Cartesian velocity.

use crate::numerics::{Mat3, Vec3};
use crate::sensing::Wrench;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default settle-velocity threshold for waypoint attainment, m/s.
pub const DEFAULT_SETTLE_VELOCITY: f64 = 1e-3;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("timestep must be positive, got {0}")]
    NonpositiveTimestep(f64),
    #[error("admittance gains must be diagonal with positive entries: {0}")]
    InvalidGains(String),
}

/// Virtual inertia, damping, and stiffness; diagonal with positive entries.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdmittanceGains {
    pub m_a: Mat3,
    pub b_a: Mat3,
    pub k_a: Mat3,
}

impl Default for AdmittanceGains {
    fn default() -> Self {
        AdmittanceGains {
            m_a: Mat3::diag(10.0, 10.0, 10.0),
            b_a: Mat3::diag(80.0, 80.0, 80.0),
            k_a: Mat3::diag(200.0, 200.0, 200.0),
        }
    }
}

impl AdmittanceGains {
    pub fn validate(&self) -> Result<(), ControlError> {
        for (name, m) in [("M_a", &self.m_a), ("B_a", &self.b_a), ("K_a", &self.k_a)] {
            for row in 0..3 {
                for col in 0..3 {
                    let e = m.at(row, col);
                    if row == col {
                        if !(e.is_finite() && e > 0.0) {
                            return Err(ControlError::InvalidGains(format!(
                                "{name} diagonal entry {row} is {e}"
                            )));
                        }
                    } else if e != 0.0 {
                        return Err(ControlError::InvalidGains(format!(
                            "{name} off-diagonal entry ({row},{col}) is {e}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Componentwise solve D·x = v for a diagonal matrix D.
fn diag_solve(d: &Mat3, v: Vec3) -> Vec3 {
    Vec3::new(v.x / d.at(0, 0), v.y / d.at(1, 1), v.z / d.at(2, 2))
}

/// Admittance state; `f_exc` is the force the controller adds to the measured
/// wrench. The simulation sets it to the negated payload-force estimate so
/// that the payload component of the measurement cancels out of the loop.
#[derive(Clone, Copy, Debug, Default)]
pub struct ControllerState {
    pub p_a: Vec3,
    pub v_a: Vec3,
    pub a_a: Vec3,
    pub f_exc: Vec3,
}

/// Waypoint action fired once the waypoint is reached and its dwell elapses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaypointAction {
    None,
    Grasp,
    Release,
    BeginMassWindow,
    BeginComWindow,
    EndComWindow,
}

/// Piecewise-constant reference target with attainment and dwell parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Vec3,
    /// Position tolerance for attainment, m; must be positive.
    pub tolerance: f64,
    /// Hold time after attainment before the action fires, s.
    pub dwell: f64,
    pub action: WaypointAction,
}

/// Admittance acceleration:
/// M_a⁻¹·(measured.force − B_a·v_a − K_a·(p_a − p_ref) + F_exc).
pub fn admittance_accel(
    state: &ControllerState,
    measured: &Wrench,
    gains: &AdmittanceGains,
    p_ref: Vec3,
) -> Vec3 {
    let spring = gains.k_a.mul_vec(state.p_a - p_ref);
    let damping = gains.b_a.mul_vec(state.v_a);
    diag_solve(&gains.m_a, measured.force - damping - spring + state.f_exc)
}

/// Semi-implicit Euler step: velocity first, then position.
pub fn integrate_controller(
    state: &ControllerState,
    accel: Vec3,
    dt: f64,
) -> Result<ControllerState, ControlError> {
    if dt <= 0.0 {
        return Err(ControlError::NonpositiveTimestep(dt));
    }
    let v_a = state.v_a + accel.scale(dt);
    Ok(ControllerState {
        p_a: state.p_a + v_a.scale(dt),
        v_a,
        a_a: accel,
        f_exc: state.f_exc,
    })
}

/// Static offset at which the admittance acceleration vanishes under a
/// constant uncompensated force: K_a⁻¹·force.
pub fn steady_state_sag(gains: &AdmittanceGains, uncompensated_force: Vec3) -> Vec3 {
    diag_solve(&gains.k_a, uncompensated_force)
}

/// A waypoint counts as reached only when both position and velocity settle.
pub fn waypoint_reached(state: &ControllerState, wp: &Waypoint, settle_velocity: f64) -> bool {
    (state.p_a - wp.position).norm() <= wp.tolerance && state.v_a.norm() <= settle_velocity
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rest_at(p: Vec3) -> ControllerState {
        ControllerState {
            p_a: p,
            ..ControllerState::default()
        }
    }

    fn gains_10_40_100() -> AdmittanceGains {
        AdmittanceGains {
            m_a: Mat3::diag(10.0, 10.0, 10.0),
            b_a: Mat3::diag(40.0, 40.0, 40.0),
            k_a: Mat3::diag(100.0, 100.0, 100.0),
        }
    }

    #[test]
    fn equilibrium_produces_zero_accel() {
        let a = admittance_accel(
            &rest_at(Vec3::ZERO),
            &Wrench::ZERO,
            &AdmittanceGains::default(),
            Vec3::ZERO,
        );
        assert_eq!(a, Vec3::ZERO);
    }

    #[test]
    fn spring_term_pulls_back_to_reference() {
        let a = admittance_accel(
            &rest_at(Vec3::new(0.01, 0.0, 0.0)),
            &Wrench::ZERO,
            &gains_10_40_100(),
            Vec3::ZERO,
        );
        assert!((a - Vec3::new(-0.1, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn excitation_cancels_measured_force() {
        let mut state = rest_at(Vec3::ZERO);
        state.f_exc = Vec3::new(0.0, 0.0, 9.81);
        let measured = Wrench {
            force: Vec3::new(0.0, 0.0, -9.81),
            moment: Vec3::ZERO,
        };
        let a = admittance_accel(&state, &measured, &gains_10_40_100(), Vec3::ZERO);
        assert_eq!(a, Vec3::ZERO);
    }

    #[test]
    fn payload_component_cancels_out_of_the_loop() {
        // Compensating a measured force F_int + F_p with f_exc = −F_p yields
        // the same acceleration as measuring F_int alone, to rounding.
        let f_int = Vec3::new(0.7, -1.3, 2.9);
        let f_p = Vec3::new(0.4, 0.1, 9.81);
        let gains = AdmittanceGains::default();
        let mut state = rest_at(Vec3::new(0.004, -0.002, 0.01));
        state.v_a = Vec3::new(0.02, 0.0, -0.01);

        state.f_exc = -f_p;
        let compensated = admittance_accel(
            &state,
            &Wrench { force: f_int + f_p, moment: Vec3::ZERO },
            &gains,
            Vec3::ZERO,
        );
        state.f_exc = Vec3::ZERO;
        let clean = admittance_accel(
            &state,
            &Wrench { force: f_int, moment: Vec3::ZERO },
            &gains,
            Vec3::ZERO,
        );
        assert!((compensated - clean).norm() < 1e-12);
    }

    #[test]
    fn integrate_rest_is_fixed_point() {
        let state = rest_at(Vec3::new(1.0, 2.0, 3.0));
        let next = integrate_controller(&state, Vec3::ZERO, 0.002).unwrap();
        assert_eq!(next.p_a, state.p_a);
        assert_eq!(next.v_a, Vec3::ZERO);
    }

    #[test]
    fn integrate_updates_velocity_before_position() {
        let next =
            integrate_controller(&rest_at(Vec3::ZERO), Vec3::new(1.0, 0.0, 0.0), 0.002).unwrap();
        assert_eq!(next.v_a, Vec3::new(0.002, 0.0, 0.0));
        assert!((next.p_a - Vec3::new(4e-6, 0.0, 0.0)).norm() < 1e-20);
    }

    #[test]
    fn constant_accel_velocity_telescopes_exactly() {
        // dt and accel chosen exactly representable so the sum has no rounding.
        let accel = Vec3::new(0.5, 0.0, 0.0);
        let dt = 0.125;
        let mut state = rest_at(Vec3::ZERO);
        for _ in 0..100 {
            state = integrate_controller(&state, accel, dt).unwrap();
        }
        assert_eq!(state.v_a.x, 100.0 * 0.5 * 0.125);
    }

    #[test]
    fn integrate_rejects_nonpositive_dt() {
        let err = integrate_controller(&rest_at(Vec3::ZERO), Vec3::ZERO, -1.0).unwrap_err();
        assert_eq!(err, ControlError::NonpositiveTimestep(-1.0));
    }

    #[test]
    fn sag_is_zero_without_force() {
        assert_eq!(
            steady_state_sag(&AdmittanceGains::default(), Vec3::ZERO),
            Vec3::ZERO
        );
    }

    #[test]
    fn sag_scales_inversely_with_stiffness() {
        let g100 = gains_10_40_100();
        let sag100 = steady_state_sag(&g100, Vec3::new(0.0, 0.0, -9.81));
        assert!((sag100 - Vec3::new(0.0, 0.0, -0.0981)).norm() < 1e-15);

        let g200 = AdmittanceGains::default();
        let sag200 = steady_state_sag(&g200, Vec3::new(0.0, 0.0, -9.81));
        assert!((sag200 - Vec3::new(0.0, 0.0, -0.04905)).norm() < 1e-15);
    }

    #[test]
    fn sag_matches_simulated_long_run_limit() {
        let gains = AdmittanceGains::default();
        let force = Vec3::new(0.0, 0.0, 9.81);
        let measured = Wrench { force, moment: Vec3::ZERO };
        let mut state = ControllerState::default();
        let dt = 0.002;
        // Slowest mode decays at B/(2M) = 4 1/s; 5 s is deep in steady state.
        for _ in 0..2500 {
            let a = admittance_accel(&state, &measured, &gains, Vec3::ZERO);
            state = integrate_controller(&state, a, dt).unwrap();
        }
        let predicted = steady_state_sag(&gains, force);
        assert!((state.p_a - predicted).norm() < 1e-6);
    }

    #[test]
    fn waypoint_reached_requires_position_and_velocity() {
        let wp = Waypoint {
            position: Vec3::new(0.1, 0.0, 0.0),
            tolerance: 0.002,
            dwell: 0.0,
            action: WaypointAction::None,
        };
        let mut state = rest_at(wp.position);
        assert!(waypoint_reached(&state, &wp, DEFAULT_SETTLE_VELOCITY));

        state.p_a = wp.position + Vec3::new(2.0 * wp.tolerance, 0.0, 0.0);
        assert!(!waypoint_reached(&state, &wp, DEFAULT_SETTLE_VELOCITY));

        state.p_a = wp.position;
        state.v_a = Vec3::new(0.01, 0.0, 0.0);
        assert!(!waypoint_reached(&state, &wp, DEFAULT_SETTLE_VELOCITY));
    }

    #[test]
    fn gains_validation_rejects_coupling_and_nonpositive_diagonal() {
        let mut gains = AdmittanceGains::default();
        assert!(gains.validate().is_ok());
        gains.k_a.m[1] = 5.0;
        assert!(gains.validate().is_err());
        gains.k_a.m[1] = 0.0;
        gains.m_a.m[0] = 0.0;
        assert!(gains.validate().is_err());
    }
}
