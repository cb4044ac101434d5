//! Deterministic simulation and estimation library for admittance-controlled
//! pick-and-place with payloads whose mass and center of mass are unknown.
//!
//! The crate models a velocity-controlled robot arm carrying a rigid payload
//! through a pick-and-place cycle. A wrist force-torque sensor measures the
//! payload wrench; the task layer estimates the payload mass from vertical
//! force samples, identifies the CoM offset by stacked least squares over the
//! moment balance, cancels the payload out of the admittance loop with an
//! excitation force, and corrects the placement command by the estimated
//! horizontal offset so the object lands centered on its support.
//!
//! Module map:
//! - [`numerics`]: vectors, matrices, and the stacked least-squares solver.
//! - [`plant`]: payload truth, TCP kinematics, wrench synthesis.
//! - [`sensing`]: wrench type, sensor noise model, lowpass filter.
//! - [`control`]: admittance law, integration, waypoints.
//! - [`estimation`]: mass and CoM-offset estimators.
//! - [`task`]: plan validation, placement geometry, equilibrium, metrics.
//! - [`sim`]: the closed-loop engine and trajectory logging.
//! - [`cli`]: scenario files, reports, and the command-line entry points.

pub mod cli;
pub mod control;
pub mod estimation;
pub mod numerics;
pub mod plant;
pub mod sensing;
pub mod sim;
pub mod task;
