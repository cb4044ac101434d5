//! Online payload parameter estimation: mass from vertical force and
//! acceleration, payload-force prediction for the excitation term, and CoM
//! offset via stacked least squares over wrench samples with identifiability
//! diagnostics.

use crate::numerics::{skew, solve_least_squares, StackedSystem, Vec3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mass-sample denominator guard against the free-fall singularity, m/s².
pub const DEFAULT_GUARD_EPS: f64 = 0.5;
/// Minimum force magnitude for an offset sample to enter the system, N.
pub const DEFAULT_FORCE_FLOOR: f64 = 1.0;
/// EMA coefficient for the filtered offset estimate at the 500 Hz loop rate.
pub const OFFSET_FILTER_ALPHA: f64 = 0.05;
/// Control steps between offset re-solves during the measurement window.
pub const RESOLVE_CADENCE_STEPS: usize = 50;
/// Default minimum accepted samples before the mass estimate finalizes.
pub const DEFAULT_MIN_MASS_SAMPLES: usize = 25;
/// Default minimum wrench samples before the offset system is solved.
pub const DEFAULT_MIN_OFFSET_SAMPLES: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error("vertical acceleration within {guard_eps} m/s² of free fall")]
    SingularDenominator { guard_eps: f64 },
    #[error("{got} samples accumulated, {needed} required")]
    InsufficientSamples { got: usize, needed: usize },
    #[error("sample at t = {t} s outside window [{start}, {end}]")]
    OutsideWindow { t: f64, start: f64, end: f64 },
    #[error("no estimate samples inside the requested window")]
    EmptyWindow,
}

/// Finalized payload mass estimate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MassEstimate {
    pub m_hat: f64,
    pub sample_count: usize,
    pub valid: bool,
}

/// One mass sample: f_pz / (a_z − g), rejected near free fall where the
/// denominator loses meaning.
pub fn estimate_mass_sample(
    f_pz: f64,
    a_z: f64,
    g_scalar: f64,
    guard_eps: f64,
) -> Result<f64, EstimationError> {
    let denom = a_z - g_scalar;
    if denom.abs() <= guard_eps {
        return Err(EstimationError::SingularDenominator { guard_eps });
    }
    Ok(f_pz / denom)
}

/// Median of the accepted mass samples.
pub fn finalize_mass(samples: &[f64], min_samples: usize) -> Result<MassEstimate, EstimationError> {
    if samples.is_empty() || samples.len() < min_samples {
        return Err(EstimationError::InsufficientSamples {
            got: samples.len(),
            needed: min_samples.max(1),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let m_hat = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    Ok(MassEstimate {
        m_hat,
        sample_count: n,
        valid: m_hat.is_finite() && m_hat > 0.0,
    })
}

/// Translational payload-force estimate m̂·(a_tcp − g_vec); the control loop
/// negates this when assigning the excitation force so the payload component
/// of the measured wrench cancels.
pub fn payload_force_estimate(m_hat: f64, a_tcp: Vec3, g_vec: Vec3) -> Vec3 {
    (a_tcp - g_vec).scale(m_hat)
}

/// Accumulated stacked system for the CoM-offset least squares.
#[derive(Clone, Debug)]
pub struct OffsetBuffer {
    pub system: StackedSystem,
    pub window_start: f64,
    pub window_end: f64,
    pub min_samples: usize,
}

impl OffsetBuffer {
    /// Open a measurement window at `window_start`; it stays open until
    /// `close` stamps the end time.
    pub fn new(window_start: f64, min_samples: usize) -> Self {
        OffsetBuffer {
            system: StackedSystem::new(),
            window_start,
            window_end: f64::INFINITY,
            min_samples,
        }
    }

    pub fn close(&mut self, window_end: f64) {
        self.window_end = window_end;
    }
}

/// Offset least-squares result with identifiability diagnostics.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct OffsetEstimate {
    pub r_hat_raw: Vec3,
    pub r_hat_filtered: Vec3,
    pub rank: usize,
    pub residual_norm: f64,
    pub identifiable: bool,
}

/// Append one wrench sample as the block −\[f\]×·r = τ.
///
/// Returns whether the sample entered the system; samples under the force
/// floor are dropped, samples outside the window are an error.
pub fn accumulate_offset_sample(
    buf: &mut OffsetBuffer,
    t: f64,
    f: Vec3,
    tau: Vec3,
    force_floor: f64,
) -> Result<bool, EstimationError> {
    if t < buf.window_start || t > buf.window_end {
        return Err(EstimationError::OutsideWindow {
            t,
            start: buf.window_start,
            end: buf.window_end,
        });
    }
    if f.norm() < force_floor {
        return Ok(false);
    }
    let mut coeff = skew(f);
    for e in coeff.m.iter_mut() {
        *e = -*e;
    }
    buf.system.push_block(coeff, tau);
    Ok(true)
}

/// Minimum-norm least-squares solve of the accumulated system.
///
/// A rank below 3 is not an error: the estimate comes back flagged
/// non-identifiable and the caller decides policy. `r_hat_filtered` starts at
/// the raw solution; re-solve callers EMA-blend it across solves.
pub fn solve_offset(buf: &OffsetBuffer) -> Result<OffsetEstimate, EstimationError> {
    let got = buf.system.sample_count();
    if got < buf.min_samples.max(1) {
        return Err(EstimationError::InsufficientSamples {
            got,
            needed: buf.min_samples.max(1),
        });
    }
    let ls = solve_least_squares(&buf.system).expect("sample_count checked above");
    Ok(OffsetEstimate {
        r_hat_raw: ls.solution,
        r_hat_filtered: ls.solution,
        rank: ls.rank,
        residual_norm: ls.residual_norm,
        identifiable: ls.rank == 3,
    })
}

/// Axis selector for scalar error metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn of(self, v: Vec3) -> f64 {
        match self {
            Axis::X => v.x,
            Axis::Y => v.y,
            Axis::Z => v.z,
        }
    }
}

/// Root-mean-square of the per-sample error along one axis, over the samples
/// whose timestamps fall inside `[t0, t1]`.
pub fn offset_rmse(
    estimates: &[(f64, Vec3)],
    reference: Vec3,
    window: (f64, f64),
    axis: Axis,
) -> Result<f64, EstimationError> {
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for &(t, v) in estimates {
        if t >= window.0 && t <= window.1 {
            let e = axis.of(v) - axis.of(reference);
            sum_sq += e * e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(EstimationError::EmptyWindow);
    }
    Ok((sum_sq / n as f64).sqrt())
}
