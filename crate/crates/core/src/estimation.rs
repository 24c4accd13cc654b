//! Per-BMAV Gaussian belief with dead-reckoning prediction and
//! range/bearing correction (extended Kalman filter).
//!
//! The trace of the belief covariance is the uncertainty indicator used to
//! decide which BMAVs most need an observation.

use std::cmp::Ordering;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::sensing::{jacobian_h, predict_observation, RangeBearing};
use crate::world::{wrap_angle, NoiseModel, Pose, Vec2};

/// Eigenvalues below `-PSD_TOLERANCE` are treated as a broken covariance.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Default variance of a freshly launched BMAV, m^2 per axis.
pub const INITIAL_VARIANCE: f64 = 1e-4;

/// Position estimate and its covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief {
    pub mean: Vec2,
    pub cov: Matrix2<f64>,
}

impl Belief {
    pub fn new(mean: Vec2, cov: Matrix2<f64>) -> Self {
        Self { mean, cov }
    }

    /// Belief at a known launch point.
    pub fn at_launch(position: Vec2, variance: f64) -> Self {
        Self {
            mean: position,
            cov: Matrix2::from_diagonal_element(variance),
        }
    }

    pub fn trace(&self) -> f64 {
        uncertainty(self)
    }
}

/// Smallest eigenvalue of a symmetric 2x2 matrix.
pub fn min_eigenvalue(m: &Matrix2<f64>) -> f64 {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let half_trace = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    half_trace - disc
}

fn symmetrize(m: &Matrix2<f64>) -> Matrix2<f64> {
    (m + m.transpose()) * 0.5
}

/// Per-step process noise for a commanded velocity.
pub fn process_noise(v_cmd: &Vec2, noise: &NoiseModel) -> Matrix2<f64> {
    let s1 = noise.sigma(v_cmd.x);
    let s2 = noise.sigma(v_cmd.y);
    Matrix2::new(s1 * s1, 0.0, 0.0, s2 * s2)
}

/// Dead-reckoning prediction: the prior for the next timestep.
pub fn predict(b: &Belief, v_meas: &Vec2, q: &Matrix2<f64>, dt: f64) -> Belief {
    Belief {
        mean: b.mean + v_meas * dt,
        cov: b.cov + q * (dt * dt),
    }
}

/// Covariance after a linearized update with Jacobian `h` and measurement
/// covariance `r`, plus the gain that produced it.
pub fn covariance_update(
    cov: &Matrix2<f64>,
    h: &Matrix2<f64>,
    r: &Matrix2<f64>,
) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let s = h * cov * h.transpose() + r;
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    if !s_inv.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    let gain = cov * h.transpose() * s_inv;
    let posterior = symmetrize(&((Matrix2::identity() - gain * h) * cov));
    let min_eig = min_eigenvalue(&posterior);
    if min_eig < -PSD_TOLERANCE || !min_eig.is_finite() {
        return Err(Error::NotPositiveSemiDefinite(min_eig));
    }
    Ok((posterior, gain))
}

/// Extended Kalman correction with an observation taken from `amav`.
pub fn correct(b: &Belief, obs: &RangeBearing, amav: &Pose, r_cov: &Matrix2<f64>) -> Result<Belief> {
    let h = jacobian_h(amav, &b.mean)?;
    let predicted = predict_observation(amav, &b.mean)?;
    let innovation = Vec2::new(
        obs.range - predicted.range,
        wrap_angle(obs.bearing - predicted.bearing),
    );
    let (cov, gain) = covariance_update(&b.cov, &h, r_cov)?;
    Ok(Belief {
        mean: b.mean + gain * innovation,
        cov,
    })
}

/// Trace of the covariance.
pub fn uncertainty(b: &Belief) -> f64 {
    b.cov[(0, 0)] + b.cov[(1, 1)]
}

/// Indices ordered from most to least uncertain; ties keep index order.
pub fn rank_by_uncertainty(beliefs: &[Belief]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..beliefs.len()).collect();
    order.sort_by(|&a, &b| {
        uncertainty(&beliefs[b])
            .partial_cmp(&uncertainty(&beliefs[a]))
            .unwrap_or(Ordering::Equal)
    });
    order
}
