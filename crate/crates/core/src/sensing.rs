//! Field-of-view test, range/bearing observation model and its linearization.

use nalgebra::Matrix2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{sample_noise, wrap_angle, NoiseModel, Pose, Vec2};

/// Ranges below this are treated as coincident positions.
pub const MIN_RANGE: f64 = 1e-9;

/// Sensing cone: full aperture `angle` (radians) and maximum range `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovParams {
    pub angle: f64,
    pub r_max: f64,
}

impl FovParams {
    pub fn new(angle: f64, r_max: f64) -> Result<Self> {
        if !(angle > 0.0 && angle <= std::f64::consts::TAU) {
            return Err(Error::config("fov.angle", "must lie in (0, 2π]"));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::config("fov.range", "must be positive"));
        }
        Ok(Self { angle, r_max })
    }
}

impl Default for FovParams {
    fn default() -> Self {
        Self {
            angle: 120f64.to_radians(),
            r_max: 1.0,
        }
    }
}

/// Range and bearing of a target, bearing relative to the observer heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeBearing {
    pub range: f64,
    pub bearing: f64,
}

/// A measurement taken by one AMAV of one BMAV at one timestep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub z: RangeBearing,
    pub amav_id: usize,
    pub bmav_id: usize,
    pub t: usize,
}

/// Range and bearing noise models of the AMAV sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoise {
    pub range: NoiseModel,
    pub bearing: NoiseModel,
}

impl SensorNoise {
    pub const NONE: SensorNoise = SensorNoise {
        range: NoiseModel::NONE,
        bearing: NoiseModel::NONE,
    };

    /// Diagonal measurement covariance for a (noiseless) predicted reading.
    pub fn covariance(&self, z: &RangeBearing) -> Matrix2<f64> {
        let sr = self.range.sigma(z.range);
        let sa = self.bearing.sigma(z.bearing);
        Matrix2::new(sr * sr, 0.0, 0.0, sa * sa)
    }
}

/// Strict-inequality cone test.
pub fn fov_contains(pose: &Pose, fov: &FovParams, point: &Vec2) -> bool {
    let d = point - pose.position();
    let dist = d.norm();
    if !(dist > 0.0 && dist < fov.r_max) {
        return false;
    }
    let rel = wrap_angle(d.y.atan2(d.x) - pose.phi);
    rel.abs() < fov.angle / 2.0
}

/// Noiseless observation of `bmav_pos` from `amav`.
pub fn predict_observation(amav: &Pose, bmav_pos: &Vec2) -> Result<RangeBearing> {
    let d = bmav_pos - amav.position();
    let range = d.norm();
    if range < MIN_RANGE {
        return Err(Error::CoincidentPositions);
    }
    Ok(RangeBearing {
        range,
        bearing: wrap_angle(d.y.atan2(d.x) - amav.phi),
    })
}

/// Noisy observation, or `None` when the BMAV is outside the cone.
pub fn observe<R: Rng + ?Sized>(
    amav: &Pose,
    bmav_truth: &Vec2,
    fov: &FovParams,
    noise: &SensorNoise,
    rng: &mut R,
) -> Option<RangeBearing> {
    if !fov_contains(amav, fov, bmav_truth) {
        return None;
    }
    let clean = predict_observation(amav, bmav_truth).ok()?;
    let nr = sample_noise(clean.range, &noise.range, rng);
    let na = sample_noise(clean.bearing, &noise.bearing, rng);
    Some(RangeBearing {
        range: (clean.range + nr).max(MIN_RANGE),
        bearing: wrap_angle(clean.bearing + na),
    })
}

/// Jacobian of the observation model with respect to the BMAV position.
pub fn jacobian_h(amav: &Pose, bmav_est: &Vec2) -> Result<Matrix2<f64>> {
    let d = bmav_est - amav.position();
    let r = d.norm();
    if r < MIN_RANGE {
        return Err(Error::SingularLinearization(r));
    }
    let z = predict_observation(amav, bmav_est)?;
    let (s, c) = (amav.phi + z.bearing).sin_cos();
    Ok(Matrix2::new(d.x, d.y, -s, c) / r)
}
