//! Ground-truth kinematics for both vehicle classes.
//!
//! AMAVs follow a noise-free unicycle model driven by discrete motion
//! primitives. BMAVs follow a velocity-commanded point model whose realized
//! velocity carries Gaussian noise proportional to the commanded speed; the
//! estimator only ever sees the commanded velocity, so that noise is what
//! makes dead reckoning drift.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    if wrapped > PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

/// Planar operating area `[0, length] x [0, width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub length: f64,
    pub width: f64,
}

impl Arena {
    pub fn new(length: f64, width: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::config("arena.length", "must be positive"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::config("arena.width", "must be positive"));
        }
        Ok(Self { length, width })
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        (0.0..=self.length).contains(&p.x) && (0.0..=self.width).contains(&p.y)
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.length / 2.0, self.width / 2.0)
    }

    pub fn clamp(&self, p: &Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(0.0, self.length), p.y.clamp(0.0, self.width))
    }
}

/// AMAV pose; `phi` is the heading and is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x1: f64,
    pub x2: f64,
    pub phi: f64,
}

impl Pose {
    pub fn new(x1: f64, x2: f64, phi: f64) -> Self {
        Self {
            x1,
            x2,
            phi: wrap_angle(phi),
        }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x1, self.x2)
    }
}

/// Translational and rotational velocity pair applied for one timestep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub u: f64,
    pub omega: f64,
}

impl MotionPrimitive {
    pub const HOVER: MotionPrimitive = MotionPrimitive { u: 0.0, omega: 0.0 };

    pub fn new(u: f64, omega: f64) -> Self {
        Self { u, omega }
    }

    pub fn is_hover(&self) -> bool {
        self.u == 0.0 && self.omega == 0.0
    }
}

/// Advances an AMAV one step: translate along the current heading, then turn.
pub fn step_amav(pose: &Pose, cmd: &MotionPrimitive, dt: f64) -> Pose {
    let (sin, cos) = pose.phi.sin_cos();
    Pose {
        x1: pose.x1 + cmd.u * cos * dt,
        x2: pose.x2 + cmd.u * sin * dt,
        phi: wrap_angle(pose.phi + cmd.omega * dt),
    }
}

/// Zero-mean Gaussian noise whose standard deviation is a fraction of the
/// noiseless value, bounded below by `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_fraction: f64,
    pub floor: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        sigma_fraction: 0.0,
        floor: 0.0,
    };

    pub fn new(sigma_fraction: f64, floor: f64) -> Result<Self> {
        if !(sigma_fraction.is_finite() && sigma_fraction >= 0.0) {
            return Err(Error::config("sigma_fraction", "must be non-negative"));
        }
        if !(floor.is_finite() && floor >= 0.0) {
            return Err(Error::config("floor", "must be non-negative"));
        }
        Ok(Self {
            sigma_fraction,
            floor,
        })
    }

    pub fn proportional(sigma_fraction: f64) -> Self {
        Self {
            sigma_fraction,
            floor: 0.0,
        }
    }

    pub fn sigma(&self, value: f64) -> f64 {
        (self.sigma_fraction * value.abs()).max(self.floor)
    }
}

/// Draws one sample of `Normal(0, noise.sigma(value))`.
///
/// A standard normal is always consumed, even when the deviation is zero, so
/// the stream position does not depend on the value being perturbed.
pub fn sample_noise<R: Rng + ?Sized>(value: f64, noise: &NoiseModel, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    noise.sigma(value) * z
}

/// Per-axis motion noise for a commanded velocity.
pub fn sample_motion_noise<R: Rng + ?Sized>(v_cmd: &Vec2, noise: &NoiseModel, rng: &mut R) -> Vec2 {
    let n1 = sample_noise(v_cmd.x, noise, rng);
    let n2 = sample_noise(v_cmd.y, noise, rng);
    Vec2::new(n1, n2)
}

/// True BMAV position together with the velocity command it is executing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmavTruth {
    pub y: Vec2,
    pub v_cmd: Vec2,
}

/// Outcome of one BMAV step: the new truth and the velocity the vehicle
/// reports to the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmavStep {
    pub truth: BmavTruth,
    pub v_meas: Vec2,
}

impl BmavStep {
    /// Clamps the position into the arena. Any axis that hit a wall has its
    /// command and its reported velocity zeroed.
    pub fn confine(mut self, arena: &Arena) -> Self {
        let y = self.truth.y;
        if y.x < 0.0 || y.x > arena.length {
            self.truth.v_cmd.x = 0.0;
            self.v_meas.x = 0.0;
        }
        if y.y < 0.0 || y.y > arena.width {
            self.truth.v_cmd.y = 0.0;
            self.v_meas.y = 0.0;
        }
        self.truth.y = arena.clamp(&y);
        self
    }
}

/// Moves a BMAV by `dt * (v_cmd + noise)` using an already drawn noise.
pub fn advance_bmav(state: &BmavTruth, noise: &Vec2, dt: f64) -> BmavStep {
    BmavStep {
        truth: BmavTruth {
            y: state.y + (state.v_cmd + noise) * dt,
            v_cmd: state.v_cmd,
        },
        v_meas: state.v_cmd,
    }
}

/// Moves a BMAV one step with a fresh per-axis noise draw.
pub fn step_bmav_truth<R: Rng + ?Sized>(
    state: &BmavTruth,
    noise: &NoiseModel,
    dt: f64,
    rng: &mut R,
) -> BmavStep {
    let n = sample_motion_noise(&state.v_cmd, noise, rng);
    advance_bmav(state, &n, dt)
}
