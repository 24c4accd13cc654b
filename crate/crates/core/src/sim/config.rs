//! Scenario description, TOML loading and validation.
//!
//! Every field has a default, so an empty file is a complete scenario. Unknown
//! keys are rejected at every nesting level.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::INITIAL_VARIANCE;
use crate::navigation::NavParams;
use crate::scheduling::{CostMode, PlannerConfig};
use crate::sensing::{FovParams, SensorNoise};
use crate::world::{Arena, MotionPrimitive, NoiseModel, Pose, Vec2};

/// Who moves the AMAVs, if anyone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Grouping plus depth-`delta` tree search.
    #[default]
    Transformloc,
    /// No AMAV observations at all.
    DeadReckoning,
    /// AMAVs hover at their start poses and observe whatever passes by.
    Station,
    /// Grouping plus a one-step search repeated every step.
    Greedy,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Transformloc,
        Strategy::DeadReckoning,
        Strategy::Station,
        Strategy::Greedy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Transformloc => "transformloc",
            Strategy::DeadReckoning => "dead_reckoning",
            Strategy::Station => "station",
            Strategy::Greedy => "greedy",
        }
    }

    /// Whether AMAV observations feed the filters.
    pub fn observes(self) -> bool {
        self != Strategy::DeadReckoning
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::config("strategy", format!("unknown strategy `{s}`")))
    }
}

/// What a BMAV does once launched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    /// Fly to the assigned destination and stay there.
    #[default]
    Destination,
    /// After reaching a destination, draw a new one uniformly in the inset
    /// arena. Success metrics still refer to the first destination.
    Patrol,
}

/// When BMAV velocity noise is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionNoiseMode {
    /// Independent draw every step.
    #[default]
    PerStep,
    /// One standard-normal draw per command interval, scaled by the current
    /// command every step (a constant velocity bias within the interval).
    PerInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArenaConfig {
    pub length: f64,
    pub width: f64,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        Self {
            length: 12.0,
            width: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmavConfig {
    pub count: usize,
    /// `[x, y, heading_rad]` per AMAV. Omitted: a uniform grid facing outward.
    pub starts: Option<Vec<[f64; 3]>>,
    /// Standard deviation of the AMAV self-localization error, per pose
    /// component (m, m, rad). Zero means perfect self-localization.
    pub pose_noise: f64,
}

impl Default for AmavConfig {
    fn default() -> Self {
        Self {
            count: 5,
            starts: None,
            pose_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BmavConfig {
    pub count: usize,
    /// Omitted: uniform in the central `launch_fraction` of the arena.
    pub starts: Option<Vec<[f64; 2]>>,
    /// Omitted: radially outward from the arena centre through each start,
    /// on the boundary inset by `dest_margin`.
    pub destinations: Option<Vec<[f64; 2]>>,
    pub launch_fraction: f64,
    pub dest_margin: f64,
    pub task: TaskMode,
    /// Per-axis variance of the launch belief, m^2.
    pub initial_variance: f64,
}

impl Default for BmavConfig {
    fn default() -> Self {
        Self {
            count: 20,
            starts: None,
            destinations: None,
            launch_fraction: 0.5,
            dest_margin: 0.5,
            task: TaskMode::Destination,
            initial_variance: INITIAL_VARIANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FovConfig {
    pub angle_deg: f64,
    pub range: f64,
}

impl Default for FovConfig {
    fn default() -> Self {
        Self {
            angle_deg: 120.0,
            range: 1.0,
        }
    }
}

/// Noise standard deviations as fractions of the noiseless value, each with
/// an absolute floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub motion: f64,
    pub range: f64,
    pub bearing: f64,
    pub motion_floor: f64,
    pub range_floor: f64,
    pub bearing_floor: f64,
    pub motion_mode: MotionNoiseMode,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            motion: 0.2,
            range: 0.1,
            bearing: 0.05,
            motion_floor: 0.0,
            range_floor: 0.0,
            bearing_floor: 0.0,
            motion_mode: MotionNoiseMode::PerStep,
        }
    }
}

/// The primitive set is the product `speeds x turn_rates`, speed-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrimitiveConfig {
    pub speeds: Vec<f64>,
    pub turn_rates: Vec<f64>,
}

impl Default for PrimitiveConfig {
    fn default() -> Self {
        Self {
            speeds: vec![0.0, 1.0, 3.0],
            turn_rates: vec![0.0, 1.0, -1.0, 3.0, -3.0],
        }
    }
}

impl PrimitiveConfig {
    pub fn primitives(&self) -> Vec<MotionPrimitive> {
        self.speeds
            .iter()
            .flat_map(|&u| self.turn_rates.iter().map(move |&w| MotionPrimitive::new(u, w)))
            .collect()
    }
}

/// Grids for success-rate and CDF reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Destination accuracies, m.
    pub accuracy: Vec<f64>,
    /// Time limits, steps.
    pub time_limits: Vec<usize>,
    /// Spacing of the reported ATE CDF points, m.
    pub cdf_step: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            accuracy: vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            time_limits: vec![60, 100, 140, 180, 200],
            cdf_step: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub strategy: Strategy,
    /// Number of simulated steps.
    pub horizon: usize,
    pub dt: f64,
    /// Command interval and planning depth, steps.
    pub delta: usize,
    pub beam_width: Option<usize>,
    pub cost_mode: CostMode,
    pub arena: ArenaConfig,
    pub amav: AmavConfig,
    pub bmav: BmavConfig,
    pub fov: FovConfig,
    pub noise: NoiseConfig,
    pub primitives: PrimitiveConfig,
    pub navigation: NavParams,
    pub metrics: MetricsConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            strategy: Strategy::Transformloc,
            horizon: 420,
            dt: 1.0,
            delta: 5,
            beam_width: None,
            cost_mode: CostMode::Leaf,
            arena: ArenaConfig::default(),
            amav: AmavConfig::default(),
            bmav: BmavConfig::default(),
            fov: FovConfig::default(),
            noise: NoiseConfig::default(),
            primitives: PrimitiveConfig::default(),
            navigation: NavParams::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, "must be positive"))
    }
}

fn non_negative(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, "must be non-negative"))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, parses and validates a TOML scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ScenarioConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta == 0 {
            return Err(Error::config("delta", "must be at least 1"));
        }
        if self.horizon < self.delta {
            return Err(Error::config("horizon", "must be at least delta"));
        }
        positive("dt", self.dt)?;
        if self.beam_width == Some(0) {
            return Err(Error::config("beam_width", "must be at least 1 when set"));
        }
        let arena = self.arena()?;
        if self.amav.count == 0 {
            return Err(Error::config("amav.count", "must be at least 1"));
        }
        non_negative("amav.pose_noise", self.amav.pose_noise)?;
        if let Some(starts) = &self.amav.starts {
            if starts.len() != self.amav.count {
                return Err(Error::config("amav.starts", "length must equal amav.count"));
            }
            for s in starts {
                if !s.iter().all(|v| v.is_finite()) || !arena.contains(&Vec2::new(s[0], s[1])) {
                    return Err(Error::config("amav.starts", format!("{s:?} is outside the arena")));
                }
            }
        }
        let b = &self.bmav;
        if b.count == 0 {
            return Err(Error::config("bmav.count", "must be at least 1"));
        }
        for (field, points) in [("bmav.starts", &b.starts), ("bmav.destinations", &b.destinations)] {
            if let Some(points) = points {
                if points.len() != b.count {
                    return Err(Error::config(field, "length must equal bmav.count"));
                }
                for p in points {
                    if !p.iter().all(|v| v.is_finite()) || !arena.contains(&Vec2::new(p[0], p[1])) {
                        return Err(Error::config(field, format!("{p:?} is outside the arena")));
                    }
                }
            }
        }
        if !(b.launch_fraction > 0.0 && b.launch_fraction <= 1.0) {
            return Err(Error::config("bmav.launch_fraction", "must lie in (0, 1]"));
        }
        non_negative("bmav.dest_margin", b.dest_margin)?;
        if 2.0 * b.dest_margin >= arena.length.min(arena.width) {
            return Err(Error::config("bmav.dest_margin", "leaves no room inside the arena"));
        }
        positive("bmav.initial_variance", b.initial_variance)?;
        self.fov_params()?;
        let n = &self.noise;
        for (field, v) in [
            ("noise.motion", n.motion),
            ("noise.range", n.range),
            ("noise.bearing", n.bearing),
            ("noise.motion_floor", n.motion_floor),
            ("noise.range_floor", n.range_floor),
            ("noise.bearing_floor", n.bearing_floor),
        ] {
            non_negative(field, v)?;
        }
        let p = &self.primitives;
        if p.speeds.is_empty() || p.turn_rates.is_empty() {
            return Err(Error::config("primitives", "speeds and turn_rates must be non-empty"));
        }
        if !p.speeds.iter().chain(&p.turn_rates).all(|v| v.is_finite()) {
            return Err(Error::config("primitives", "values must be finite"));
        }
        if !self.primitive_set().iter().any(MotionPrimitive::is_hover) {
            return Err(Error::config("primitives", "must include hover (speed 0, turn rate 0)"));
        }
        self.navigation.validate()?;
        let m = &self.metrics;
        if m.accuracy.is_empty() || !m.accuracy.iter().all(|&e| e.is_finite() && e > 0.0) {
            return Err(Error::config("metrics.accuracy", "must be a non-empty list of positive values"));
        }
        if m.time_limits.is_empty() {
            return Err(Error::config("metrics.time_limits", "must be non-empty"));
        }
        positive("metrics.cdf_step", m.cdf_step)?;
        Ok(())
    }

    pub fn arena(&self) -> Result<Arena> {
        Arena::new(self.arena.length, self.arena.width)
    }

    pub fn fov_params(&self) -> Result<FovParams> {
        FovParams::new(self.fov.angle_deg.to_radians(), self.fov.range).map_err(|e| match e {
            Error::Config { field, reason } => Error::Config {
                field: field.replace("fov.angle", "fov.angle_deg"),
                reason,
            },
            other => other,
        })
    }

    pub fn motion_noise(&self) -> NoiseModel {
        NoiseModel {
            sigma_fraction: self.noise.motion,
            floor: self.noise.motion_floor,
        }
    }

    pub fn sensor_noise(&self) -> SensorNoise {
        SensorNoise {
            range: NoiseModel {
                sigma_fraction: self.noise.range,
                floor: self.noise.range_floor,
            },
            bearing: NoiseModel {
                sigma_fraction: self.noise.bearing,
                floor: self.noise.bearing_floor,
            },
        }
    }

    pub fn primitive_set(&self) -> Vec<MotionPrimitive> {
        self.primitives.primitives()
    }

    /// Planner settings for this scenario's TransformLoc AMAVs.
    pub fn planner_config(&self) -> Result<PlannerConfig> {
        Ok(PlannerConfig {
            primitives: self.primitive_set(),
            delta: self.delta,
            fov: self.fov_params()?,
            sensor: self.sensor_noise(),
            motion_noise: self.motion_noise(),
            dt: self.dt,
            arena: Some(self.arena()?),
            beam_width: self.beam_width,
            cost_mode: self.cost_mode,
        })
    }

    /// Configured AMAV starts, or the default grid.
    pub fn amav_starts(&self) -> Vec<Pose> {
        match &self.amav.starts {
            Some(starts) => starts.iter().map(|s| Pose::new(s[0], s[1], s[2])).collect(),
            None => station_grid(self.amav.count, self.arena.length, self.arena.width),
        }
    }
}

/// `count` poses on a near-square grid of cell centres, the last row centred
/// when partial. Each faces away from the arena centre.
pub fn station_grid(count: usize, length: f64, width: f64) -> Vec<Pose> {
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    let (cw, ch) = (length / cols as f64, width / rows as f64);
    let center = Vec2::new(length / 2.0, width / 2.0);
    (0..count)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            let in_row = if r + 1 == rows { count - r * cols } else { cols };
            let offset = (cols - in_row) as f64 / 2.0;
            let p = Vec2::new((c as f64 + 0.5 + offset) * cw, (r as f64 + 0.5) * ch);
            let away = p - center;
            let phi = if away.norm() < 1e-12 { 0.0 } else { away.y.atan2(away.x) };
            Pose::new(p.x, p.y, phi)
        })
        .collect()
}
