//! Closed-loop, single-threaded, seeded simulation.
//!
//! Every random quantity comes from its own ChaCha stream keyed by the seed,
//! a purpose and an entity index. The layout and the BMAV velocity noise are
//! therefore identical across strategies for one seed, which makes paired
//! comparisons meaningful.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::estimation::{correct, predict, process_noise, Belief};
use crate::grouping::{assign_groups, GroupAssignment};
use crate::navigation::plan_bmav_cmd;
use crate::scheduling::{plan_all, PlannerConfig};
use crate::sensing::{observe, predict_observation};
use crate::sim::config::{MotionNoiseMode, ScenarioConfig, Strategy, TaskMode};
use crate::sim::trace::{EpochRecord, ObservationEvent, SimTrace, StepRecord};
use crate::world::{advance_bmav, sample_motion_noise, step_amav, BmavTruth, MotionPrimitive, Pose, Vec2};

const LAYOUT_STREAM: u64 = 1;
const MOTION_STREAM: u64 = 2;
const SENSOR_STREAM: u64 = 3;
const POSE_STREAM: u64 = 4;
const PATROL_STREAM: u64 = 5;

fn stream(seed: u64, kind: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 32) | index as u64);
    rng
}

fn streams(seed: u64, kind: u64, count: usize) -> Vec<ChaCha8Rng> {
    (0..count).map(|i| stream(seed, kind, i)).collect()
}

fn normal2<R: Rng>(rng: &mut R) -> Vec2 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Vec2::new(a, b)
}

/// Point where the ray from `from` through `through` meets the boundary of
/// the rectangle `[lo, hi]`. `from` must lie inside it.
fn ray_to_box(from: Vec2, through: Vec2, lo: Vec2, hi: Vec2) -> Vec2 {
    let mut dir = through - from;
    if dir.norm() < 1e-12 {
        dir = Vec2::new(1.0, 0.0);
    }
    let mut s = f64::INFINITY;
    for k in 0..2 {
        if dir[k] > 0.0 {
            s = s.min((hi[k] - from[k]) / dir[k]);
        } else if dir[k] < 0.0 {
            s = s.min((lo[k] - from[k]) / dir[k]);
        }
    }
    let p = from + dir * s;
    Vec2::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y))
}

/// Attempts per BMAV before a crowded destination is accepted anyway.
const LAYOUT_TRIES: usize = 1000;

/// BMAV starts and destinations for a scenario.
///
/// Generated starts are uniform in the central launch box and generated
/// destinations lie on the inset boundary, radially outward from the arena
/// center. When both are generated, a start is redrawn while its destination
/// falls within two repulsion radii of an earlier one, so no BMAV's goal sits
/// inside another parked BMAV's repulsion zone.
pub fn layout(cfg: &ScenarioConfig) -> (Vec<Vec2>, Vec<Vec2>) {
    let (l, w) = (cfg.arena.length, cfg.arena.width);
    let center = Vec2::new(l / 2.0, w / 2.0);
    let m = cfg.bmav.dest_margin;
    let (lo, hi) = (Vec2::new(m, m), Vec2::new(l - m, w - m));
    let to_edge = |s: &Vec2| ray_to_box(center, *s, lo, hi);
    let given = |v: &Vec<[f64; 2]>| v.iter().map(|p| Vec2::new(p[0], p[1])).collect::<Vec<_>>();

    let starts = match &cfg.bmav.starts {
        Some(s) => given(s),
        None => {
            let mut rng = stream(cfg.seed, LAYOUT_STREAM, 0);
            let f = cfg.bmav.launch_fraction;
            let (lo_x, hi_x) = (l * (1.0 - f) / 2.0, l * (1.0 + f) / 2.0);
            let (lo_y, hi_y) = (w * (1.0 - f) / 2.0, w * (1.0 + f) / 2.0);
            let spacing = 2.0 * cfg.navigation.rep_radius;
            let spaced = cfg.bmav.destinations.is_none();
            let mut starts: Vec<Vec2> = Vec::with_capacity(cfg.bmav.count);
            let mut dests: Vec<Vec2> = Vec::with_capacity(cfg.bmav.count);
            for _ in 0..cfg.bmav.count {
                let mut draw = || Vec2::new(rng.random_range(lo_x..=hi_x), rng.random_range(lo_y..=hi_y));
                let mut s = draw();
                if spaced {
                    for _ in 1..LAYOUT_TRIES {
                        let d = to_edge(&s);
                        if dests.iter().all(|e| (e - d).norm() >= spacing) {
                            break;
                        }
                        s = draw();
                    }
                }
                dests.push(to_edge(&s));
                starts.push(s);
            }
            starts
        }
    };
    let destinations = match &cfg.bmav.destinations {
        Some(d) => given(d),
        None => starts.iter().map(to_edge).collect(),
    };
    (starts, destinations)
}

struct PoseSensor {
    sigma: f64,
    rngs: Vec<ChaCha8Rng>,
}

impl PoseSensor {
    fn read(&mut self, poses: &[Pose]) -> Vec<Pose> {
        if self.sigma == 0.0 {
            return poses.to_vec();
        }
        poses
            .iter()
            .zip(&mut self.rngs)
            .map(|(p, rng)| {
                let e = normal2(rng) * self.sigma;
                let ephi: f64 = rng.sample(StandardNormal);
                Pose::new(p.x1 + e.x, p.x2 + e.y, p.phi + ephi * self.sigma)
            })
            .collect()
    }
}

fn positions(poses: &[Pose]) -> Vec<Vec2> {
    poses.iter().map(Pose::position).collect()
}

fn owners(assignment: &Option<GroupAssignment>, n: usize) -> Vec<Option<usize>> {
    match assignment {
        Some(a) => a.owner.iter().map(|&j| Some(j)).collect(),
        None => vec![None; n],
    }
}

/// Runs the strategy named in the config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimTrace> {
    run_strategy(cfg, cfg.strategy)
}

pub fn run_baseline_station(cfg: &ScenarioConfig) -> Result<SimTrace> {
    run_strategy(cfg, Strategy::Station)
}

pub fn run_baseline_greedy(cfg: &ScenarioConfig) -> Result<SimTrace> {
    run_strategy(cfg, Strategy::Greedy)
}

pub fn run_baseline_dead_reckoning(cfg: &ScenarioConfig) -> Result<SimTrace> {
    run_strategy(cfg, Strategy::DeadReckoning)
}

/// Runs `cfg` with `strategy` regardless of `cfg.strategy`.
pub fn run_strategy(cfg: &ScenarioConfig, strategy: Strategy) -> Result<SimTrace> {
    cfg.validate()?;
    let arena = cfg.arena()?;
    let fov = cfg.fov_params()?;
    let sensor = cfg.sensor_noise();
    let motion = cfg.motion_noise();
    let dt = cfg.dt;
    let delta = cfg.delta;
    let nav = cfg.navigation;
    let planner = cfg.planner_config()?;
    let greedy = PlannerConfig {
        delta: 1,
        ..planner.clone()
    };

    let (starts, mut dests) = layout(cfg);
    let first_dests = dests.clone();
    let n = starts.len();
    let m = cfg.amav.count;

    let mut poses = cfg.amav_starts();
    let mut truth: Vec<BmavTruth> = starts
        .iter()
        .map(|&y| BmavTruth { y, v_cmd: Vec2::zeros() })
        .collect();
    let mut beliefs: Vec<Belief> = starts
        .iter()
        .map(|&y| Belief::at_launch(y, cfg.bmav.initial_variance))
        .collect();

    let mut motion_rng = streams(cfg.seed, MOTION_STREAM, n);
    let mut sensor_rng = streams(cfg.seed, SENSOR_STREAM, n);
    let mut patrol_rng = streams(cfg.seed, PATROL_STREAM, n);
    let mut pose_sensor = PoseSensor {
        sigma: cfg.amav.pose_noise,
        rngs: streams(cfg.seed, POSE_STREAM, m),
    };

    let mut believed = pose_sensor.read(&poses);
    let initial = StepRecord {
        t: 0,
        amav_poses: poses.clone(),
        amav_believed: believed.clone(),
        amav_cmds: vec![MotionPrimitive::HOVER; m],
        bmav_truth: starts.clone(),
        beliefs: beliefs.clone(),
        observations: Vec::new(),
        owner: vec![None; n],
    };

    let mut steps = Vec::with_capacity(cfg.horizon);
    let mut epochs = Vec::with_capacity(cfg.horizon.div_ceil(delta));
    let mut assignment: Option<GroupAssignment> = None;
    let mut queue: Vec<Vec<MotionPrimitive>> = vec![Vec::new(); m];
    let mut interval_z = vec![Vec2::zeros(); n];

    for t in 0..cfg.horizon {
        if t % delta == 0 {
            if cfg.bmav.task == TaskMode::Patrol {
                let m_ = cfg.bmav.dest_margin;
                for i in 0..n {
                    if (dests[i] - beliefs[i].mean).norm() < nav.arrive_radius {
                        let rng = &mut patrol_rng[i];
                        let x = rng.random_range(m_..=arena.length - m_);
                        let y = rng.random_range(m_..=arena.width - m_);
                        dests[i] = Vec2::new(x, y);
                    }
                }
            }
            let means: Vec<Vec2> = beliefs.iter().map(|b| b.mean).collect();
            assignment = if strategy.observes() {
                Some(assign_groups(&positions(&believed), &means)?.with_epoch(t, delta))
            } else {
                None
            };
            let mut neighbors = Vec::with_capacity(n.saturating_sub(1));
            let cmds: Vec<Vec2> = (0..n)
                .map(|i| {
                    neighbors.clear();
                    neighbors.extend(means.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, p)| *p));
                    plan_bmav_cmd(&means[i], &dests[i], &neighbors, &arena, &nav)
                })
                .collect();
            for (tr, c) in truth.iter_mut().zip(&cmds) {
                tr.v_cmd = *c;
            }
            if cfg.noise.motion_mode == MotionNoiseMode::PerInterval {
                for (z, rng) in interval_z.iter_mut().zip(&mut motion_rng) {
                    *z = normal2(rng);
                }
            }
            let plans = match (&assignment, strategy) {
                (Some(a), Strategy::Transformloc) => plan_all(a, &believed, &beliefs, &cmds, &planner)?,
                _ => BTreeMap::new(),
            };
            for (j, q) in queue.iter_mut().enumerate() {
                *q = plans.get(&j).map(|p| p.commands.clone()).unwrap_or_default();
            }
            epochs.push(EpochRecord {
                t,
                assignment: assignment.clone(),
                bmav_cmds: cmds,
                plans,
                destinations: dests.clone(),
            });
        }

        let amav_cmds: Vec<MotionPrimitive> = match (&assignment, strategy) {
            (Some(_), Strategy::Transformloc) => queue
                .iter()
                .map(|q| q.get(t % delta).copied().unwrap_or(MotionPrimitive::HOVER))
                .collect(),
            (Some(a), Strategy::Greedy) => {
                let cmds: Vec<Vec2> = truth.iter().map(|tr| tr.v_cmd).collect();
                let plans = plan_all(a, &believed, &beliefs, &cmds, &greedy)?;
                (0..m).map(|j| plans[&j].commands[0]).collect()
            }
            _ => vec![MotionPrimitive::HOVER; m],
        };
        for (p, c) in poses.iter_mut().zip(&amav_cmds) {
            *p = step_amav(p, c, dt);
        }
        believed = pose_sensor.read(&poses);

        for i in 0..n {
            let v = truth[i].v_cmd;
            let noise = match cfg.noise.motion_mode {
                MotionNoiseMode::PerStep => sample_motion_noise(&v, &motion, &mut motion_rng[i]),
                MotionNoiseMode::PerInterval => {
                    let z = interval_z[i];
                    Vec2::new(motion.sigma(v.x) * z.x, motion.sigma(v.y) * z.y)
                }
            };
            let step = advance_bmav(&truth[i], &noise, dt).confine(&arena);
            truth[i] = step.truth;
            let q = process_noise(&step.v_meas, &motion);
            beliefs[i] = predict(&beliefs[i], &step.v_meas, &q, dt);
        }

        let mut observations = Vec::new();
        if strategy.observes() {
            for j in 0..m {
                for i in 0..n {
                    let Some(z) = observe(&poses[j], &truth[i].y, &fov, &sensor, &mut sensor_rng[i]) else {
                        continue;
                    };
                    let Ok(expected) = predict_observation(&believed[j], &beliefs[i].mean) else {
                        continue;
                    };
                    let r = sensor.covariance(&expected);
                    if let Ok(post) = correct(&beliefs[i], &z, &believed[j], &r) {
                        observations.push(ObservationEvent {
                            amav: j,
                            bmav: i,
                            z,
                            trace_prior: beliefs[i].trace(),
                            trace_post: post.trace(),
                        });
                        beliefs[i] = post;
                    }
                }
            }
        }

        steps.push(StepRecord {
            t: t + 1,
            amav_poses: poses.clone(),
            amav_believed: believed.clone(),
            amav_cmds,
            bmav_truth: truth.iter().map(|tr| tr.y).collect(),
            beliefs: beliefs.clone(),
            observations,
            owner: owners(&assignment, n),
        });
    }

    Ok(SimTrace {
        strategy,
        seed: cfg.seed,
        destinations: first_dests,
        initial,
        steps,
        epochs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits_inset_boundary() {
        let lo = Vec2::new(0.5, 0.5);
        let hi = Vec2::new(11.5, 11.5);
        let c = Vec2::new(6.0, 6.0);
        assert_eq!(ray_to_box(c, Vec2::new(7.0, 6.0), lo, hi), Vec2::new(11.5, 6.0));
        assert_eq!(ray_to_box(c, Vec2::new(6.0, 5.0), lo, hi), Vec2::new(6.0, 0.5));
        let diag = ray_to_box(c, Vec2::new(7.0, 7.0), lo, hi);
        assert!((diag - Vec2::new(11.5, 11.5)).norm() < 1e-12);
        assert_eq!(ray_to_box(c, c, lo, hi), Vec2::new(11.5, 6.0));
    }

    #[test]
    fn layout_is_seeded_and_inside() {
        let cfg = ScenarioConfig::default();
        let (s1, d1) = layout(&cfg);
        let (s2, d2) = layout(&cfg);
        assert_eq!((s1.clone(), d1.clone()), (s2, d2));
        let arena = cfg.arena().unwrap();
        for (s, d) in s1.iter().zip(&d1) {
            assert!((3.0..=9.0).contains(&s.x) && (3.0..=9.0).contains(&s.y));
            assert!(arena.contains(d));
            let on_edge = [d.x - 0.5, 11.5 - d.x, d.y - 0.5, 11.5 - d.y].iter().any(|e| e.abs() < 1e-9);
            assert!(on_edge, "{d:?}");
        }
        for (i, a) in d1.iter().enumerate() {
            for b in &d1[..i] {
                assert!((a - b).norm() >= 2.0 * cfg.navigation.rep_radius);
            }
        }
        let other = ScenarioConfig { seed: 1, ..cfg };
        assert_ne!(layout(&other).0, s1);
    }

    #[test]
    fn streams_are_independent() {
        let mut a = stream(7, MOTION_STREAM, 0);
        let mut b = stream(7, MOTION_STREAM, 1);
        let mut c = stream(7, SENSOR_STREAM, 0);
        let (x, y, z): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert!(x != y && x != z && y != z);
    }
}
