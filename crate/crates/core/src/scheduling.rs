//! Non-myopic AMAV scheduling by search over motion-primitive sequences.
//!
//! Each AMAV expands a tree of depth `delta` from its current pose. Every
//! edge applies one primitive to the AMAV and rolls the group's beliefs
//! forward one step: dead-reckoning prediction with the known BMAV commands,
//! then an expected (zero-innovation) correction for every predicted BMAV
//! mean inside the new field of view. The command sequence leading to the
//! cheapest level-`delta` node is returned.
//!
//! Expansion is breadth-first. Nodes within a level are kept in generation
//! order, which is the lexicographic order of their primitive-index
//! sequences, so the first minimum found is also the tie-break winner.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{covariance_update, predict, process_noise, uncertainty, Belief};
use crate::grouping::GroupAssignment;
use crate::sensing::{fov_contains, jacobian_h, predict_observation, FovParams, SensorNoise};
use crate::world::{step_amav, Arena, MotionPrimitive, NoiseModel, Pose, Vec2};

/// How a node's cost is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Sum of group covariance traces at the node's own level.
    #[default]
    Leaf,
    /// Sum of group covariance traces over every level up to the node.
    Accumulated,
}

/// Everything the planner needs besides the start pose and the group.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub primitives: Vec<MotionPrimitive>,
    pub delta: usize,
    pub fov: FovParams,
    pub sensor: SensorNoise,
    pub motion_noise: NoiseModel,
    pub dt: f64,
    /// Children that leave the arena are discarded.
    pub arena: Option<Arena>,
    /// Keep only this many nodes per level. `None` expands every sequence.
    pub beam_width: Option<usize>,
    pub cost_mode: CostMode,
}

/// One tree node. Beliefs are only retained for the deepest level (see
/// [`SearchTree::leaf_beliefs`]) to keep full expansion affordable.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub pose: Pose,
    pub depth: usize,
    pub incoming_cmd: Option<MotionPrimitive>,
    pub parent: Option<usize>,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    pub nodes: Vec<SearchNode>,
    /// Node indices of the deepest level, in generation order.
    pub leaves: Vec<usize>,
    /// Group beliefs at each leaf, parallel to `leaves`.
    pub leaf_beliefs: Vec<Vec<Belief>>,
}

/// Command sequence for one interval and the cost the planner predicted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub commands: Vec<MotionPrimitive>,
    pub predicted_cost: f64,
}

impl SearchTree {
    /// Backtracks from the cheapest leaf; the first leaf wins ties.
    pub fn best_plan(&self) -> Plan {
        let mut best = self.leaves[0];
        for &leaf in &self.leaves[1..] {
            if self.nodes[leaf].cost < self.nodes[best].cost {
                best = leaf;
            }
        }
        let mut commands = Vec::with_capacity(self.nodes[best].depth);
        let mut at = best;
        while let Some(parent) = self.nodes[at].parent {
            commands.push(self.nodes[at].incoming_cmd.expect("non-root node has a command"));
            at = parent;
        }
        commands.reverse();
        Plan {
            commands,
            predicted_cost: self.nodes[best].cost,
        }
    }
}

/// Covariance-only update assuming the reading will equal its prediction.
pub fn expected_correction(belief: &Belief, amav_pose: &Pose, fov: &FovParams, sensor: &SensorNoise) -> Belief {
    if !fov_contains(amav_pose, fov, &belief.mean) {
        return *belief;
    }
    let (Ok(h), Ok(z)) = (jacobian_h(amav_pose, &belief.mean), predict_observation(amav_pose, &belief.mean)) else {
        return *belief;
    };
    match covariance_update(&belief.cov, &h, &sensor.covariance(&z)) {
        Ok((cov, _)) => Belief { mean: belief.mean, cov },
        Err(_) => *belief,
    }
}

/// Advances a group of beliefs by one planning step seen from `pose`.
pub fn rollout_step(
    beliefs: &[Belief],
    bmav_cmds: &[Vec2],
    noise: &[nalgebra::Matrix2<f64>],
    pose: &Pose,
    cfg: &PlannerConfig,
) -> Vec<Belief> {
    beliefs
        .iter()
        .zip(bmav_cmds)
        .zip(noise)
        .map(|((b, v), q)| expected_correction(&predict(b, v, q, cfg.dt), pose, &cfg.fov, &cfg.sensor))
        .collect()
}

fn group_trace(beliefs: &[Belief]) -> f64 {
    beliefs.iter().map(uncertainty).sum()
}

/// Secondary beam ranking: uncertainty-weighted distance to the group.
fn proximity(pose: &Pose, beliefs: &[Belief]) -> f64 {
    let p = pose.position();
    beliefs.iter().map(|b| uncertainty(b) * (b.mean - p).norm()).sum()
}

struct Candidate {
    node: SearchNode,
    beliefs: Vec<Belief>,
}

/// Expands the full (or beam-limited) search tree.
pub fn build_tree(start: &Pose, group: &[Belief], bmav_cmds: &[Vec2], cfg: &PlannerConfig) -> Result<SearchTree> {
    if cfg.delta == 0 {
        return Err(Error::ZeroHorizon);
    }
    if cfg.primitives.is_empty() {
        return Err(Error::NoPrimitives);
    }
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    assert_eq!(group.len(), bmav_cmds.len(), "one command per group member");

    let noise: Vec<_> = bmav_cmds.iter().map(|v| process_noise(v, &cfg.motion_noise)).collect();
    let mut nodes = vec![SearchNode {
        pose: *start,
        depth: 0,
        incoming_cmd: None,
        parent: None,
        cost: 0.0,
    }];
    let mut frontier: Vec<(usize, Vec<Belief>)> = vec![(0, group.to_vec())];

    for depth in 1..=cfg.delta {
        let mut children: Vec<Candidate> = Vec::with_capacity(frontier.len() * cfg.primitives.len());
        for (parent, beliefs) in &frontier {
            let parent_node = &nodes[*parent];
            let before = children.len();
            let expand = |cmd: &MotionPrimitive, check_bounds: bool, children: &mut Vec<Candidate>| {
                let pose = step_amav(&parent_node.pose, cmd, cfg.dt);
                if check_bounds {
                    if let Some(arena) = &cfg.arena {
                        if !arena.contains(&pose.position()) {
                            return;
                        }
                    }
                }
                let next = rollout_step(beliefs, bmav_cmds, &noise, &pose, cfg);
                let level = group_trace(&next);
                let cost = match cfg.cost_mode {
                    CostMode::Leaf => level,
                    CostMode::Accumulated => parent_node.cost + level,
                };
                children.push(Candidate {
                    node: SearchNode {
                        pose,
                        depth,
                        incoming_cmd: Some(*cmd),
                        parent: Some(*parent),
                        cost,
                    },
                    beliefs: next,
                });
            };
            for cmd in &cfg.primitives {
                expand(cmd, true, &mut children);
            }
            if children.len() == before {
                expand(&MotionPrimitive::HOVER, false, &mut children);
            }
        }

        if let Some(width) = cfg.beam_width {
            if children.len() > width.max(1) {
                children = prune(children, width.max(1));
            }
        }

        frontier = Vec::with_capacity(children.len());
        for c in children {
            nodes.push(c.node);
            frontier.push((nodes.len() - 1, c.beliefs));
        }
    }

    let (leaves, leaf_beliefs) = frontier.into_iter().unzip();
    Ok(SearchTree {
        nodes,
        leaves,
        leaf_beliefs,
    })
}

/// Keeps the `width` best candidates, returned in generation order.
fn prune(children: Vec<Candidate>, width: usize) -> Vec<Candidate> {
    let keys: Vec<(f64, f64)> = children
        .iter()
        .map(|c| (c.node.cost, proximity(&c.node.pose, &c.beliefs)))
        .collect();
    let mut order: Vec<usize> = (0..children.len()).collect();
    order.sort_by(|&a, &b| {
        keys[a]
            .0
            .total_cmp(&keys[b].0)
            .then(keys[a].1.total_cmp(&keys[b].1))
    });
    let mut keep = vec![false; children.len()];
    for &i in &order[..width] {
        keep[i] = true;
    }
    children
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect()
}

/// Plans one AMAV's next `delta` commands for its group.
pub fn plan_amav(start: &Pose, group: &[Belief], bmav_cmds: &[Vec2], cfg: &PlannerConfig) -> Result<Plan> {
    Ok(build_tree(start, group, bmav_cmds, cfg)?.best_plan())
}

/// Independent per-AMAV plans over each AMAV's own group.
pub fn plan_all(
    assignment: &GroupAssignment,
    amav_poses: &[Pose],
    beliefs: &[Belief],
    bmav_cmds: &[Vec2],
    cfg: &PlannerConfig,
) -> Result<BTreeMap<usize, Plan>> {
    let mut plans = BTreeMap::new();
    for (j, pose) in amav_poses.iter().enumerate() {
        let members: Vec<usize> = assignment.group(j).collect();
        let mut group = Vec::with_capacity(members.len());
        let mut cmds = Vec::with_capacity(members.len());
        for &i in &members {
            let b = beliefs.get(i).ok_or(Error::UnknownBmav {
                index: i,
                count: beliefs.len(),
            })?;
            group.push(*b);
            cmds.push(bmav_cmds[i]);
        }
        plans.insert(j, plan_amav(pose, &group, &cmds, cfg)?);
    }
    Ok(plans)
}
