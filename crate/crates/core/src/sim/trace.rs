//! Everything a run records.

use std::collections::BTreeMap;

use crate::estimation::Belief;
use crate::grouping::GroupAssignment;
use crate::scheduling::Plan;
use crate::sensing::RangeBearing;
use crate::sim::config::Strategy;
use crate::world::{MotionPrimitive, Pose, Vec2};

/// One applied correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationEvent {
    pub amav: usize,
    pub bmav: usize,
    pub z: RangeBearing,
    pub trace_prior: f64,
    pub trace_post: f64,
}

/// World and filter state at the end of step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub amav_poses: Vec<Pose>,
    /// Poses the AMAVs believe they are at (equal to the truth without pose noise).
    pub amav_believed: Vec<Pose>,
    /// Primitive each AMAV executed during this step.
    pub amav_cmds: Vec<MotionPrimitive>,
    pub bmav_truth: Vec<Vec2>,
    pub beliefs: Vec<Belief>,
    pub observations: Vec<ObservationEvent>,
    /// Voronoi owner of each BMAV for the interval containing this step.
    pub owner: Vec<Option<usize>>,
}

/// Decisions taken at the start of a command interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub t: usize,
    pub assignment: Option<GroupAssignment>,
    pub bmav_cmds: Vec<Vec2>,
    /// Only the depth-`delta` planner issues interval-long plans.
    pub plans: BTreeMap<usize, Plan>,
    pub destinations: Vec<Vec2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub strategy: Strategy,
    pub seed: u64,
    /// First destination of each BMAV, the reference for success rates.
    pub destinations: Vec<Vec2>,
    /// State at launch (`t = 0`), before any step.
    pub initial: StepRecord,
    /// Exactly `horizon` records, `t = 1..=horizon`.
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
}

impl SimTrace {
    pub fn observation_count(&self) -> usize {
        self.steps.iter().map(|s| s.observations.len()).sum()
    }

    /// Launch record followed by every step record.
    pub fn records(&self) -> impl Iterator<Item = &StepRecord> {
        std::iter::once(&self.initial).chain(&self.steps)
    }
}
