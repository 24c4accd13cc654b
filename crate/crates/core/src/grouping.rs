//! Proximity grouping of BMAVs around AMAVs.
//!
//! Each BMAV belongs to the Voronoi cell of its nearest AMAV. Membership is
//! computed directly by nearest-neighbour search; no cell polygons are built.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::world::Vec2;

/// BMAV groups served by each AMAV during one command interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupAssignment {
    /// `groups[j]` is the set of BMAVs AMAV `j` schedules for.
    pub groups: Vec<BTreeSet<usize>>,
    /// Voronoi owner of each BMAV (ignores the empty-cell fallback).
    pub owner: Vec<usize>,
    /// AMAVs whose own cell was empty and therefore serve every BMAV.
    pub fallback: Vec<bool>,
    pub epoch_start: usize,
    pub duration: usize,
}

impl GroupAssignment {
    pub fn group(&self, amav: usize) -> impl Iterator<Item = usize> + '_ {
        self.groups[amav].iter().copied()
    }

    pub fn with_epoch(mut self, epoch_start: usize, duration: usize) -> Self {
        self.epoch_start = epoch_start;
        self.duration = duration;
        self
    }
}

/// Index of the AMAV nearest to `point`; the lowest index wins ties.
pub fn region_boundary_check(amav_positions: &[Vec2], point: &Vec2) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, a) in amav_positions.iter().enumerate() {
        let d = (point - a).norm_squared();
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((j, d)),
        }
    }
    best.map(|(j, _)| j)
}

/// Nearest-AMAV grouping. An AMAV whose cell holds no BMAV is given the whole
/// swarm instead.
pub fn assign_groups(amav_positions: &[Vec2], bmav_positions: &[Vec2]) -> Result<GroupAssignment> {
    if amav_positions.is_empty() {
        return Err(Error::NoAmavs);
    }
    let m = amav_positions.len();
    let mut groups = vec![BTreeSet::new(); m];
    let owner: Vec<usize> = bmav_positions
        .iter()
        .map(|p| region_boundary_check(amav_positions, p).expect("non-empty AMAV list"))
        .collect();
    for (i, &j) in owner.iter().enumerate() {
        groups[j].insert(i);
    }
    let fallback: Vec<bool> = groups.iter().map(|g| g.is_empty()).collect();
    for (j, g) in groups.iter_mut().enumerate() {
        if fallback[j] {
            g.extend(0..bmav_positions.len());
        }
    }
    Ok(GroupAssignment {
        groups,
        owner,
        fallback,
        epoch_start: 0,
        duration: 0,
    })
}
