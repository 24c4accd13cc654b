//! Artificial-potential-field velocity commands for BMAVs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{Arena, Vec2};

/// Potential-field gains and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NavParams {
    /// Attractive gain, 1/s.
    pub k_att: f64,
    /// Repulsive gain, m^3/s.
    pub k_rep: f64,
    /// Repulsion influence cutoff, m.
    pub rep_radius: f64,
    pub v_max: f64,
    pub arrive_radius: f64,
}

impl Default for NavParams {
    fn default() -> Self {
        // k_att = 1 / (delta * dt) for the default 5 s command interval: a held
        // command lands on the goal in one interval instead of overshooting.
        Self {
            k_att: 0.2,
            k_rep: 0.01,
            rep_radius: 0.5,
            v_max: 0.5,
            arrive_radius: 0.05,
        }
    }
}

impl NavParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("navigation.k_att", self.k_att),
            ("navigation.k_rep", self.k_rep),
            ("navigation.rep_radius", self.rep_radius),
            ("navigation.v_max", self.v_max),
            ("navigation.arrive_radius", self.arrive_radius),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        Ok(())
    }
}

/// Closest point on each wall that lies within `rep_radius` of `pos`.
pub fn wall_repulsors(pos: &Vec2, arena: &Arena, rep_radius: f64) -> Vec<Vec2> {
    if !arena.contains(pos) {
        return Vec::new();
    }
    let candidates = [
        (pos.x, Vec2::new(0.0, pos.y)),
        (arena.length - pos.x, Vec2::new(arena.length, pos.y)),
        (pos.y, Vec2::new(pos.x, 0.0)),
        (arena.width - pos.y, Vec2::new(pos.x, arena.width)),
    ];
    candidates
        .into_iter()
        .filter(|(d, _)| *d < rep_radius)
        .map(|(_, p)| p)
        .collect()
}

fn repulsion(pos: &Vec2, obstacle: &Vec2, params: &NavParams) -> Vec2 {
    let away = pos - obstacle;
    let d = away.norm();
    if d <= 1e-9 || d >= params.rep_radius {
        return Vec2::zeros();
    }
    away / d * (params.k_rep * (1.0 / d - 1.0 / params.rep_radius) / (d * d))
}

/// Velocity command toward `dest` from the estimated position, repelled by
/// neighbours and walls and clamped to `v_max`.
pub fn plan_bmav_cmd(
    est_pos: &Vec2,
    dest: &Vec2,
    neighbor_positions: &[Vec2],
    arena: &Arena,
    params: &NavParams,
) -> Vec2 {
    let to_goal = dest - est_pos;
    if to_goal.norm() < params.arrive_radius {
        return Vec2::zeros();
    }
    let mut v = to_goal * params.k_att;
    for n in neighbor_positions {
        v += repulsion(est_pos, n, params);
    }
    for w in wall_repulsors(est_pos, arena, params.rep_radius) {
        v += repulsion(est_pos, &w, params);
    }
    let speed = v.norm();
    if speed > params.v_max {
        v *= params.v_max / speed;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn arena() -> Arena {
        Arena::new(20.0, 20.0).unwrap()
    }

    #[test]
    fn arrival_stops() {
        let p = Vec2::new(3.0, 3.0);
        assert_eq!(plan_bmav_cmd(&p, &p, &[], &arena(), &NavParams::default()), Vec2::zeros());
    }

    #[test]
    fn far_goal_saturates() {
        let cmd = plan_bmav_cmd(&Vec2::new(5.0, 5.0), &Vec2::new(15.0, 5.0), &[], &arena(), &NavParams::default());
        assert_relative_eq!(cmd.norm(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(cmd.y, 0.0);
    }

    #[test]
    fn neighbor_on_path_deflects() {
        let params = NavParams::default();
        let pos = Vec2::new(5.0, 5.0);
        // Slightly off-axis so the push is not purely along the line of travel.
        let neighbor = Vec2::new(5.3, 5.05);
        let cmd = plan_bmav_cmd(&pos, &Vec2::new(7.0, 5.0), &[neighbor], &arena(), &params);
        // Direct field evaluation: attraction (0.4, 0) plus repulsion from the
        // neighbour at d = sqrt(0.0925).
        let away = pos - neighbor;
        let d = away.norm();
        let rep = away / d * (0.01 * (1.0 / d - 2.0) / (d * d));
        let raw = Vec2::new(0.4, 0.0) + rep;
        let expected = if raw.norm() > 0.5 { raw * (0.5 / raw.norm()) } else { raw };
        assert_relative_eq!(cmd, expected, epsilon = 1e-12);
        assert!(cmd.y.abs() > 1e-3);
    }

    #[test]
    fn wall_repulsor_examples() {
        let a = Arena::new(8.0, 8.0).unwrap();
        assert!(wall_repulsors(&Vec2::new(4.0, 4.0), &a, 0.5).is_empty());
        assert_eq!(wall_repulsors(&Vec2::new(0.1, 5.0), &a, 0.5), vec![Vec2::new(0.0, 5.0)]);
        assert_eq!(wall_repulsors(&Vec2::new(0.1, 0.1), &a, 0.5).len(), 2);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = NavParams { v_max: 0.0, ..NavParams::default() };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn command_never_exceeds_v_max(
            px in 0.0f64..20.0, py in 0.0f64..20.0, gx in 0.0f64..20.0, gy in 0.0f64..20.0,
            nbrs in prop::collection::vec((0.0f64..20.0, 0.0f64..20.0), 0..6),
        ) {
            let nbrs: Vec<Vec2> = nbrs.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
            let params = NavParams::default();
            let cmd = plan_bmav_cmd(&Vec2::new(px, py), &Vec2::new(gx, gy), &nbrs, &arena(), &params);
            prop_assert!(cmd.norm() <= params.v_max + 1e-12);
        }

        #[test]
        fn attraction_is_proportional(dx in -2.4f64..2.4, dy in -2.4f64..2.4) {
            let params = NavParams::default();
            let pos = Vec2::new(10.0, 10.0);
            let goal = pos + Vec2::new(dx, dy);
            let d = Vec2::new(dx, dy).norm();
            prop_assume!(d >= params.arrive_radius && d <= params.v_max / params.k_att);
            let cmd = plan_bmav_cmd(&pos, &goal, &[], &arena(), &params);
            prop_assert!((cmd.norm() - params.k_att * Vec2::new(dx, dy).norm()).abs() < 1e-12);
        }

        #[test]
        fn speed_non_decreasing_with_distance(d1 in 0.0f64..8.0, d2 in 0.0f64..8.0, angle in -3.0f64..3.0) {
            let params = NavParams::default();
            let dir = Vec2::new(angle.cos(), angle.sin());
            let goal = Vec2::new(10.0, 10.0);
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let s_near = plan_bmav_cmd(&(goal - dir * near), &goal, &[], &arena(), &params).norm();
            let s_far = plan_bmav_cmd(&(goal - dir * far), &goal, &[], &arena(), &params).norm();
            prop_assert!(s_near <= s_far + 1e-12);
        }

        #[test]
        fn mirroring_mirrors_command(
            px in 0.0f64..20.0, py in 0.0f64..20.0, gx in 0.0f64..20.0, gy in 0.0f64..20.0,
            nbrs in prop::collection::vec((0.0f64..20.0, 0.0f64..20.0), 0..4),
        ) {
            let a = arena();
            let mirror = |p: Vec2| Vec2::new(a.length - p.x, p.y);
            let nbrs: Vec<Vec2> = nbrs.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
            let mirrored: Vec<Vec2> = nbrs.iter().copied().map(mirror).collect();
            let params = NavParams::default();
            let cmd = plan_bmav_cmd(&Vec2::new(px, py), &Vec2::new(gx, gy), &nbrs, &a, &params);
            let cmd_m = plan_bmav_cmd(&mirror(Vec2::new(px, py)), &mirror(Vec2::new(gx, gy)), &mirrored, &a, &params);
            prop_assert!((cmd_m - Vec2::new(-cmd.x, cmd.y)).norm() < 1e-9 * (1.0 + cmd.norm()));
        }
    }
}
