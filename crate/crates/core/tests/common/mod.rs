//! Independent reference implementations shared by the integration tests and
//! the acceptance harness. Only plain `f64` arithmetic is used here.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use transformloc_core::estimation::{process_noise, Belief};
use transformloc_core::scheduling::{rollout_step, CostMode, PlannerConfig};
use transformloc_core::world::{step_amav, MotionPrimitive, Pose, Vec2};

pub type M2 = [[f64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn transpose(a: &M2) -> M2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn inverse(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// `P - P H^T (H P H^T + R)^-1 H P` with `H` and `R` built from scratch for a
/// range/bearing sensor at `amav` looking at `mean`.
pub fn reference_covariance_update(p: &M2, mean: (f64, f64), amav: (f64, f64, f64), sigma_r: f64, sigma_a: f64) -> M2 {
    let (dx, dy) = (mean.0 - amav.0, mean.1 - amav.1);
    let r2 = dx * dx + dy * dy;
    let r = r2.sqrt();
    let h = [[dx / r, dy / r], [-dy / r2, dx / r2]];
    let ht = transpose(&h);
    let mut s = mul(&mul(&h, p), &ht);
    s[0][0] += sigma_r * sigma_r;
    s[1][1] += sigma_a * sigma_a;
    let gain = mul(&mul(p, &ht), &inverse(&s));
    let reduction = mul(&mul(&gain, &h), p);
    [
        [p[0][0] - reduction[0][0], p[0][1] - reduction[0][1]],
        [p[1][0] - reduction[1][0], p[1][1] - reduction[1][1]],
    ]
}

/// Lowest-cost command sequence by exhaustive enumeration in lexicographic
/// primitive-index order, scored with the library's one-step rollout. The
/// first sequence reaching the minimum wins.
pub fn brute_force_plan(
    start: &Pose,
    group: &[Belief],
    cmds: &[Vec2],
    cfg: &PlannerConfig,
) -> (Vec<MotionPrimitive>, f64) {
    let b = cfg.primitives.len();
    let q: Vec<_> = cmds.iter().map(|v| process_noise(v, &cfg.motion_noise)).collect();
    let total = b.pow(cfg.delta as u32);
    let mut best: Option<(Vec<MotionPrimitive>, f64)> = None;
    for code in 0..total {
        let mut digits = vec![0; cfg.delta];
        let mut rest = code;
        for d in digits.iter_mut().rev() {
            *d = rest % b;
            rest /= b;
        }
        let seq: Vec<MotionPrimitive> = digits.iter().map(|&k| cfg.primitives[k]).collect();
        let mut pose = *start;
        let mut beliefs = group.to_vec();
        let mut cost = 0.0;
        for c in &seq {
            pose = step_amav(&pose, c, cfg.dt);
            beliefs = rollout_step(&beliefs, cmds, &q, &pose, cfg);
            let level: f64 = beliefs.iter().map(|x| x.cov[(0, 0)] + x.cov[(1, 1)]).sum();
            cost = match cfg.cost_mode {
                CostMode::Leaf => level,
                CostMode::Accumulated => cost + level,
            };
        }
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((seq, cost));
        }
    }
    best.expect("at least one sequence")
}

/// One case for the filter-versus-grid comparison.
#[derive(Debug, Clone, Copy)]
pub struct BayesCase {
    pub prior_mean: (f64, f64),
    pub prior_cov: M2,
    pub z_range: f64,
    pub z_bearing: f64,
}

/// Range sensor noise used by the grid comparison: 10 % of range, at least 1 cm.
pub fn oracle_sigma_r(range: f64) -> f64 {
    (0.1 * range).max(0.01)
}

/// Bearing sensor noise used by the grid comparison: 5 % of bearing, at least 0.02 rad.
pub fn oracle_sigma_a(bearing: f64) -> f64 {
    (0.05 * bearing.abs()).max(0.02)
}

/// Random single-observation cases from an AMAV at the origin facing +x.
/// The truth is drawn from the prior and observed through the noise model.
pub fn bayes_cases(seed: u64, count: usize) -> Vec<BayesCase> {
    bayes_cases_with_spread(seed, count, 0.05, 0.15)
}

/// As [`bayes_cases`] with per-axis prior standard deviations drawn from
/// `[lo, hi)`.
pub fn bayes_cases_with_spread(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<BayesCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mx = rng.random_range(0.7..1.3);
            let my = rng.random_range(-0.4..0.4);
            let sx: f64 = rng.random_range(lo..hi);
            let sy: f64 = rng.random_range(lo..hi);
            let rho: f64 = rng.random_range(-0.5..0.5);
            let cov = [[sx * sx, rho * sx * sy], [rho * sx * sy, sy * sy]];
            let (e1, e2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            let tx = mx + sx * e1;
            let ty = my + sy * (rho * e1 + (1.0 - rho * rho).sqrt() * e2);
            let r = (tx * tx + ty * ty).sqrt();
            let a = ty.atan2(tx);
            let (n1, n2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            BayesCase {
                prior_mean: (mx, my),
                prior_cov: cov,
                z_range: r + oracle_sigma_r(r) * n1,
                z_bearing: a + oracle_sigma_a(a) * n2,
            }
        })
        .collect()
}

/// Posterior mean and covariance by brute-force Bayes on a grid over
/// `[0, 2] x [-1, 1]` with the given pitch. The likelihood uses the noise of
/// each cell's own noiseless reading.
pub fn grid_posterior(case: &BayesCase, pitch: f64) -> ((f64, f64), M2) {
    let n = (2.0 / pitch).round() as usize;
    let inv = inverse(&case.prior_cov);
    let (mut w_sum, mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for ix in 0..n {
        let x = (ix as f64 + 0.5) * pitch;
        for iy in 0..n {
            let y = -1.0 + (iy as f64 + 0.5) * pitch;
            let (dx, dy) = (x - case.prior_mean.0, y - case.prior_mean.1);
            let prior = -0.5 * (inv[0][0] * dx * dx + 2.0 * inv[0][1] * dx * dy + inv[1][1] * dy * dy);
            let r = (x * x + y * y).sqrt();
            let a = y.atan2(x);
            let (sr, sa) = (oracle_sigma_r(r), oracle_sigma_a(a));
            let er = (case.z_range - r) / sr;
            let mut ea = case.z_bearing - a;
            ea = (ea + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
            let ea = ea / sa;
            let log_w = prior - 0.5 * (er * er + ea * ea) - (sr * sa).ln();
            let w = log_w.exp();
            w_sum += w;
            sx += w * x;
            sy += w * y;
            sxx += w * x * x;
            sxy += w * x * y;
            syy += w * y * y;
        }
    }
    let (mx, my) = (sx / w_sum, sy / w_sum);
    let cov = [
        [sxx / w_sum - mx * mx, sxy / w_sum - mx * my],
        [sxy / w_sum - mx * my, syy / w_sum - my * my],
    ];
    ((mx, my), cov)
}
