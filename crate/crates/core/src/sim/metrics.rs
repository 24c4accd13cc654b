//! Run summaries: absolute trajectory error, destination success rates and
//! the accumulated covariance trace.
//!
//! Metrics are computed from a [`TrajectorySet`], which can be built either
//! from an in-memory trace or from a CSV trace file. Both routes feed the same
//! arithmetic in the same order, so the results are bit-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::sim::config::MetricsConfig;
use crate::sim::trace::SimTrace;
use crate::world::Vec2;

/// Per-record, per-BMAV positions and covariance traces. Record 0 is the
/// launch state; records `1..` are the simulated steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectorySet {
    pub truth: Vec<Vec<Vec2>>,
    pub est: Vec<Vec<Vec2>>,
    pub trace: Vec<Vec<f64>>,
    pub destinations: Vec<Vec2>,
}

impl TrajectorySet {
    pub fn from_trace(trace: &SimTrace) -> Self {
        let mut set = TrajectorySet {
            destinations: trace.destinations.clone(),
            ..Default::default()
        };
        for rec in trace.records() {
            set.truth.push(rec.bmav_truth.clone());
            set.est.push(rec.beliefs.iter().map(|b| b.mean).collect());
            set.trace.push(rec.beliefs.iter().map(|b| b.cov[(0, 0)] + b.cov[(1, 1)]).collect());
        }
        set
    }

    pub fn bmav_count(&self) -> usize {
        self.destinations.len()
    }

    /// `ate[i][t - 1]` for steps `t = 1..=T`.
    pub fn ate_series(&self) -> Vec<Vec<f64>> {
        (0..self.bmav_count())
            .map(|i| {
                self.truth[1..]
                    .iter()
                    .zip(&self.est[1..])
                    .map(|(y, e)| (y[i] - e[i]).norm())
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub ate_mean: f64,
    pub ate_p50: f64,
    pub ate_p95: f64,
    /// `[value, fraction of ATE samples <= value]` on a fixed grid from 0 to
    /// the first grid point at or above the largest sample.
    pub ate_cdf: Vec<[f64; 2]>,
    /// Keyed `"{eps}_{tau}"`.
    pub success: BTreeMap<String, f64>,
    #[serde(rename = "xi_T")]
    pub xi_t: f64,
    #[serde(skip)]
    pub ate_series: Vec<Vec<f64>>,
}

impl MetricsSummary {
    pub fn success_rate(&self, eps: f64, tau: usize) -> Option<f64> {
        self.success.get(&success_key(eps, tau)).copied()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }
}

pub fn success_key(eps: f64, tau: usize) -> String {
    let mut key = String::new();
    write!(key, "{eps}_{tau}").expect("write to string");
    key
}

/// Linear-interpolation percentile of sorted data, `p` in `[0, 100]`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Fixed-grid empirical CDF of sorted data.
pub fn cdf_grid(sorted: &[f64], step: f64) -> Vec<[f64; 2]> {
    let Some(&max) = sorted.last() else {
        return vec![[0.0, 1.0]];
    };
    let mut points = (max / step).ceil() as usize;
    while (points as f64) * step < max {
        points += 1;
    }
    let n = sorted.len() as f64;
    (0..=points)
        .map(|k| {
            let v = k as f64 * step;
            [v, sorted.partition_point(|&a| a <= v) as f64 / n]
        })
        .collect()
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end - 1) as f64 / 2.0 + 1.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

pub fn compute_metrics(trace: &SimTrace, grid: &MetricsConfig) -> MetricsSummary {
    metrics_from_set(&TrajectorySet::from_trace(trace), grid)
}

pub fn metrics_from_set(set: &TrajectorySet, grid: &MetricsConfig) -> MetricsSummary {
    let ate_series = set.ate_series();
    let mut pooled: Vec<f64> = ate_series.iter().flatten().copied().collect();
    let ate_mean = if pooled.is_empty() {
        0.0
    } else {
        pooled.iter().sum::<f64>() / pooled.len() as f64
    };
    pooled.sort_by(f64::total_cmp);

    let n = set.bmav_count();
    let mut success = BTreeMap::new();
    for &eps in &grid.accuracy {
        for &tau in &grid.time_limits {
            let last = tau.min(set.truth.len() - 1);
            let hits = (0..n)
                .filter(|&i| set.truth[..=last].iter().any(|y| (y[i] - set.destinations[i]).norm() <= eps))
                .count();
            let rate = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
            success.insert(success_key(eps, tau), rate);
        }
    }

    let xi_t = set.trace[1..].iter().map(|row| row.iter().sum::<f64>()).sum();

    MetricsSummary {
        ate_mean,
        ate_p50: percentile(&pooled, 50.0),
        ate_p95: percentile(&pooled, 95.0),
        ate_cdf: cdf_grid(&pooled, grid.cdf_step),
        success,
        xi_t,
        ate_series,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn set(truth: Vec<Vec<Vec2>>, offset: Vec2, dest: Vec<Vec2>) -> TrajectorySet {
        let est = truth.iter().map(|row| row.iter().map(|y| y + offset).collect()).collect();
        let trace = truth.iter().map(|row| vec![0.1; row.len()]).collect();
        TrajectorySet {
            truth,
            est,
            trace,
            destinations: dest,
        }
    }

    fn walk(steps: usize) -> Vec<Vec<Vec2>> {
        (0..=steps)
            .map(|t| vec![Vec2::new(t as f64 * 0.1, 0.0), Vec2::new(5.0, t as f64 * 0.05)])
            .collect()
    }

    #[test]
    fn exact_beliefs_give_zero_error() {
        let s = set(walk(10), Vec2::zeros(), vec![Vec2::zeros(); 2]);
        let m = metrics_from_set(&s, &MetricsConfig::default());
        assert_eq!(m.ate_mean, 0.0);
        assert_eq!(m.ate_cdf, vec![[0.0, 1.0]]);
    }

    #[test]
    fn constant_offset() {
        let s = set(walk(10), Vec2::new(0.6, 0.8), vec![Vec2::zeros(); 2]);
        let m = metrics_from_set(&s, &MetricsConfig::default());
        assert_relative_eq!(m.ate_mean, 1.0, epsilon = 1e-15);
        let below: Vec<_> = m.ate_cdf.iter().filter(|p| p[0] < 0.999).collect();
        assert!(below.iter().all(|p| p[1] == 0.0));
        assert_eq!(m.ate_cdf.last().unwrap()[1], 1.0);
        assert!(m.ate_cdf.last().unwrap()[0] >= 1.0);
    }

    #[test]
    fn start_at_destination_always_succeeds() {
        let truth = vec![vec![Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)]; 11];
        let s = set(truth, Vec2::zeros(), vec![Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)]);
        let m = metrics_from_set(&s, &MetricsConfig::default());
        assert!(m.success.values().all(|&r| r == 1.0));
        assert_eq!(m.success.len(), 30);
    }

    #[test]
    fn success_respects_time_limit() {
        // BMAV 0 reaches x = 7 at t = 70; BMAV 1 never reaches its goal.
        let s = set(walk(100), Vec2::zeros(), vec![Vec2::new(7.0, 0.0), Vec2::new(0.0, 0.0)]);
        let grid = MetricsConfig {
            accuracy: vec![0.05],
            time_limits: vec![60, 100],
            cdf_step: 0.02,
        };
        let m = metrics_from_set(&s, &grid);
        assert_eq!(m.success_rate(0.05, 60), Some(0.0));
        assert_eq!(m.success_rate(0.05, 100), Some(0.5));
    }

    #[test]
    fn xi_sums_step_traces() {
        let s = set(walk(10), Vec2::zeros(), vec![Vec2::zeros(); 2]);
        let m = metrics_from_set(&s, &MetricsConfig::default());
        assert_relative_eq!(m.xi_t, 10.0 * 2.0 * 0.1, epsilon = 1e-12);
    }

    #[test]
    fn percentile_matches_linear_interpolation() {
        let data = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&data, 50.0), 2.5);
        assert_relative_eq!(percentile(&data, 95.0), 3.85, epsilon = 1e-12);
        assert_eq!(percentile(&data, 0.0), 1.0);
        assert_eq!(percentile(&data, 100.0), 4.0);
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        let mut data: Vec<f64> = (0..100).map(|k| ((k * 37) % 101) as f64 / 40.0).collect();
        data.sort_by(f64::total_cmp);
        let cdf = cdf_grid(&data, 0.02);
        assert!(cdf.windows(2).all(|w| w[0][1] <= w[1][1] && w[0][0] < w[1][0]));
        assert_eq!(cdf.last().unwrap()[1], 1.0);
        assert_eq!(cdf[0][0], 0.0);
    }

    #[test]
    fn spearman_cases() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_relative_eq!(spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]), 1.0);
        assert_relative_eq!(spearman(&x, &[5.0, 4.0, 3.0, 2.0, 1.0]), -1.0);
        assert_eq!(spearman(&x, &[1.0; 5]), 0.0);
        // scipy.stats.spearmanr([1,2,3,4,5], [1,3,2,5,4]) = 0.8
        assert_relative_eq!(spearman(&x, &[1.0, 3.0, 2.0, 5.0, 4.0]), 0.8, epsilon = 1e-12);
        // Ties use average ranks: spearmanr([1,2,2,3], [1,2,3,4]) = 0.9486832980505138
        assert_relative_eq!(spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]), 0.9486832980505138, epsilon = 1e-12);
    }

    #[test]
    fn json_key_order_is_fixed() {
        let s = set(walk(3), Vec2::new(0.1, 0.0), vec![Vec2::zeros(); 2]);
        let json = metrics_from_set(&s, &MetricsConfig::default()).to_json();
        let keys = ["\"ate_mean\"", "\"ate_p50\"", "\"ate_p95\"", "\"ate_cdf\"", "\"success\"", "\"xi_T\""];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(!json.contains("ate_series"));
    }
}
