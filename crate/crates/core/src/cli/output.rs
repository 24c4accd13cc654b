//! On-disk formats: CSV traces, JSON metrics, run manifests and aggregates.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::config::{ScenarioConfig, Strategy};
use crate::sim::metrics::{MetricsSummary, TrajectorySet};
use crate::sim::trace::SimTrace;
use crate::world::Vec2;

pub const TRACE_HEADER: [&str; 12] = [
    "t",
    "entity_kind",
    "entity_id",
    "true_x",
    "true_y",
    "est_x",
    "est_y",
    "cov_xx",
    "cov_xy",
    "cov_yy",
    "group_id",
    "observed_by",
];

pub fn trace_file_name(strategy: Strategy, seed: u64) -> String {
    format!("trace_{strategy}_seed{seed}.csv")
}

pub fn metrics_file_name(strategy: Strategy, seed: u64) -> String {
    format!("metrics_{strategy}_seed{seed}.json")
}

pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const MANIFEST_FILE: &str = "manifest.json";

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Serializes a trace as CSV, one row per entity per record.
pub fn trace_to_csv(trace: &SimTrace) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = "writing CSV to memory cannot fail";
    w.write_record(TRACE_HEADER).expect(csv_err);
    let f = |x: f64| x.to_string();
    for (i, d) in trace.destinations.iter().enumerate() {
        let row = ["0", "destination", &i.to_string(), &f(d.x), &f(d.y), "", "", "", "", "", "", ""];
        w.write_record(row).expect(csv_err);
    }
    for rec in trace.records() {
        let t = rec.t.to_string();
        for (j, (p, b)) in rec.amav_poses.iter().zip(&rec.amav_believed).enumerate() {
            let row = [&t, "amav", &j.to_string(), &f(p.x1), &f(p.x2), &f(b.x1), &f(b.x2), "", "", "", "", ""];
            w.write_record(row).expect(csv_err);
        }
        let mut seen_by: Vec<Vec<String>> = vec![Vec::new(); rec.beliefs.len()];
        for o in &rec.observations {
            seen_by[o.bmav].push(o.amav.to_string());
        }
        for (i, (y, b)) in rec.bmav_truth.iter().zip(&rec.beliefs).enumerate() {
            let group = rec.owner[i].map(|g| g.to_string()).unwrap_or_default();
            let row = [
                t.clone(),
                "bmav".into(),
                i.to_string(),
                f(y.x),
                f(y.y),
                f(b.mean.x),
                f(b.mean.y),
                f(b.cov[(0, 0)]),
                f(b.cov[(0, 1)]),
                f(b.cov[(1, 1)]),
                group,
                seen_by[i].join(";"),
            ];
            w.write_record(&row).expect(csv_err);
        }
    }
    w.into_inner().expect(csv_err)
}

/// Rebuilds the metric inputs from a CSV trace.
pub fn trajectories_from_csv(path: &Path) -> Result<TrajectorySet> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse_err(path, e.to_string()))?;
    let header = reader.headers().map_err(|e| parse_err(path, e.to_string()))?.clone();
    if header.iter().ne(TRACE_HEADER) {
        return Err(parse_err(path, "unexpected trace header"));
    }
    let mut set = TrajectorySet::default();
    let mut dests: BTreeMap<usize, Vec2> = BTreeMap::new();
    for (line, row) in reader.records().enumerate() {
        let row = row.map_err(|e| parse_err(path, e.to_string()))?;
        let at = |k: usize| row.get(k).unwrap_or("");
        let num = |k: usize| -> Result<f64> {
            at(k)
                .parse::<f64>()
                .map_err(|_| parse_err(path, format!("row {}: bad `{}` value `{}`", line + 2, TRACE_HEADER[k], at(k))))
        };
        let idx = |k: usize| -> Result<usize> {
            at(k)
                .parse::<usize>()
                .map_err(|_| parse_err(path, format!("row {}: bad `{}` value `{}`", line + 2, TRACE_HEADER[k], at(k))))
        };
        match at(1) {
            "destination" => {
                dests.insert(idx(2)?, Vec2::new(num(3)?, num(4)?));
            }
            "bmav" => {
                let t = idx(0)?;
                let i = idx(2)?;
                if t == set.truth.len() {
                    set.truth.push(Vec::new());
                    set.est.push(Vec::new());
                    set.trace.push(Vec::new());
                }
                if t + 1 != set.truth.len() || i != set.truth[t].len() {
                    return Err(parse_err(path, format!("row {}: BMAV rows out of order", line + 2)));
                }
                set.truth[t].push(Vec2::new(num(3)?, num(4)?));
                set.est[t].push(Vec2::new(num(5)?, num(6)?));
                set.trace[t].push(num(7)? + num(9)?);
            }
            "amav" => {}
            other => return Err(parse_err(path, format!("row {}: unknown entity kind `{other}`", line + 2))),
        }
    }
    set.destinations = dests.into_values().collect();
    let n = set.destinations.len();
    if set.truth.len() < 2 || set.truth.iter().any(|r| r.len() != n) {
        return Err(parse_err(path, "trace is missing records or BMAV rows"));
    }
    Ok(set)
}

/// Everything needed to reproduce a batch, plus the files it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub strategies: Vec<Strategy>,
    /// The effective scenario after defaults and overrides.
    #[serde(default)]
    pub config: Option<ScenarioConfig>,
    #[serde(default)]
    pub emitted: Vec<String>,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("seeds", "must be unique"));
        }
        if self.strategies.is_empty() {
            return Err(Error::config("strategies", "must not be empty"));
        }
        let mut s = self.strategies.clone();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("strategies", "must be unique"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn read_metrics(path: &Path) -> Result<MetricsSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}

/// Cross-seed means for one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyAggregate {
    pub seeds: Vec<u64>,
    pub ate_mean: f64,
    pub ate_p50: f64,
    pub ate_p95: f64,
    /// Pointwise mean of the per-run CDFs; a run's CDF is 1 beyond its end.
    pub ate_cdf: Vec<[f64; 2]>,
    pub success: BTreeMap<String, f64>,
    #[serde(rename = "xi_T")]
    pub xi_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub strategies: BTreeMap<String, StrategyAggregate>,
}

impl Aggregate {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("aggregate serializes");
        s.push('\n');
        s
    }
}

/// Averages per-run metrics by strategy. Runs are taken in seed order.
pub fn aggregate(runs: &[(Strategy, u64, MetricsSummary)]) -> Aggregate {
    let mut by_strategy: BTreeMap<String, Vec<(u64, &MetricsSummary)>> = BTreeMap::new();
    for (s, seed, m) in runs {
        by_strategy.entry(s.name().to_string()).or_default().push((*seed, m));
    }
    let strategies = by_strategy
        .into_iter()
        .map(|(name, mut list)| {
            list.sort_by_key(|(seed, _)| *seed);
            let k = list.len() as f64;
            let mean = |f: &dyn Fn(&MetricsSummary) -> f64| list.iter().map(|(_, m)| f(m)).sum::<f64>() / k;
            let longest = list
                .iter()
                .map(|(_, m)| &m.ate_cdf)
                .max_by_key(|c| c.len())
                .expect("at least one run");
            let ate_cdf = longest
                .iter()
                .enumerate()
                .map(|(idx, p)| {
                    let frac = list
                        .iter()
                        .map(|(_, m)| m.ate_cdf.get(idx).map_or(1.0, |q| q[1]))
                        .sum::<f64>()
                        / k;
                    [p[0], frac]
                })
                .collect();
            let mut success = BTreeMap::new();
            for key in list[0].1.success.keys() {
                let v = list.iter().map(|(_, m)| m.success.get(key).copied().unwrap_or(0.0)).sum::<f64>() / k;
                success.insert(key.clone(), v);
            }
            let agg = StrategyAggregate {
                seeds: list.iter().map(|(s, _)| *s).collect(),
                ate_mean: mean(&|m| m.ate_mean),
                ate_p50: mean(&|m| m.ate_p50),
                ate_p95: mean(&|m| m.ate_p95),
                ate_cdf,
                success,
                xi_t: mean(&|m| m.xi_t),
            };
            (name, agg)
        })
        .collect();
    Aggregate { strategies }
}

/// Parses `metrics_{strategy}_seed{seed}.json`.
pub fn parse_metrics_file_name(name: &str) -> Option<(Strategy, u64)> {
    let stem = name.strip_prefix("metrics_")?.strip_suffix(".json")?;
    let (strategy, seed) = stem.rsplit_once("_seed")?;
    Some((strategy.parse().ok()?, seed.parse().ok()?))
}

/// Reads every metrics file in `dir` and aggregates them.
pub fn aggregate_dir(dir: &Path) -> Result<Aggregate> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut runs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some((strategy, seed)) = parse_metrics_file_name(&name) {
            runs.push((strategy, seed, read_metrics(&entry.path())?));
        }
    }
    if runs.is_empty() {
        return Err(parse_err(dir, "no metrics files found"));
    }
    Ok(aggregate(&runs))
}
