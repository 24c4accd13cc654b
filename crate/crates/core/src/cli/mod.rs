//! Command-line front end: single runs, seed batches, metric recomputation
//! and cross-strategy aggregation.

pub mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::sim::config::{ScenarioConfig, Strategy};
use crate::sim::engine::run_strategy;
use crate::sim::metrics::{compute_metrics, metrics_from_set};
use output::{
    aggregate, aggregate_dir, metrics_file_name, trace_file_name, trace_to_csv, trajectories_from_csv, write_file,
    RunManifest, AGGREGATE_FILE, MANIFEST_FILE,
};

#[derive(Debug, Parser)]
#[command(name = "tloc", version, about = "Simulate AMAV-assisted localization of dead-reckoning BMAVs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trace, metrics and manifest.
    Run(RunArgs),
    /// Run every (strategy, seed) pair and write an aggregate.
    Batch(BatchArgs),
    /// Recompute metrics from a CSV trace.
    Metrics(MetricsArgs),
    /// Aggregate all metrics files in a directory.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file. Omitted: the built-in default scenario.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the planner beam width.
    #[arg(long)]
    pub beam_width: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Read seeds, strategies, config and output directory from a manifest
    /// written by an earlier batch.
    #[arg(long, conflicts_with_all = ["seeds", "strategy", "out", "config"])]
    pub manifest: Option<PathBuf>,
    /// Comma-separated seeds or half-open ranges, e.g. `0..10` or `1,4,7`.
    #[arg(long, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    /// Comma-separated strategies. Omitted: all four.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Option<Vec<Strategy>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Maximum number of runs in flight.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// CSV trace written by `run` or `batch`.
    #[arg(long)]
    pub trace: PathBuf,
    /// Scenario whose metric grids to use. Omitted: the default grids.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output JSON file. Omitted: standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Directory holding `metrics_*.json`; `aggregate.json` is written there.
    #[arg(long)]
    pub out: PathBuf,
}

impl clap::ValueEnum for Strategy {
    fn value_variants<'a>() -> &'a [Self] {
        &Strategy::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.name()))
    }
}

/// Seeds given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seed_list(text: &str) -> std::result::Result<SeedList, String> {
    parse_seeds(text).map(SeedList)
}

/// Parses `0..10`, `3` and comma-separated mixtures of both.
pub fn parse_seeds(text: &str) -> std::result::Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.parse().map_err(|_| format!("bad seed range `{part}`"))?;
            let b: u64 = b.parse().map_err(|_| format!("bad seed range `{part}`"))?;
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?);
        }
    }
    Ok(seeds)
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if args.beam_width.is_some() {
        cfg.beam_width = args.beam_width;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs one (strategy, seed) pair and writes its trace and metrics files.
/// Returns the file names written.
pub fn run_one(cfg: &ScenarioConfig, strategy: Strategy, seed: u64, out: &Path) -> Result<[String; 2]> {
    let cfg = ScenarioConfig {
        seed,
        strategy,
        ..cfg.clone()
    };
    let trace = run_strategy(&cfg, strategy)?;
    let metrics = compute_metrics(&trace, &cfg.metrics);
    let trace_name = trace_file_name(strategy, seed);
    let metrics_name = metrics_file_name(strategy, seed);
    write_file(&out.join(&trace_name), &trace_to_csv(&trace))?;
    write_file(&out.join(&metrics_name), metrics.to_json().as_bytes())?;
    Ok([trace_name, metrics_name])
}

/// Runs every (strategy, seed) pair of the manifest with up to `jobs` runs in
/// parallel, then writes the aggregate and the manifest itself.
pub fn run_batch(manifest: &RunManifest, jobs: usize) -> Result<RunManifest> {
    manifest.validate()?;
    let cfg = match (&manifest.config, &manifest.config_path) {
        (Some(cfg), _) => {
            cfg.validate()?;
            cfg.clone()
        }
        (None, Some(path)) => ScenarioConfig::load(path)?,
        (None, None) => ScenarioConfig::default(),
    };
    create_dir(&manifest.out_dir)?;

    let tasks: Vec<(Strategy, u64)> = manifest
        .strategies
        .iter()
        .flat_map(|&s| manifest.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<[String; 2]>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, tasks.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(strategy, seed)) = tasks.get(k) else {
                    break;
                };
                let r = run_one(&cfg, strategy, seed, &manifest.out_dir);
                results.lock().expect("result lock")[k] = Some(r);
            });
        }
    });

    let mut emitted = Vec::with_capacity(2 * tasks.len() + 1);
    for r in results.into_inner().expect("result lock") {
        emitted.extend(r.expect("every task ran")?);
    }

    let mut runs = Vec::with_capacity(tasks.len());
    for &(strategy, seed) in &tasks {
        let path = manifest.out_dir.join(metrics_file_name(strategy, seed));
        runs.push((strategy, seed, output::read_metrics(&path)?));
    }
    let agg = aggregate(&runs);
    write_file(&manifest.out_dir.join(AGGREGATE_FILE), agg.to_json().as_bytes())?;
    emitted.push(AGGREGATE_FILE.to_string());

    let done = RunManifest {
        config: Some(cfg),
        emitted,
        ..manifest.clone()
    };
    write_file(&manifest.out_dir.join(MANIFEST_FILE), done.to_json().as_bytes())?;
    Ok(done)
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = load_scenario(&args.scenario)?;
            let seed = args.seed.unwrap_or(cfg.seed);
            let strategy = args.strategy.unwrap_or(cfg.strategy);
            create_dir(&args.out)?;
            let files = run_one(&cfg, strategy, seed, &args.out)?;
            let manifest = RunManifest {
                config_path: args.scenario.config,
                seeds: vec![seed],
                out_dir: args.out.clone(),
                strategies: vec![strategy],
                config: Some(ScenarioConfig { seed, strategy, ..cfg }),
                emitted: files.to_vec(),
            };
            write_file(&args.out.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
            for f in &manifest.emitted {
                println!("{}", args.out.join(f).display());
            }
        }
        Command::Batch(args) => {
            let manifest = match &args.manifest {
                Some(path) => {
                    let mut m = RunManifest::load(path)?;
                    m.emitted.clear();
                    if let (Some(cfg), Some(_)) = (&mut m.config, args.scenario.beam_width) {
                        cfg.beam_width = args.scenario.beam_width;
                    }
                    m
                }
                None => {
                    let cfg = load_scenario(&args.scenario)?;
                    RunManifest {
                        config_path: args.scenario.config.clone(),
                        seeds: args.seeds.clone().map_or_else(|| vec![cfg.seed], |s| s.0),
                        out_dir: args.out.clone().ok_or_else(|| Error::config("out", "is required"))?,
                        strategies: args.strategy.clone().unwrap_or_else(|| Strategy::ALL.to_vec()),
                        config: Some(cfg),
                        emitted: Vec::new(),
                    }
                }
            };
            let done = run_batch(&manifest, args.jobs)?;
            println!("{} files written to {}", done.emitted.len() + 1, done.out_dir.display());
        }
        Command::Metrics(args) => {
            let grid = match &args.config {
                Some(path) => ScenarioConfig::load(path)?.metrics,
                None => ScenarioConfig::default().metrics,
            };
            let set = trajectories_from_csv(&args.trace)?;
            let json = metrics_from_set(&set, &grid).to_json();
            match &args.out {
                Some(path) => write_file(path, json.as_bytes())?,
                None => print!("{json}"),
            }
        }
        Command::Compare(args) => {
            let agg = aggregate_dir(&args.out)?;
            let json = agg.to_json();
            write_file(&args.out.join(AGGREGATE_FILE), json.as_bytes())?;
            print!("{json}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("5, 1,2..4").unwrap(), vec![5, 1, 2, 3]);
        assert!(parse_seeds("x").is_err());
        assert_eq!(parse_seeds("").unwrap(), Vec::<u64>::new());
    }

    #[test]
    fn command_line_parses() {
        let cli = Cli::try_parse_from([
            "tloc", "batch", "--seeds", "0..3", "--strategy", "transformloc,station", "--out", "o", "--jobs", "2",
        ])
        .unwrap();
        match cli.command {
            Command::Batch(b) => {
                assert_eq!(b.seeds, Some(SeedList(vec![0, 1, 2])));
                assert_eq!(b.strategy, Some(vec![Strategy::Transformloc, Strategy::Station]));
                assert_eq!(b.jobs, 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["tloc", "run", "--strategy", "rl", "--out", "o"]).is_err());
    }
}
