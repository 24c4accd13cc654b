//! Closed-loop scenario simulation, baselines and run metrics.

pub mod config;
pub mod engine;
pub mod metrics;
pub mod trace;

pub use config::{ScenarioConfig, Strategy};
pub use engine::{run_baseline_dead_reckoning, run_baseline_greedy, run_baseline_station, run_scenario, run_strategy};
pub use metrics::{compute_metrics, MetricsSummary};
pub use trace::SimTrace;
