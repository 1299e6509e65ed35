//! Deterministic Monte Carlo experiments: configuration, the replicate
//! runner, summary statistics and CSV reports.

pub mod config;
pub mod harness;
pub mod report;
pub mod stats;

pub use config::ExperimentConfig;
pub use harness::{cell_seed, grid_steps, run_experiment, run_replicate, CellSummary, McSummary, MethodSummary, ReplicateRecord};
pub use report::{emit_report, rate_slopes};
pub use stats::{bootstrap_interval, summarize, Stats};
