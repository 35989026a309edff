//! Experiment configuration, runs and sweeps.

mod config;
mod runner;

pub use config::{DatasetKind, ExperimentConfig, LrScheduleName, Method, OptimizerName};
pub use runner::{
    load_data, minority_metrics, run_dir, run_experiment, run_single, sweep, DataSplit, RunOutcome, RunSummary,
    SWEEP_HEADER,
};
