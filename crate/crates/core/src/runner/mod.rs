//! Experiment orchestration: config files, the run matrix, persisted results and reports.

mod config;
mod experiment;
mod io;
mod report;

pub use config::{
    validate_config, DatasetConfig, ExperimentConfig, IncrementalStart, ModelEntry, ModelSource, PretrainConfig,
};
pub use experiment::{
    config_digest, run_experiment, seeded_id, FailureRecord, LineageStep, ModelSummary, MomentEntry, RunOptions,
    RunResult, RunSummary,
};
pub use io::{metrics_csv, read_metrics_csv, write_atomic};
pub use report::{report, Report};
