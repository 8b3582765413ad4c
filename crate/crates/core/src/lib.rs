//! Temporal-plasticity benchmark harness for time-series forecasters.
//!
//! A series is cut into chronological partitions; models are trained under zero-shot,
//! incremental fine-tuning and full-retraining regimes; the harness reports per-partition
//! MSE, the ratios between regimes, forgetting matrices and plasticity trends.

pub mod data;
pub mod domain;
pub mod error;
pub mod metrics;
pub mod models;
pub mod plugin;
pub mod runner;
pub mod training;

pub use error::{Error, Result};
