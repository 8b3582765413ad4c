//! Value types shared by every stage of the harness. Nothing here does I/O.

mod checkpoint;
mod matrix;
mod plan;
mod series;
mod table;

pub use checkpoint::{Checkpoint, Param, Provenance, Regime, FORMAT_VERSION};
pub use matrix::Matrix;
pub use plan::{validate_plan, Partition, PartitionPlan, SplitRatio};
pub use series::{NormStats, TimeSeries, WindowSample};
pub use table::{MetricRow, MetricsTable, Ratio, RatioRow};
