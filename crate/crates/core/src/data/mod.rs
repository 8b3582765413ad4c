//! Ingestion, chronological partitioning, windowing, normalization and
//! synthetic stream generation.

mod csv_source;
mod manifest;
mod norm;
mod partition;
mod partitioned;
mod synthetic;
mod window;

pub use csv_source::{load_csv, write_csv, CsvSchema};
pub use manifest::{series_checksum, DataSource, DatasetManifest, SyntheticDocument};
pub use norm::{apply_norm, apply_norm_window, fit_norm, invert_norm, STD_FLOOR};
pub use partition::make_partitions;
pub use partitioned::{NormPolicy, PartitionWindows, PartitionedData, Split};
pub use synthetic::{
    gen_synthetic, BaseProcess, EventRecord, ShiftEvent, ShiftKind, ShiftScript, SyntheticStream,
};
pub use window::{window_count, window_iter, Windows};
