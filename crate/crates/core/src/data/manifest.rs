use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::synthetic::{EventRecord, ShiftScript};
use crate::domain::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Csv,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub channels: usize,
    pub length: usize,
    pub interval: String,
    pub source: DataSource,
    /// SHA-256 over the little-endian bytes of the values, row-major.
    pub checksum: String,
}

impl DatasetManifest {
    pub fn describe(name: impl Into<String>, series: &TimeSeries, source: DataSource) -> Self {
        Self {
            name: name.into(),
            channels: series.channels(),
            length: series.len(),
            interval: series.interval.clone(),
            source,
            checksum: series_checksum(series),
        }
    }

    pub fn matches(&self, series: &TimeSeries) -> bool {
        self.channels == series.channels()
            && self.length == series.len()
            && self.checksum == series_checksum(series)
    }
}

pub fn series_checksum(series: &TimeSeries) -> String {
    let mut hasher = Sha256::new();
    for v in series.values().as_slice() {
        hasher.update(v.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}

/// JSON document written next to a generated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDocument {
    pub manifest: DatasetManifest,
    pub script: ShiftScript,
    pub seed: u64,
    pub partitions: usize,
    pub events: Vec<EventRecord>,
}
