use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Rectangular multivariate series: `T` rows (steps) by `C` columns (channels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Matrix,
    channel_names: Vec<String>,
    /// Free-form step duration label, e.g. `"1h"`.
    pub interval: String,
    /// Timestamp label of step 0. Not interpreted.
    pub origin: String,
}

impl TimeSeries {
    pub fn new(values: Matrix, channel_names: Vec<String>) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::Invalid(format!(
                "series must have T >= 1 and C >= 1, got {}x{}",
                values.rows(),
                values.cols()
            )));
        }
        if channel_names.len() != values.cols() {
            return Err(Error::Shape(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                values.cols()
            )));
        }
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "series value at row {}, channel {}",
                pos / values.cols(),
                pos % values.cols()
            )));
        }
        Ok(Self {
            values,
            channel_names,
            interval: String::from("1"),
            origin: String::from("0"),
        })
    }

    /// Series with generated channel names `ch0..chN`.
    pub fn unnamed(values: Matrix) -> Result<Self> {
        let names = (0..values.cols()).map(|c| format!("ch{c}")).collect();
        Self::new(values, names)
    }

    pub fn with_timing(mut self, interval: impl Into<String>, origin: impl Into<String>) -> Self {
        self.interval = interval.into();
        self.origin = origin.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }
}

/// One supervised pair: `l x C` context followed by `h x C` target.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub context: Matrix,
    pub target: Matrix,
    /// Index of the last context step in the originating series.
    pub anchor: usize,
}

/// Per-channel z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(channels: usize) -> Self {
        Self {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }
}
