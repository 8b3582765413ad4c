use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::models::ForecasterSpec;

pub const FORMAT_VERSION: u32 = 1;

/// Training regime that produced a checkpoint or a metrics row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Zero,
    Incremental,
    Full,
    Pretrain,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Zero => "zero",
            Regime::Incremental => "incremental",
            Regime::Full => "full",
            Regime::Pretrain => "pretrain",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(Regime::Zero),
            "incremental" => Ok(Regime::Incremental),
            "full" => Ok(Regime::Full),
            "pretrain" => Ok(Regime::Pretrain),
            other => Err(format!("unknown regime {other:?}")),
        }
    }
}

/// Which data trained a checkpoint, and how.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub regime: Regime,
    pub partitions_seen: Vec<usize>,
    pub seed: u64,
    /// Cumulative epochs over the checkpoint's lineage.
    pub epochs: usize,
}

/// A named flat parameter array with its logical shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl Param {
    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            name: name.into(),
            shape,
            values: vec![0.0; n],
        }
    }
}

/// Model parameters plus provenance. Treated as an immutable value:
/// training returns a new checkpoint instead of mutating a shared one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub spec: ForecasterSpec,
    pub provenance: Provenance,
    pub params: Vec<Param>,
}

impl Checkpoint {
    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    pub fn is_trainable(&self) -> bool {
        !self.params.is_empty()
    }

    /// Parameter values only, as congruent arrays.
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.params.iter().map(|p| p.values.clone()).collect()
    }
}
