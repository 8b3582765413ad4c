use serde::{Deserialize, Serialize};

use super::mse::mse_eval;
use crate::data::PartitionedData;
use crate::domain::Checkpoint;
use crate::error::{Error, Result};

/// `entries[p][q]`: MSE after fine-tuning round `p` on partition `q`'s test windows, `q <= p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingMatrix {
    pub entries: Vec<Vec<f64>>,
    /// For `p >= 1`: whether the mean error on earlier partitions exceeds the error on `p`.
    pub forgetting: Vec<Option<bool>>,
}

impl ForgettingMatrix {
    pub fn from_rows(entries: Vec<Vec<f64>>) -> Result<Self> {
        for (p, row) in entries.iter().enumerate() {
            if row.len() != p + 1 {
                return Err(Error::Shape(format!(
                    "forgetting row {p} has {} entries, expected {}",
                    row.len(),
                    p + 1
                )));
            }
        }
        let forgetting = entries
            .iter()
            .enumerate()
            .map(|(p, row)| {
                (p > 0).then(|| {
                    let earlier = row[..p].iter().sum::<f64>() / p as f64;
                    earlier > row[p]
                })
            })
            .collect();
        Ok(Self { entries, forgetting })
    }

    pub fn get(&self, p: usize, q: usize) -> Option<f64> {
        self.entries.get(p)?.get(q).copied()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.entries.iter().enumerate().map(|(p, row)| row[p]).collect()
    }
}

/// Evaluates `checkpoints[p]` on the test windows of every partition `q <= p`,
/// each in partition `q`'s normalization.
pub fn forgetting_matrix(checkpoints: &[Checkpoint], data: &PartitionedData) -> Result<ForgettingMatrix> {
    let rows = checkpoints
        .iter()
        .enumerate()
        .map(|(p, ckpt)| {
            (0..=p)
                .map(|q| mse_eval(ckpt, data.test(q)?, data.stats(q)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ForgettingMatrix::from_rows(rows)
}
