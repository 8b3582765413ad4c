use serde::{Deserialize, Serialize};

use super::Regime;

/// One evaluated cell: normalized-space test MSE of a model under a regime at partition `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model_id: String,
    pub regime: Regime,
    pub p: usize,
    pub mse: f64,
    /// Same error measured in raw units, when the evaluator recorded it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse_raw: Option<f64>,
}

/// A ratio of two MSE rows. A zero denominator keeps both raw values instead of dividing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Ratio {
    Value { value: f64 },
    Degenerate { numerator: f64, denominator: f64 },
}

impl Ratio {
    pub fn of(numerator: f64, denominator: f64) -> Self {
        if denominator == 0.0 {
            Ratio::Degenerate {
                numerator,
                denominator,
            }
        } else {
            Ratio::Value {
                value: numerator / denominator,
            }
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Value { value } => Some(*value),
            Ratio::Degenerate { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub model_id: String,
    pub p: usize,
    pub r_zero: Option<Ratio>,
    pub r_full: Option<Ratio>,
    pub r_fz: Option<Ratio>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricRow>,
    pub ratios: Vec<RatioRow>,
}

impl MetricsTable {
    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
    }

    pub fn mse(&self, model_id: &str, regime: Regime, p: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.model_id == model_id && r.regime == regime && r.p == p)
            .map(|r| r.mse)
    }

    /// Distinct model ids in first-seen order.
    pub fn model_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for row in &self.rows {
            if !ids.contains(&row.model_id) {
                ids.push(row.model_id.clone());
            }
        }
        ids
    }

    /// Canonical order: model id, then regime, then partition.
    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            (a.model_id.as_str(), a.regime, a.p).cmp(&(b.model_id.as_str(), b.regime, b.p))
        });
        self.ratios
            .sort_by(|a, b| (a.model_id.as_str(), a.p).cmp(&(b.model_id.as_str(), b.p)));
    }

    /// `r` series for one model, indexed by `p`, skipping undefined entries.
    pub fn ratio_series(&self, model_id: &str, pick: fn(&RatioRow) -> Option<Ratio>) -> Vec<(usize, f64)> {
        self.ratios
            .iter()
            .filter(|r| r.model_id == model_id)
            .filter_map(|r| pick(r).and_then(|ratio| ratio.value()).map(|v| (r.p, v)))
            .collect()
    }
}
