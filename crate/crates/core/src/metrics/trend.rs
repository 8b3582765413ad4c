use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SPIKE_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlasticityTrend {
    /// OLS slope of `r_p` against `p`.
    pub slope: f64,
    pub intercept: f64,
    /// `p` where `r_p > spike_factor * median(earlier r)`, given at least two earlier values.
    pub spike_indices: Vec<usize>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// Linear trend and spikes of a ratio series given as `(p, r_p)` pairs in increasing `p`.
pub fn plasticity_trend(series: &[(usize, f64)], spike_factor: f64) -> Result<PlasticityTrend> {
    if series.len() < 3 {
        return Err(Error::Invalid(format!(
            "plasticity trend needs at least 3 defined values, got {}",
            series.len()
        )));
    }
    let n = series.len() as f64;
    let mean_p = series.iter().map(|&(p, _)| p as f64).sum::<f64>() / n;
    let mean_r = series.iter().map(|&(_, r)| r).sum::<f64>() / n;
    let sxy: f64 = series
        .iter()
        .map(|&(p, r)| (p as f64 - mean_p) * (r - mean_r))
        .sum();
    let sxx: f64 = series.iter().map(|&(p, _)| (p as f64 - mean_p).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };

    let spike_indices = series
        .iter()
        .enumerate()
        .skip(2)
        .filter(|&(k, &(_, r))| {
            let prior: Vec<f64> = series[..k].iter().map(|&(_, v)| v).collect();
            r > spike_factor * median(&prior)
        })
        .map(|(_, &(p, _))| p)
        .collect();

    Ok(PlasticityTrend {
        slope,
        intercept: mean_r - slope * mean_p,
        spike_indices,
    })
}
