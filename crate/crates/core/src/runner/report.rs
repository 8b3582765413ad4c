use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::experiment::{ratio_picker, RunSummary, RATIO_NAMES};
use super::io::{read_metrics_csv, write_atomic};
use crate::error::{Error, Result};
use crate::metrics::{plasticity_trend, ratio_metrics, DEFAULT_SPIKE_FACTOR};

/// What `report` wrote.
#[derive(Debug, Clone)]
pub struct Report {
    pub text: String,
    pub files: Vec<PathBuf>,
}

fn series_file(rows: &[(String, usize, f64)]) -> String {
    let mut out = String::from("series,p,value\n");
    for (series, p, value) in rows {
        out.push_str(&format!("{series},{p},{value}\n"));
    }
    out
}

/// Reads `metrics.csv` (and `summary.json` when present) from `dir`, writes plot-data
/// series under `dir/plots/` and a text summary to `dir/summary.txt`.
pub fn report(dir: &Path) -> Result<Report> {
    let metrics_path = dir.join("metrics.csv");
    let table = ratio_metrics(&read_metrics_csv(&metrics_path)?);
    let summary_path = dir.join("summary.json");
    let summary: Option<RunSummary> = match std::fs::read_to_string(&summary_path) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| Error::Csv {
            path: summary_path.clone(),
            message: e.to_string(),
        })?),
        Err(_) => None,
    };
    let spike_factor = summary.as_ref().map_or(DEFAULT_SPIKE_FACTOR, |s| s.spike_factor);

    let mut files = Vec::new();
    let mut mse_rows = Vec::new();
    for row in &table.rows {
        mse_rows.push((format!("{}/{}", row.model_id, row.regime), row.p, row.mse));
    }
    let mse_path = dir.join("plots/mse.csv");
    write_atomic(&mse_path, series_file(&mse_rows).as_bytes())?;
    files.push(mse_path);

    let mut lines = Vec::new();
    let mut any_ratio = false;
    for name in RATIO_NAMES {
        let pick = ratio_picker(name);
        let rows: Vec<(String, usize, f64)> = table
            .ratios
            .iter()
            .filter_map(|r| pick(r).and_then(|v| v.value()).map(|v| (r.model_id.clone(), r.p, v)))
            .collect();
        any_ratio |= !rows.is_empty();
        let path = dir.join(format!("plots/{name}.csv"));
        write_atomic(&path, series_file(&rows).as_bytes())?;
        files.push(path);

        for model_id in table.model_ids() {
            let series = table.ratio_series(&model_id, pick);
            if let Ok(trend) = plasticity_trend(&series, spike_factor) {
                lines.push(format!(
                    "trend: {name} [{model_id}] slope={:.6} intercept={:.6}",
                    trend.slope, trend.intercept
                ));
                for p in trend.spike_indices {
                    lines.push(format!("spike: {name} p={p} [{model_id}]"));
                }
            }
        }
    }
    if !any_ratio {
        lines.push("no ratios computable".into());
    }

    if let Some(summary) = &summary {
        for model in &summary.models {
            if let Some(matrix) = &model.forgetting {
                let flagged: Vec<String> = matrix
                    .forgetting
                    .iter()
                    .enumerate()
                    .filter(|(_, f)| **f == Some(true))
                    .map(|(p, _)| p.to_string())
                    .collect();
                if !flagged.is_empty() {
                    lines.push(format!("forgetting: [{}] p={}", model.model_id, flagged.join(",")));
                }
            }
        }
        for failure in &summary.failures {
            lines.push(format!("failure: [{}] {}", failure.model_id, failure.error));
        }
        for warning in &summary.warnings {
            lines.push(format!("warning: {warning}"));
        }
    }

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for row in &table.rows {
        *counts.entry(row.regime.to_string()).or_default() += 1;
    }
    let mut text = format!("{} MSE rows", table.rows.len());
    for (regime, n) in counts {
        text.push_str(&format!(", {regime}: {n}"));
    }
    text.push('\n');
    for line in lines {
        text.push_str(&line);
        text.push('\n');
    }
    let summary_txt = dir.join("summary.txt");
    write_atomic(&summary_txt, text.as_bytes())?;
    files.push(summary_txt);
    Ok(Report { text, files })
}
