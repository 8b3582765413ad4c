use std::fs;
use std::io::Write;
use std::path::Path;

use crate::domain::{MetricRow, MetricsTable};
use crate::error::{Error, Result};

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Invalid(format!("{} has no file name", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{file_name}.tmp-{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub const METRICS_HEADER: &str = "model_id,regime,p,mse";

/// `metrics.csv` body. Rows are written in the table's current order.
pub fn metrics_csv(table: &MetricsTable) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!("{},{},{},{}\n", row.model_id, row.regime, row.p, row.mse));
    }
    out
}

pub fn read_metrics_csv(path: &Path) -> Result<MetricsTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let garbled = |line: usize, why: String| Error::Csv {
        path: path.to_path_buf(),
        message: format!("line {line}: {why}"),
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == METRICS_HEADER => {}
        other => {
            return Err(garbled(
                1,
                format!("expected header {METRICS_HEADER:?}, found {:?}", other.unwrap_or("")),
            ))
        }
    }
    let mut table = MetricsTable::default();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [model_id, regime, p, mse] = fields.as_slice() else {
            return Err(garbled(line_no, format!("expected 4 fields, found {}", fields.len())));
        };
        let mse: f64 = mse
            .parse()
            .map_err(|_| garbled(line_no, format!("mse {mse:?} is not a number")))?;
        if !(mse >= 0.0) {
            return Err(garbled(line_no, format!("mse {mse} is negative or NaN")));
        }
        table.push(MetricRow {
            model_id: model_id.to_string(),
            regime: regime.parse().map_err(|e: String| garbled(line_no, e))?,
            p: p
                .parse()
                .map_err(|_| garbled(line_no, format!("partition {p:?} is not an index")))?,
            mse,
            mse_raw: None,
        });
    }
    Ok(table)
}
