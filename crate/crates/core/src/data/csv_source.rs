use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{Matrix, TimeSeries};
use crate::error::{Error, Result};

/// How to read a CSV file into a [`TimeSeries`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Column holding timestamps; ignored for values. `None` if the file has none.
    #[serde(default)]
    pub time_column: Option<String>,
    /// Value columns to read, in order. `None` reads every non-time column.
    #[serde(default)]
    pub value_columns: Option<Vec<String>>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time_column: None,
            value_columns: None,
            delimiter: default_delimiter(),
        }
    }
}

/// Reads a headed CSV file. Parse errors cite 1-based data row and 1-based value column.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<TimeSeries> {
    let path = path.as_ref();
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    if !schema.delimiter.is_ascii() {
        return Err(csv_err(format!("delimiter {:?} is not ASCII", schema.delimiter)));
    }
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(csv_err("empty file: no header row".into()));
    }

    let time_index = match &schema.time_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| csv_err(format!("time column {name:?} not in header")))?,
        ),
        None => None,
    };
    let columns: Vec<usize> = match &schema.value_columns {
        Some(names) => names
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| csv_err(format!("value column {name:?} not in header")))
            })
            .collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&i| Some(i) != time_index).collect(),
    };
    if columns.is_empty() {
        return Err(csv_err("no value columns".into()));
    }
    let names: Vec<String> = columns.iter().map(|&i| headers[i].clone()).collect();

    let mut data = Vec::new();
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(csv_err(format!(
                "ragged row {row}: {} fields, header has {}",
                record.len(),
                headers.len()
            )));
        }
        for (j, &col) in columns.iter().enumerate() {
            let cell = record[col].trim();
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: j + 1,
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: j + 1,
                    value: cell.to_string(),
                });
            }
            data.push(value);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(csv_err("empty file: no data rows".into()));
    }
    let values = Matrix::from_vec(rows, columns.len(), data)?;
    TimeSeries::new(values, names)
}

/// Writes a series as CSV with a leading `step` column.
pub fn write_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str("step");
    for name in series.channel_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for t in 0..series.len() {
        out.push_str(&t.to_string());
        for v in series.values().row(t) {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    crate::runner::write_atomic(path, out.as_bytes())
}
