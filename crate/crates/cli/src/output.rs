//! CSV time series with a JSON sidecar describing the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::OutputError;
use crate::run::{Diagnostic, Outcome, RunRecord};
use crate::scenario::Scenario;

/// Contents of the JSON sidecar written next to each CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub version: String,
    pub scenario: Scenario,
    pub outcome: Outcome,
    pub diagnostics: Vec<Diagnostic>,
    pub summary: std::collections::BTreeMap<String, f64>,
    pub columns: Vec<String>,
}

/// A time series read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// Path of the sidecar that accompanies `csv`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Write the sampled series as CSV and the run metadata as JSON. Values are
/// written with 17 significant digits so they read back bit-identical.
pub fn write_timeseries(record: &RunRecord, path: &Path) -> Result<(), OutputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| OutputError::Io { path: dir.to_path_buf(), source })?;
    }
    let csv_err = |source| OutputError::Csv { path: path.to_path_buf(), source };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer.write_record(&record.columns).map_err(csv_err)?;
    for row in &record.rows {
        writer
            .write_record(row.iter().map(|v| v.map_or_else(String::new, |x| format!("{x:.16e}"))))
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|source| OutputError::Io { path: path.to_path_buf(), source })?;

    let sidecar = Sidecar {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: record.scenario.clone(),
        outcome: record.outcome.clone(),
        diagnostics: record.diagnostics.clone(),
        summary: record.summary.clone(),
        columns: record.columns.clone(),
    };
    let json = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sidecar).map_err(|source| OutputError::Json { path: json.clone(), source })?;
    fs::write(&json, text).map_err(|source| OutputError::Io { path: json, source })
}

/// Read a CSV time series written by [`write_timeseries`].
pub fn read_timeseries(path: &Path) -> Result<TimeSeries, OutputError> {
    let csv_err = |source| OutputError::Csv { path: path.to_path_buf(), source };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let columns: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .map(|field| {
                if field.is_empty() {
                    Ok(None)
                } else {
                    field.parse::<f64>().map(Some).map_err(|e| OutputError::Malformed {
                        path: path.to_path_buf(),
                        message: format!("value {field:?}: {e}"),
                    })
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(TimeSeries { columns, rows })
}

/// Read the JSON sidecar of a CSV time series.
pub fn read_sidecar(csv: &Path) -> Result<Sidecar, OutputError> {
    let path = sidecar_path(csv);
    let text = fs::read_to_string(&path).map_err(|source| OutputError::Io { path: path.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| OutputError::Json { path, source })
}
