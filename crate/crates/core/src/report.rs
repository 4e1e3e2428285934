//! Aggregated run reports and their CSV/JSON serializations.
//!
//! Two plot-ready CSV tables are emitted: per-symbol bias curves and
//! per-cell MSE summaries, with fixed headers. JSON carries the same data
//! plus the scenario echo and is the lossless round-trip format.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::frame::Modulation;
use crate::harness::Scenario;
use crate::synchronizer::SyncMode;

pub const CURVES_HEADER: [&str; 8] = [
    "mode",
    "modulation",
    "snr_db",
    "tau_over_t",
    "symbol_index",
    "bias_mean",
    "bias_ci_lo",
    "bias_ci_hi",
];

pub const SUMMARY_HEADER: [&str; 8] = [
    "mode",
    "modulation",
    "snr_db",
    "tau_over_t",
    "mse",
    "mse_ci_lo",
    "mse_ci_hi",
    "crb",
];

/// Configuration echo attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub package_version: String,
    pub scenario: Scenario,
}

/// Mean bias and normal-approximation 95% interval at one symbol index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasPoint {
    pub symbol_index: usize,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Aggregated results for one (mode, SNR, delay) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub mode: SyncMode,
    pub modulation: Modulation,
    pub snr_db: f64,
    pub tau_over_t: f64,
    pub trials: usize,
    pub mse: f64,
    pub mse_ci_lo: f64,
    pub mse_ci_hi: f64,
    pub crb: f64,
    pub clamp_rate: f64,
    pub bias_curve: Vec<BiasPoint>,
}

/// CRB reference value at one SNR for the scenario's block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbPoint {
    pub snr_db: f64,
    pub block_len: usize,
    pub crb: f64,
}

/// Complete output of a Monte-Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub meta: ReportMeta,
    pub cells: Vec<CellReport>,
    pub crb_curve: Vec<CrbPoint>,
}

/// One row of the bias-curve table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub mode: SyncMode,
    pub modulation: Modulation,
    pub snr_db: f64,
    pub tau_over_t: f64,
    pub symbol_index: usize,
    pub bias_mean: f64,
    pub bias_ci_lo: f64,
    pub bias_ci_hi: f64,
}

/// One row of the MSE summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub mode: SyncMode,
    pub modulation: Modulation,
    pub snr_db: f64,
    pub tau_over_t: f64,
    pub mse: f64,
    pub mse_ci_lo: f64,
    pub mse_ci_hi: f64,
    pub crb: f64,
}

/// Output serialization choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::invalid("format", "expected csv or json")),
        }
    }
}

fn rows_to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    writer
        .write_record(header)
        .map_err(|e| Error::ReportFormat(e.to_string()))?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::ReportFormat(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::ReportFormat(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::ReportFormat(e.to_string()))
}

fn rows_from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::ReportFormat(e.to_string()))
}

impl RunReport {
    pub fn curve_rows(&self) -> Vec<CurveRow> {
        let mut rows = Vec::new();
        for cell in &self.cells {
            for point in &cell.bias_curve {
                rows.push(CurveRow {
                    mode: cell.mode,
                    modulation: cell.modulation,
                    snr_db: cell.snr_db,
                    tau_over_t: cell.tau_over_t,
                    symbol_index: point.symbol_index,
                    bias_mean: point.mean,
                    bias_ci_lo: point.ci_lo,
                    bias_ci_hi: point.ci_hi,
                });
            }
        }
        rows
    }

    pub fn summary_rows(&self) -> Vec<SummaryRow> {
        self.cells
            .iter()
            .map(|cell| SummaryRow {
                mode: cell.mode,
                modulation: cell.modulation,
                snr_db: cell.snr_db,
                tau_over_t: cell.tau_over_t,
                mse: cell.mse,
                mse_ci_lo: cell.mse_ci_lo,
                mse_ci_hi: cell.mse_ci_hi,
                crb: cell.crb,
            })
            .collect()
    }

    pub fn curves_csv(&self) -> Result<String> {
        rows_to_csv(&CURVES_HEADER, &self.curve_rows())
    }

    pub fn summary_csv(&self) -> Result<String> {
        rows_to_csv(&SUMMARY_HEADER, &self.summary_rows())
    }

    /// Lossless JSON serialization. Non-finite SNRs cannot be represented
    /// in JSON and are rejected; use the CSV format for noise-off runs.
    pub fn to_json(&self) -> Result<String> {
        let finite = self
            .cells
            .iter()
            .map(|c| c.snr_db)
            .chain(self.meta.scenario.snr_db.iter().copied())
            .all(f64::is_finite);
        if !finite {
            return Err(Error::ReportFormat(
                "non-finite snr_db cannot be serialized to JSON; use csv".into(),
            ));
        }
        serde_json::to_string_pretty(self).map_err(|e| Error::ReportFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ReportFormat(e.to_string()))
    }

    /// Writes the report under `dir`: `curves.csv` and `summary.csv` for
    /// CSV, `report.json` for JSON. Returns the created paths.
    pub fn write(&self, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source: std::io::Error| Error::Io {
                path: path.clone(),
                source,
            }
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut written = Vec::new();
        match format {
            ReportFormat::Csv => {
                let curves = dir.join("curves.csv");
                fs::write(&curves, self.curves_csv()?).map_err(io_err(&curves))?;
                written.push(curves);
                let summary = dir.join("summary.csv");
                fs::write(&summary, self.summary_csv()?).map_err(io_err(&summary))?;
                written.push(summary);
            }
            ReportFormat::Json => {
                let path = dir.join("report.json");
                fs::write(&path, self.to_json()?).map_err(io_err(&path))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

pub fn parse_curves_csv(text: &str) -> Result<Vec<CurveRow>> {
    rows_from_csv(text)
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SummaryRow>> {
    rows_from_csv(text)
}
