//! Benchmark reports and their CSV / JSON emission.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_FORMAT: &str = "asrc-report-v1";

/// One (dataset, method, dim, corruption level) cell aggregated over all splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    /// Requested PCA dimension; `None` for raw features.
    pub requested_dim: Option<usize>,
    /// Feature dimension actually used, per split.
    pub feature_dims: Vec<usize>,
    /// The requested dimension was reduced to `n_train - 1` on some split.
    pub dim_clamped: bool,
    pub corruption: f64,
    pub split: String,
    /// Mean of `accuracies`.
    pub accuracy_mean: f64,
    /// Sample standard deviation of `accuracies`; zero for a single split.
    pub accuracy_std: f64,
    /// Fraction correct, per split.
    pub accuracies: Vec<f64>,
    /// Selected regularization weight, per split.
    pub hyperparameters: Vec<Option<f64>>,
    /// Queries whose classification failed (counted as errors).
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl ResultRow {
    pub fn num_splits(&self) -> usize {
        self.accuracies.len()
    }
}

/// One classified query, recorded when `record_queries` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub dataset: String,
    pub method: String,
    pub requested_dim: Option<usize>,
    pub corruption: f64,
    pub split_id: usize,
    /// Sample index in the dataset.
    pub sample: usize,
    pub truth: usize,
    /// `None` when classification failed.
    pub predicted: Option<usize>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub format: String,
    pub split: String,
    pub seed: u64,
    pub repeats: usize,
    pub lambda_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    /// How each dataset was preprocessed and how hyperparameters were chosen.
    pub notes: Vec<String>,
    pub results: Vec<ResultRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<QueryRecord>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Rows matching `dataset` and `method`.
    pub fn rows<'a>(&'a self, dataset: &'a str, method: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.results
            .iter()
            .filter(move |r| r.dataset == dataset && r.method == method)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for r in &self.results {
            let hyper = r
                .hyperparameters
                .iter()
                .map(|h| h.map_or_else(|| "-".to_string(), |v| format!("{v:e}")))
                .collect::<Vec<_>>()
                .join(";");
            let accs = r
                .accuracies
                .iter()
                .map(|a| format!("{a:.4}"))
                .collect::<Vec<_>>()
                .join(";");
            let dims = r
                .feature_dims
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(";");
            let mut time = String::new();
            if let Some(t) = r.wall_time_secs {
                write!(time, "{t:.4}").expect("write to String");
            }
            w.write_record([
                r.dataset.clone(),
                r.method.clone(),
                r.requested_dim.map_or_else(|| "raw".to_string(), |d| d.to_string()),
                dims,
                r.dim_clamped.to_string(),
                format!("{:.4}", r.corruption),
                r.split.clone(),
                r.num_splits().to_string(),
                format!("{:.4}", r.accuracy_mean),
                format!("{:.4}", r.accuracy_std),
                accs,
                hyper,
                r.failures.to_string(),
                time,
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "dataset",
    "method",
    "dim",
    "feature_dims",
    "dim_clamped",
    "corruption",
    "split",
    "splits",
    "accuracy_mean",
    "accuracy_std",
    "accuracies",
    "hyperparameters",
    "failures",
    "wall_time_secs",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Serde(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` is JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

pub fn emit_report(report: &BenchmarkReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report.to_csv()?,
        ReportFormat::Json => report.to_json()?,
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Mean and sample standard deviation (`n - 1` denominator, zero for `n < 2`).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
