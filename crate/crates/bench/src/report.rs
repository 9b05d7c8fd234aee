//! Suite reports in JSON and CSV.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use uda_core::engine::IterationRecord;
use uda_core::{AdaptationConfig, Method};

use crate::error::{BenchError, Result};

/// SHA-256 of each input, hex encoded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputHashes {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One (task, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task: String,
    pub name: String,
    pub method: Method,
    pub status: RowStatus,
    pub error: Option<String>,
    pub final_accuracy: Option<f64>,
    pub initial_accuracy: Option<f64>,
    pub converged_at: Option<usize>,
    pub effective_k: Option<usize>,
    pub trace: Vec<IterationRecord>,
    /// Effective hyper-parameters, defaults resolved.
    pub config: AdaptationConfig,
    pub inputs: InputHashes,
    /// 1-based predicted target labels.
    pub predictions: Vec<usize>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite_seed: u64,
    pub rows: Vec<ReportRow>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    task: &'a str,
    name: &'a str,
    method: &'a str,
    status: &'a str,
    final_accuracy: Option<f64>,
    initial_accuracy: Option<f64>,
    iterations: usize,
    converged_at: Option<usize>,
    effective_k: Option<usize>,
    k: usize,
    lambda: f64,
    alpha: f64,
    kernel: String,
    seed: u64,
    source_sha256: &'a str,
    target_sha256: &'a str,
    wall_clock_seconds: f64,
    error: &'a str,
}

impl Report {
    pub fn failed(&self) -> bool {
        self.rows.iter().any(|r| r.status == RowStatus::Failed)
    }

    pub fn row(&self, task: &str, method: Method) -> Option<&ReportRow> {
        self.rows.iter().find(|r| (r.task == task || r.name == task) && r.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON without wall-clock timings; identical across repeated runs.
    pub fn payload_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(rows) = value.get_mut("rows").and_then(|r| r.as_array_mut()) {
            for row in rows {
                if let Some(obj) = row.as_object_mut() {
                    obj.remove("wall_clock_seconds");
                }
            }
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            let kernel = r.config.kernel.map_or_else(|| "none".to_string(), |k| k.to_string());
            w.serialize(CsvRow {
                task: &r.task,
                name: &r.name,
                method: r.method.as_str(),
                status: match r.status {
                    RowStatus::Ok => "ok",
                    RowStatus::Failed => "failed",
                },
                final_accuracy: r.final_accuracy,
                initial_accuracy: r.initial_accuracy,
                iterations: r.trace.len(),
                converged_at: r.converged_at,
                effective_k: r.effective_k,
                k: r.config.k,
                lambda: r.config.lambda,
                alpha: r.config.alpha,
                kernel,
                seed: r.config.seed,
                source_sha256: &r.inputs.source,
                target_sha256: &r.inputs.target,
                wall_clock_seconds: r.wall_clock_seconds,
                error: r.error.as_deref().unwrap_or(""),
            })
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
    }

    /// Writes `report.json` and `report.csv` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
        let json = dir.join("report.json");
        let csv = dir.join("report.csv");
        std::fs::write(&json, self.to_json()).map_err(|e| BenchError::io(&json, e))?;
        std::fs::write(&csv, self.to_csv()).map_err(|e| BenchError::io(&csv, e))?;
        Ok((json, csv))
    }
}
