//! Grid-search reports: JSON for machines, CSV for spreadsheets, and an
//! objective trace for the winning cell.
//!
//! Everything in a report is deterministic for a fixed config and dataset
//! except the `wall_ms` timing columns and `peak_memory_bytes`, which
//! callers must ignore when comparing runs.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Grid coordinates of one cell. Fields that a method does not use stay
/// `None` and serialize as absent.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CellParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// KNN neighbor count for feature views; 0 when every view arrived as
    /// a precomputed affinity.
    pub neighbors: usize,
    /// View index, for single-view baselines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub nmi: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: usize,
    pub params: CellParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub iterations: usize,
    pub converged: bool,
    /// Timing; excluded from determinism guarantees.
    pub wall_ms: f64,
    /// Solver objective after each block update, kept out of the JSON and
    /// written to the trace file for the best cell.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub dataset: String,
    pub n: usize,
    pub k: usize,
    pub method: String,
    pub config_hash: String,
    pub cells: Vec<CellResult>,
    /// Index into `cells` of the highest-accuracy successful cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best: Option<usize>,
    pub failures: usize,
    /// Timing and memory; excluded from determinism guarantees.
    pub wall_ms_total: f64,
    pub peak_memory_bytes: u64,
}

/// Files produced by [`Report::write`].
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub trace: Option<PathBuf>,
}

/// FNV-1a hash of the canonical config serialization, hex-encoded. Stable
/// across runs and platforms; used to name trace files.
pub fn config_hash(canonical: &str) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

fn opt_to_string<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl Report {
    pub fn best_cell(&self) -> Option<&CellResult> {
        self.best.map(|i| &self.cells[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(
            "cell,lambda1,lambda2,alpha,neighbors,view,acc,nmi,purity,iterations,converged,error,wall_ms\n",
        );
        for c in &self.cells {
            let (acc, nmi, purity) = match &c.metrics {
                Some(m) => (m.acc.to_string(), m.nmi.to_string(), m.purity.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            let error = c
                .error
                .as_deref()
                .unwrap_or("")
                .replace(',', ";")
                .replace('\n', " ");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.cell,
                opt_to_string(&c.params.lambda1),
                opt_to_string(&c.params.lambda2),
                opt_to_string(&c.params.alpha),
                c.params.neighbors,
                opt_to_string(&c.params.view),
                acc,
                nmi,
                purity,
                c.iterations,
                c.converged,
                error,
                c.wall_ms,
            );
        }
        out
    }

    /// Write `report.json`, `report.csv`, and (when the best cell carries
    /// a solver trace) `trace_<config_hash>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<ReportPaths> {
        fs::create_dir_all(dir)?;
        let json_path = dir.join("report.json");
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::Error::data(format!("report serialization: {e}")))?;
        json.push('\n');
        fs::write(&json_path, json)?;
        let csv_path = dir.join("report.csv");
        fs::write(&csv_path, self.to_csv())?;
        let trace_path = match self.best_cell() {
            Some(best) if !best.trace.is_empty() => {
                let path = dir.join(format!("trace_{}.csv", self.config_hash));
                let mut out = String::from("step,objective\n");
                for (i, obj) in best.trace.iter().enumerate() {
                    let _ = writeln!(out, "{i},{obj}");
                }
                fs::write(&path, out)?;
                Some(path)
            }
            _ => None,
        };
        Ok(ReportPaths {
            json: json_path,
            csv: csv_path,
            trace: trace_path,
        })
    }
}
