//! Per-epoch metrics rows, written as JSON lines with a CSV mirror.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Failure, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_seconds: Option<f64>,
    pub lr_weights: f64,
    pub lr_thresholds: f64,
    pub lr_leakage: f64,
    /// Mean stored threshold of each spiking layer.
    pub mean_threshold: Vec<f64>,
    /// Leakage of each spiking layer.
    pub leakage: Vec<f64>,
}

impl EpochMetrics {
    pub fn is_finite(&self) -> bool {
        let opt = |v: Option<f64>| v.is_none_or(f64::is_finite);
        [
            self.train_loss,
            self.train_accuracy,
            self.lr_weights,
            self.lr_thresholds,
            self.lr_leakage,
        ]
        .iter()
        .all(|v| v.is_finite())
            && opt(self.test_loss)
            && opt(self.test_accuracy)
            && opt(self.wall_seconds)
            && self
                .mean_threshold
                .iter()
                .chain(&self.leakage)
                .all(|v| v.is_finite())
    }
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(Failure::io(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(Failure::io(&tmp))?;
    std::fs::rename(&tmp, path).map_err(Failure::io(path))
}

pub fn to_jsonl(rows: &[EpochMetrics]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("metrics serialize") + "\n")
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub fn to_csv(rows: &[EpochMetrics]) -> String {
    let mut s = String::from(
        "epoch,train_loss,train_accuracy,test_loss,test_accuracy,wall_seconds,lr_weights,lr_thresholds,lr_leakage,mean_threshold,leakage\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            r.train_accuracy,
            cell(r.test_loss),
            cell(r.test_accuracy),
            cell(r.wall_seconds),
            r.lr_weights,
            r.lr_thresholds,
            r.lr_leakage,
            list(&r.mean_threshold),
            list(&r.leakage)
        );
    }
    s
}

/// Path of the CSV mirror: the JSONL path with a `.csv` extension.
pub fn csv_path(jsonl: &Path) -> PathBuf {
    jsonl.with_extension("csv")
}

/// Rewrites both metrics files with all rows so far.
pub fn write_metrics(path: &Path, rows: &[EpochMetrics]) -> Result<()> {
    write_atomic(path, to_jsonl(rows).as_bytes())?;
    write_atomic(&csv_path(path), to_csv(rows).as_bytes())
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpochMetrics>> {
    let text = std::fs::read_to_string(path).map_err(Failure::io(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
        })
        .collect()
}
