//! Output files. Everything is written to a temporary file in the target
//! directory and renamed into place, so a failed run leaves nothing behind.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mdmsc_core::metrics::{count_labels, Scores};

use crate::error::{CliError, Result};

/// JSON schema every metrics report validates against.
pub const METRICS_SCHEMA: &str = include_str!("../schema/metrics.schema.json");

/// Files staged in memory and committed together.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every staged file into `dir`, creating it if needed.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
            tmp.write_all(&bytes)
                .and_then(|_| tmp.flush())
                .map_err(|e| CliError::io(tmp.path(), e))?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, path) in staged {
            tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Single-column CSV with a `label` header.
pub fn labels_csv(labels: &[usize]) -> Vec<u8> {
    let mut out = BufWriter::new(Vec::with_capacity(labels.len() * 3 + 6));
    writeln!(out, "label").unwrap();
    for l in labels {
        writeln!(out, "{l}").unwrap();
    }
    out.into_inner().expect("vec writer")
}

/// Reads a label file: one integer or string per row, with an optional
/// `label` header. String labels are numbered by first appearance.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::BadFile {
                path: path.into(),
                message: format!("{other:?}"),
            },
        })?;
    let mut raw = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::BadFile {
            path: path.into(),
            message: e.to_string(),
        })?;
        if rec.len() != 1 {
            return Err(CliError::BadFile {
                path: path.into(),
                message: format!("row {} has {} fields, expected 1", row + 1, rec.len()),
            });
        }
        if row == 0 && rec[0].eq_ignore_ascii_case("label") {
            continue;
        }
        raw.push(rec[0].to_string());
    }
    if raw.is_empty() {
        return Err(CliError::BadFile {
            path: path.into(),
            message: "no labels".into(),
        });
    }
    if raw.iter().all(|s| s.parse::<usize>().is_ok()) {
        Ok(raw.iter().map(|s| s.parse().unwrap()).collect())
    } else {
        Ok(mdmsc_core::encode_labels(&raw))
    }
}

/// Contents of `metrics.json`. Scores are fractions; the console shows
/// percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ari: f64,
    pub nmi: f64,
    pub acc: f64,
    pub n: usize,
    #[serde(rename = "C_pred")]
    pub c_pred: usize,
    #[serde(rename = "C_true")]
    pub c_true: usize,
    pub runtime_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std: Option<Scores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmi_normalization: Option<String>,
}

impl MetricsReport {
    pub fn new(scores: Scores, pred: &[usize], truth: &[usize], runtime_ms: f64) -> Self {
        MetricsReport {
            ari: scores.ari,
            nmi: scores.nmi,
            acc: scores.acc,
            n: pred.len(),
            c_pred: count_labels(pred),
            c_true: count_labels(truth),
            runtime_ms,
            runs: None,
            std: None,
            nmi_normalization: None,
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "ARI {:.2}%  NMI {:.2}%  ACC {:.2}%  (n={}, C_pred={}, C_true={}, {:.1} ms)",
            self.ari * 100.0,
            self.nmi * 100.0,
            self.acc * 100.0,
            self.n,
            self.c_pred,
            self.c_true,
            self.runtime_ms
        )
    }
}
