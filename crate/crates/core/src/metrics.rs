//! External clustering scores: ARI, NMI and Hungarian-matched accuracy.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Co-occurrence counts between predicted (rows) and true (columns) labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols`.
    pub counts: Vec<u64>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = HashMap::new();
    let out = labels
        .iter()
        .map(|l| {
            let next = ids.len();
            *ids.entry(*l).or_insert(next)
        })
        .collect();
    (out, ids.len())
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch {
                predicted: pred.len(),
                truth: truth.len(),
            });
        }
        let (p, rows) = dense_ids(pred);
        let (t, cols) = dense_ids(truth);
        let mut counts = vec![0u64; rows * cols];
        let mut row_sums = vec![0u64; rows];
        let mut col_sums = vec![0u64; cols];
        for (&a, &b) in p.iter().zip(&t) {
            counts[a * cols + b] += 1;
            row_sums[a] += 1;
            col_sums[b] += 1;
        }
        Ok(ContingencyTable {
            rows,
            cols,
            counts,
            row_sums,
            col_sums,
            n: pred.len() as u64,
        })
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r * self.cols + c]
    }
}

fn pairs(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Degenerate tables where the index is undefined
/// (e.g. both labelings constant) score 1.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(pred, truth)?;
    if t.n < 2 {
        return Err(Error::param("labels", "ARI needs at least 2 points"));
    }
    let index: f64 = t.counts.iter().map(|&c| pairs(c)).sum();
    let a: f64 = t.row_sums.iter().map(|&c| pairs(c)).sum();
    let b: f64 = t.col_sums.iter().map(|&c| pairs(c)).sum();
    let expected = a * b / pairs(t.n);
    let max = (a + b) / 2.0;
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// How mutual information is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NmiNormalization {
    #[default]
    Geometric,
    Arithmetic,
}

impl FromStr for NmiNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geometric" => Ok(NmiNormalization::Geometric),
            "arithmetic" => Ok(NmiNormalization::Arithmetic),
            other => Err(Error::param("nmi", format!("unknown normalization `{other}`"))),
        }
    }
}

impl fmt::Display for NmiNormalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NmiNormalization::Geometric => "geometric",
            NmiNormalization::Arithmetic => "arithmetic",
        })
    }
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with the geometric-mean denominator.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    nmi_with(pred, truth, NmiNormalization::Geometric)
}

/// Normalized mutual information (natural log). Zero when either labeling
/// is constant.
pub fn nmi_with(pred: &[usize], truth: &[usize], norm: NmiNormalization) -> Result<f64> {
    let t = ContingencyTable::new(pred, truth)?;
    if t.n == 0 {
        return Err(Error::param("labels", "NMI needs at least 1 point"));
    }
    let n = t.n as f64;
    let hp = entropy(&t.row_sums, n);
    let ht = entropy(&t.col_sums, n);
    if hp == 0.0 || ht == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for r in 0..t.rows {
        for c in 0..t.cols {
            let nij = t.get(r, c);
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (t.row_sums[r] as f64 * t.col_sums[c] as f64)).ln();
            }
        }
    }
    let denom = match norm {
        NmiNormalization::Geometric => (hp * ht).sqrt(),
        NmiNormalization::Arithmetic => (hp + ht) / 2.0,
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Minimum-cost assignment on a row-major `rows x cols` matrix with
/// `rows <= cols`. Returns the column chosen for each row.
pub fn hungarian(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    assert!(rows <= cols, "hungarian needs rows <= cols");
    assert_eq!(cost.len(), rows * cols);
    // potentials and matching are 1-based; index 0 is a sentinel
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut matched = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        matched[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = matched[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[matched[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched[j0] = matched[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; rows];
    for j in 1..=cols {
        if matched[j] > 0 {
            assignment[matched[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Best accuracy over one-to-one mappings of predicted onto true labels.
pub fn acc(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(pred, truth)?;
    if t.n == 0 {
        return Err(Error::param("labels", "ACC needs at least 1 point"));
    }
    let size = t.rows.max(t.cols);
    let mut cost = vec![0.0; size * size];
    for r in 0..t.rows {
        for c in 0..t.cols {
            cost[r * size + c] = -(t.get(r, c) as f64);
        }
    }
    let assignment = hungarian(&cost, size, size);
    let hits: u64 = (0..t.rows)
        .filter(|&r| assignment[r] < t.cols)
        .map(|r| t.get(r, assignment[r]))
        .sum();
    Ok(hits as f64 / t.n as f64)
}

/// All three scores as fractions in their natural ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub ari: f64,
    pub nmi: f64,
    pub acc: f64,
}

pub fn score_all(pred: &[usize], truth: &[usize], norm: NmiNormalization) -> Result<Scores> {
    Ok(Scores {
        ari: ari(pred, truth)?,
        nmi: nmi_with(pred, truth, norm)?,
        acc: acc(pred, truth)?,
    })
}

/// Number of distinct labels.
pub fn count_labels(labels: &[usize]) -> usize {
    dense_ids(labels).1
}
