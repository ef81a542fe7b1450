//! Datasets: CSV ingestion, min-max normalization and synthetic generators.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// An `n x d` matrix of finite feature values stored row-major, with optional
/// ground-truth class ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    dim: usize,
    points: Vec<f64>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    /// Builds a dataset from a row-major buffer. Fails unless `n >= 1`,
    /// `dim >= 1`, every value is finite and `labels` (if any) has length `n`.
    pub fn new(
        name: impl Into<String>,
        points: Vec<f64>,
        dim: usize,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if points.is_empty() || points.len() % dim != 0 {
            return Err(Error::InvalidDataset(format!(
                "buffer of {} values is not a non-empty multiple of dimension {dim}",
                points.len()
            )));
        }
        let n = points.len() / dim;
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "{} labels for {n} points",
                    l.len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            n,
            dim,
            points,
            labels,
        })
    }

    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidDataset("rows have differing lengths".into()));
        }
        Self::new(name, rows.concat(), dim, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn with_labels(self, labels: Option<Vec<usize>>) -> Result<Self> {
        Self::new(self.name, self.points, self.dim, labels)
    }

    /// Number of distinct ground-truth classes, if labels are present.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let mut v = l.clone();
            v.sort_unstable();
            v.dedup();
            v.len()
        })
    }

    /// Euclidean distance between two points of this dataset.
    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        squared_distance(self.point(a), self.point(b)).sqrt()
    }

    /// Arithmetic mean of the given member points.
    pub fn centroid(&self, members: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for &i in members {
            for (acc, v) in c.iter_mut().zip(self.point(i)) {
                *acc += v;
            }
        }
        let m = members.len() as f64;
        c.iter_mut().for_each(|v| *v /= m);
        c
    }

    /// Rescales every feature linearly onto `[0, 1]`. Constant features map
    /// to 0. Applying this twice yields exactly the same values.
    pub fn normalize_minmax(&self) -> Dataset {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for row in self.points.chunks_exact(self.dim) {
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let mut points = self.points.clone();
        for row in points.chunks_exact_mut(self.dim) {
            for (j, v) in row.iter_mut().enumerate() {
                let range = hi[j] - lo[j];
                *v = if range > 0.0 { (*v - lo[j]) / range } else { 0.0 };
            }
        }
        Dataset {
            name: self.name.clone(),
            n: self.n,
            dim: self.dim,
            points,
            labels: self.labels.clone(),
        }
    }

    /// Writes the dataset as comma-separated text with a header row. Values
    /// use the shortest representation that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        if self.labels.is_some() {
            header.push("label".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.n {
            let mut fields: Vec<String> = self.point(i).iter().map(|v| v.to_string()).collect();
            if let Some(l) = &self.labels {
                fields.push(l[i].to_string());
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Which CSV column (if any) carries the ground-truth class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    First,
    Last,
    /// Zero-based column index.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::param("labels-col", "empty column selector"));
        }
        Ok(match s.to_ascii_lowercase().as_str() {
            "first" => LabelColumn::First,
            "last" => LabelColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::First => f.write_str("first"),
            LabelColumn::Last => f.write_str("last"),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

/// Loads a comma-separated numeric file. A first row containing any
/// non-numeric feature cell is treated as a header.
pub fn load_csv(path: impl AsRef<Path>, label: Option<&LabelColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, path, label).map(|ds| ds.with_name(name))
}

/// Same as [`load_csv`] over any reader; `source` is used in error messages.
pub fn read_csv<R: Read>(reader: R, source: &Path, label: Option<&LabelColumn>) -> Result<Dataset> {
    let src = || source.to_path_buf();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records: Vec<csv::StringRecord> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        records.push(rec);
    }
    let Some(first) = records.first() else {
        return Err(Error::EmptyInput { path: src() });
    };
    let width = first.len();

    let label_idx = |header: Option<&csv::StringRecord>| -> Result<Option<usize>> {
        Ok(match label {
            None => None,
            Some(LabelColumn::First) => Some(0),
            Some(LabelColumn::Last) => Some(width - 1),
            Some(LabelColumn::Index(i)) if *i < width => Some(*i),
            Some(LabelColumn::Index(i)) => {
                return Err(Error::param(
                    "labels-col",
                    format!("column {i} out of range for {width} columns"),
                ))
            }
            Some(LabelColumn::Name(name)) => {
                let pos = header.and_then(|h| h.iter().position(|c| c == name));
                Some(pos.ok_or_else(|| {
                    Error::param("labels-col", format!("no header column named `{name}`"))
                })?)
            }
        })
    };

    let header_guess = label_idx(None).ok().flatten();
    let has_header = matches!(label, Some(LabelColumn::Name(_)))
        || first
            .iter()
            .enumerate()
            .any(|(j, c)| Some(j) != header_guess && c.parse::<f64>().is_err());
    let lab = label_idx(has_header.then_some(first))?;
    let dim = width - usize::from(lab.is_some());
    if dim == 0 {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }

    let body_start = usize::from(has_header);
    let mut points = Vec::with_capacity((records.len() - body_start) * dim);
    let mut raw_labels = Vec::new();
    for (r, rec) in records.iter().enumerate().skip(body_start) {
        let row = r + 1;
        if rec.len() != width {
            return Err(Error::RaggedRow {
                path: src(),
                row,
                found: rec.len(),
                expected: width,
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == lab {
                raw_labels.push(cell.to_string());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: src(),
                row,
                column: j + 1,
                message: format!("non-numeric value `{cell}`"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: src(),
                    row,
                    column: j + 1,
                    message: format!("non-finite value `{cell}`"),
                });
            }
            points.push(v);
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyInput { path: src() });
    }
    let labels = lab.map(|_| encode_labels(&raw_labels));
    Dataset::new(String::new(), points, dim, labels)
}

/// Maps arbitrary class tags to dense ids in order of first appearance.
pub fn encode_labels<S: AsRef<str>>(raw: &[S]) -> Vec<usize> {
    let mut ids: HashMap<&str, usize> = HashMap::new();
    raw.iter()
        .map(|s| {
            let next = ids.len();
            *ids.entry(s.as_ref()).or_insert(next)
        })
        .collect()
}

fn csv_error(source: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source_err) => Error::Io {
            path: source.to_path_buf(),
            source: source_err,
        },
        other => Error::Parse {
            path: PathBuf::from(source),
            row,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Synthetic dataset families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Two interleaved Archimedean spiral arms.
    TwoSpirals,
    /// Isotropic Gaussian blobs with centers on a grid of spacing 10.
    Blobs { components: usize },
    /// Two interleaving half circles.
    Moons,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "two-spirals" | "spirals" => Ok(SyntheticKind::TwoSpirals),
            "moons" => Ok(SyntheticKind::Moons),
            "blobs" => Ok(SyntheticKind::Blobs { components: 3 }),
            _ => {
                if let Some(c) = lower.strip_prefix("blobs:") {
                    let components = c
                        .parse()
                        .map_err(|_| Error::param("kind", format!("bad blob count `{c}`")))?;
                    if components == 0 {
                        return Err(Error::param("kind", "blob count must be positive"));
                    }
                    Ok(SyntheticKind::Blobs { components })
                } else {
                    Err(Error::param("kind", format!("unknown synthetic kind `{s}`")))
                }
            }
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntheticKind::TwoSpirals => f.write_str("two-spirals"),
            SyntheticKind::Blobs { components } => write!(f, "blobs:{components}"),
            SyntheticKind::Moons => f.write_str("moons"),
        }
    }
}

pub(crate) const SPIRAL_THETA_START: f64 = std::f64::consts::FRAC_PI_2;
pub(crate) const SPIRAL_THETA_END: f64 = 3.0 * std::f64::consts::PI;
const BLOB_SPACING: f64 = 10.0;

/// Generates a labelled synthetic dataset. Deterministic for a fixed seed;
/// with `noise == 0` every point lies exactly on its generating curve
/// (or at its blob center).
pub fn generate_synthetic(kind: SyntheticKind, size: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if size < 4 {
        return Err(Error::param("size", format!("need at least 4 points, got {size}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::param("noise", format!("must be a finite value >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("valid stddev");
    let jitter = |rng: &mut ChaCha8Rng| if noise > 0.0 { gauss.sample(rng) } else { 0.0 };

    let mut points = Vec::with_capacity(size * 2);
    let mut labels = Vec::with_capacity(size);
    match kind {
        SyntheticKind::TwoSpirals => {
            let per_arm = [size / 2, size - size / 2];
            for (arm, &m) in per_arm.iter().enumerate() {
                for i in 0..m {
                    let theta = spiral_theta(i, m);
                    let [x, y] = spiral_point(arm, theta);
                    points.push(x + jitter(&mut rng));
                    points.push(y + jitter(&mut rng));
                    labels.push(arm);
                }
            }
        }
        SyntheticKind::Moons => {
            let per_moon = [size / 2, size - size / 2];
            for (moon, &m) in per_moon.iter().enumerate() {
                for i in 0..m {
                    let t = std::f64::consts::PI * i as f64 / (m - 1).max(1) as f64;
                    let [x, y] = moon_point(moon, t);
                    points.push(x + jitter(&mut rng));
                    points.push(y + jitter(&mut rng));
                    labels.push(moon);
                }
            }
        }
        SyntheticKind::Blobs { components } => {
            let side = (components as f64).sqrt().ceil() as usize;
            for i in 0..size {
                let c = i % components;
                let cx = (c % side) as f64 * BLOB_SPACING;
                let cy = (c / side) as f64 * BLOB_SPACING;
                points.push(cx + jitter(&mut rng));
                points.push(cy + jitter(&mut rng));
                labels.push(c);
            }
        }
    }
    Dataset::new(kind.to_string(), points, 2, Some(labels))
}

/// Angle of the `i`-th of `m` samples along a spiral arm, spaced uniformly
/// in arc length.
pub(crate) fn spiral_theta(i: usize, m: usize) -> f64 {
    let t = (i as f64 + 0.5) / m as f64;
    let (a, b) = (SPIRAL_THETA_START, SPIRAL_THETA_END);
    (a * a + t * (b * b - a * a)).sqrt()
}

/// Closed-form point on arm 0 (`r = theta`) or arm 1 (arm 0 rotated by pi).
pub fn spiral_point(arm: usize, theta: f64) -> [f64; 2] {
    let (x, y) = (theta * theta.cos(), theta * theta.sin());
    if arm == 0 {
        [x, y]
    } else {
        [-x, -y]
    }
}

/// Closed-form point on the upper (0) or lower (1) moon at parameter `t`.
pub fn moon_point(moon: usize, t: f64) -> [f64; 2] {
    if moon == 0 {
        [t.cos(), t.sin()]
    } else {
        [1.0 - t.cos(), 0.5 - t.sin()]
    }
}
