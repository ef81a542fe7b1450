//! End-to-end runs: micro-cluster construction, splitting, similarity,
//! spectral assignment and evaluation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::granular::{gb_generate, BallSplitRecord};
use crate::graph::{
    build_similarity_matrix, knn_adjacency, propagate_labels, spectral_embedding, SimilarityMatrix,
    SpectralConfig, SpectralEmbedding,
};
use crate::metrics::{score_all, NmiNormalization, Scores};
use crate::neighbors::{
    compute_density, compute_knn, compute_leaders, pseudo_clusters_from_leaders, PseudoCluster,
    PseudoClusterSet,
};
use crate::split::{split_all, ClusterGeometry, SplitConfig, SplitMode, SplitRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Mdmsc,
    /// Granular balls followed by the same similarity and spectral stages.
    Gbsc,
    /// Plain spectral clustering on the point k-NN graph.
    Sc,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mdmsc" => Ok(Algorithm::Mdmsc),
            "gbsc" => Ok(Algorithm::Gbsc),
            "sc" => Ok(Algorithm::Sc),
            other => Err(Error::param("algo", format!("unknown algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Mdmsc => "mdmsc",
            Algorithm::Gbsc => "gbsc",
            Algorithm::Sc => "sc",
        })
    }
}

/// Ablation settings for the micro-cluster stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    #[default]
    Full,
    /// (a) start splitting from one cluster holding the whole dataset.
    WholeDataset,
    /// (b) keep the pseudo-clusters as they are.
    NoSplit,
    /// (c) split on compactness alone.
    CompactnessOnly,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::Full,
        Ablation::WholeDataset,
        Ablation::NoSplit,
        Ablation::CompactnessOnly,
    ];

    fn split_mode(self) -> SplitMode {
        match self {
            Ablation::Full | Ablation::WholeDataset => SplitMode::Full,
            Ablation::NoSplit => SplitMode::NoSplit,
            Ablation::CompactnessOnly => SplitMode::CompactnessOnly,
        }
    }
}

impl FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Ablation::Full),
            "a" | "whole-dataset" | "whole" => Ok(Ablation::WholeDataset),
            "b" | "no-split" | "nosplit" => Ok(Ablation::NoSplit),
            "c" | "compactness-only" | "compactness" => Ok(Ablation::CompactnessOnly),
            other => Err(Error::param("mode", format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ablation::Full => "full",
            Ablation::WholeDataset => "whole-dataset",
            Ablation::NoSplit => "no-split",
            Ablation::CompactnessOnly => "compactness-only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub lambda: f64,
    pub beta: usize,
    pub clusters: usize,
    pub seed: u64,
    pub mode: Ablation,
    pub max_rounds: Option<usize>,
    pub inclusive_curvature: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            algorithm: Algorithm::Mdmsc,
            k: 10,
            lambda: 1.5,
            beta: 8,
            clusters: 2,
            seed: 0,
            mode: Ablation::Full,
            max_rounds: None,
            inclusive_curvature: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::param("clusters", format!("must be >= 2, got {}", self.clusters)));
        }
        if self.clusters > n {
            return Err(Error::param(
                "clusters",
                format!("{} clusters for {n} points", self.clusters),
            ));
        }
        if self.k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        self.split_config().validate()
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            lambda: self.lambda,
            beta: self.beta,
            max_rounds: self.max_rounds,
            mode: self.mode.split_mode(),
            inclusive_curvature: self.inclusive_curvature,
        }
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    /// k-NN, density, leaders and pseudo-clusters.
    pub construction_ms: f64,
    /// Curvature splitting, or ball generation for GBSC.
    pub splitting_ms: f64,
    pub similarity_ms: f64,
    /// Eigen-decomposition plus k-means.
    pub spectral_ms: f64,
    pub total_ms: f64,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Everything up to the seeded k-means step. Repeated runs with different
/// seeds share it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: PipelineConfig,
    pub micro: PseudoClusterSet,
    /// Both `None` when there are fewer micro-clusters than requested
    /// clusters.
    pub similarity: Option<SimilarityMatrix>,
    pub embedding: Option<SpectralEmbedding>,
    pub split_log: Vec<SplitRecord>,
    pub ball_log: Vec<BallSplitRecord>,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub labels: Vec<usize>,
    pub micro_labels: Vec<usize>,
    pub seed: u64,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

fn singletons(ds: &Dataset) -> PseudoClusterSet {
    let clusters = (0..ds.len())
        .map(|i| PseudoCluster::new(ds, vec![i], i))
        .collect();
    PseudoClusterSet::new(ds.len(), clusters).expect("singletons partition the dataset")
}

/// Runs every deterministic stage for `cfg`.
pub fn prepare(ds: &Dataset, cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.validate(ds.len())?;
    let spectral = SpectralConfig::default();
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();
    let mut split_log = Vec::new();
    let mut ball_log = Vec::new();

    let t = Instant::now();
    let table = compute_knn(ds, cfg.k)?;
    let initial = match (cfg.algorithm, cfg.mode) {
        (Algorithm::Mdmsc, Ablation::WholeDataset) => Some(PseudoClusterSet::whole(ds)),
        (Algorithm::Mdmsc, _) => {
            let density = compute_density(&table);
            let forest = compute_leaders(&table, &density);
            Some(pseudo_clusters_from_leaders(ds, &forest))
        }
        _ => None,
    };
    timings.construction_ms = ms_since(t);

    let t = Instant::now();
    let micro = match cfg.algorithm {
        Algorithm::Mdmsc => {
            let out = split_all(initial.as_ref().expect("built above"), ds, &cfg.split_config())?;
            if out.exhausted {
                warnings.push(format!("split round cap reached after {} rounds", out.rounds));
            }
            split_log = out.log;
            out.clusters
        }
        Algorithm::Gbsc => {
            let out = gb_generate(ds, cfg.beta)?;
            let part = out.to_partition(ds);
            ball_log = out.log;
            part
        }
        Algorithm::Sc => singletons(ds),
    };
    timings.splitting_ms = ms_since(t);

    let (similarity, embedding) = if micro.len() < cfg.clusters {
        warnings.push(format!(
            "only {} micro-clusters for {} clusters; each micro-cluster becomes a cluster",
            micro.len(),
            cfg.clusters
        ));
        (None, None)
    } else {
        let t = Instant::now();
        let s = match cfg.algorithm {
            Algorithm::Sc => knn_adjacency(&table),
            _ => build_similarity_matrix(&micro, &table)?,
        };
        timings.similarity_ms = ms_since(t);

        let t = Instant::now();
        let emb = spectral_embedding(&s, cfg.clusters, &spectral)?;
        timings.spectral_ms = ms_since(t);
        if emb.components > cfg.clusters {
            warnings.push(format!(
                "similarity graph has {} components for {} clusters",
                emb.components, cfg.clusters
            ));
        }
        (Some(s), Some(emb))
    };
    timings.total_ms = ms_since(start);
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Prepared {
        config: cfg.clone(),
        micro,
        similarity,
        embedding,
        split_log,
        ball_log,
        timings,
        warnings,
    })
}

impl Prepared {
    /// Number of micro-clusters.
    pub fn m(&self) -> usize {
        self.micro.len()
    }

    /// Size of the largest micro-cluster.
    pub fn n_star(&self) -> usize {
        self.micro.max_cluster_size()
    }

    /// Point labels for one k-means seed.
    pub fn assign(&self, seed: u64) -> Result<PipelineOutput> {
        let t = Instant::now();
        let micro_labels = match &self.embedding {
            Some(emb) => emb.assign(seed, &SpectralConfig::default()),
            None => (0..self.micro.len()).collect(),
        };
        let labels = propagate_labels(&self.micro, &micro_labels)?;
        let kmeans_ms = ms_since(t);
        let mut timings = self.timings;
        timings.spectral_ms += kmeans_ms;
        timings.total_ms += kmeans_ms;
        Ok(PipelineOutput {
            labels,
            micro_labels,
            seed,
            timings,
            warnings: self.warnings.clone(),
        })
    }

    /// Plot-ready description of every micro-cluster.
    pub fn micro_dump(&self, ds: &Dataset, micro_labels: Option<&[usize]>) -> Vec<MicroClusterDump> {
        self.micro
            .clusters()
            .par_iter()
            .enumerate()
            .map(|(id, c)| {
                let g = ClusterGeometry::compute(&c.members, ds);
                MicroClusterDump {
                    id,
                    core: c.core,
                    members: c.members.clone(),
                    centroid: c.centroid.clone(),
                    mc: g.mc,
                    dm: g.dm,
                    label: micro_labels.map(|l| l[id]),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MicroClusterDump {
    pub id: usize,
    pub core: usize,
    pub members: Vec<usize>,
    pub centroid: Vec<f64>,
    /// Infinite curvature (coincident endpoints) serializes as `null`.
    pub mc: f64,
    pub dm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
}

/// One full run with `cfg.seed`.
pub fn run(ds: &Dataset, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    prepare(ds, cfg)?.assign(cfg.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub mean: Scores,
    pub std: Scores,
    pub runs: Vec<Scores>,
    pub m: usize,
    pub n_star: usize,
    pub mean_runtime_ms: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Scores `runs` seeds `cfg.seed + r` against the dataset labels.
pub fn evaluate(ds: &Dataset, cfg: &PipelineConfig, runs: usize, norm: NmiNormalization) -> Result<Evaluation> {
    let truth = ds
        .labels()
        .ok_or_else(|| Error::InvalidDataset("ground-truth labels are required".into()))?;
    if runs == 0 {
        return Err(Error::param("runs", "must be at least 1"));
    }
    let prepared = prepare(ds, cfg)?;
    evaluate_prepared(&prepared, truth, runs, norm)
}

pub fn evaluate_prepared(
    prepared: &Prepared,
    truth: &[usize],
    runs: usize,
    norm: NmiNormalization,
) -> Result<Evaluation> {
    let mut scores = Vec::with_capacity(runs);
    let mut runtime = 0.0;
    for r in 0..runs as u64 {
        let out = prepared.assign(prepared.config.seed.wrapping_add(r))?;
        runtime += out.timings.total_ms;
        scores.push(score_all(&out.labels, truth, norm)?);
    }
    let pick = |f: fn(&Scores) -> f64| mean_std(&scores.iter().map(f).collect::<Vec<_>>());
    let (ari_m, ari_s) = pick(|s| s.ari);
    let (nmi_m, nmi_s) = pick(|s| s.nmi);
    let (acc_m, acc_s) = pick(|s| s.acc);
    Ok(Evaluation {
        mean: Scores {
            ari: ari_m,
            nmi: nmi_m,
            acc: acc_m,
        },
        std: Scores {
            ari: ari_s,
            nmi: nmi_s,
            acc: acc_s,
        },
        runs: scores,
        m: prepared.m(),
        n_star: prepared.n_star(),
        mean_runtime_ms: runtime / runs as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub k: usize,
    pub beta: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Index into `rows` of the highest mean ACC; the first such row on ties.
    pub best: Option<usize>,
}

impl SweepReport {
    pub fn best_row(&self) -> Option<&SweepRow> {
        self.best.map(|i| &self.rows[i])
    }
}

/// Evaluates every `(k, beta)` pair. Rows follow `ks` outer, `betas` inner;
/// a failing configuration is recorded and skipped.
pub fn sweep(
    ds: &Dataset,
    base: &PipelineConfig,
    ks: &[usize],
    betas: &[usize],
    runs: usize,
    norm: NmiNormalization,
) -> Result<SweepReport> {
    let truth = ds
        .labels()
        .ok_or_else(|| Error::InvalidDataset("sweep needs ground-truth labels".into()))?;
    if ks.is_empty() || betas.is_empty() {
        return Err(Error::param("sweep", "k range and beta set must be non-empty"));
    }
    if runs == 0 {
        return Err(Error::param("runs", "must be at least 1"));
    }
    let grid: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| betas.iter().map(move |&b| (k, b)))
        .collect();
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&(k, beta)| {
            let cfg = PipelineConfig {
                k,
                beta,
                ..base.clone()
            };
            let result = prepare(ds, &cfg).and_then(|p| evaluate_prepared(&p, truth, runs, norm));
            match result {
                Ok(e) => SweepRow {
                    k,
                    beta,
                    evaluation: Some(e),
                    error: None,
                },
                Err(e) => SweepRow {
                    k,
                    beta,
                    evaluation: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, row) in rows.iter().enumerate() {
        if let Some(e) = &row.evaluation {
            let better = match best.and_then(|b| rows[b].evaluation.as_ref()) {
                Some(b) => e.mean.acc > b.mean.acc,
                None => true,
            };
            if better {
                best = Some(i);
            }
        }
    }
    Ok(SweepReport { rows, best })
}
