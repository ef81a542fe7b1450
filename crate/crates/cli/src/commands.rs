use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use mdmsc_core::metrics::score_all;
use mdmsc_core::pipeline::{evaluate_prepared, MicroClusterDump};
use mdmsc_core::{
    prepare, sweep as run_sweep, Ablation, Algorithm, BallSplitRecord, SplitRecord, StageTimings,
    SweepReport,
};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{labels_csv, read_labels, MetricsReport, Outputs};

#[derive(Debug, Serialize)]
struct MicroDump<'a> {
    algorithm: Algorithm,
    mode: Ablation,
    k: usize,
    lambda: f64,
    beta: usize,
    n: usize,
    m: usize,
    n_star: usize,
    timings: StageTimings,
    warnings: &'a [String],
    micro_clusters: Vec<MicroClusterDump>,
    split_log: &'a [SplitRecord],
    ball_log: &'a [BallSplitRecord],
}

#[derive(Debug)]
pub struct ClusterSummary {
    pub n: usize,
    pub m: usize,
    pub n_star: usize,
    pub timings: StageTimings,
    pub metrics: Option<MetricsReport>,
    pub warnings: Vec<String>,
    pub written: Vec<PathBuf>,
}

impl ClusterSummary {
    pub fn print(&self) {
        println!(
            "n={} micro-clusters={} largest={}  ({:.1} ms)",
            self.n, self.m, self.n_star, self.timings.total_ms
        );
        if let Some(m) = &self.metrics {
            println!("{}", m.summary());
        }
        for w in &self.warnings {
            println!("warning: {w}");
        }
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

pub fn cluster(cfg: &RunConfig) -> Result<ClusterSummary> {
    let ds = cfg.load_dataset()?;
    let pc = cfg.pipeline(&ds)?;
    let prepared = prepare(&ds, &pc)?;
    let first = prepared.assign(pc.seed)?;

    let mut out = Outputs::default();
    out.add("labels.csv", labels_csv(&first.labels));

    let metrics = match ds.labels() {
        Some(truth) => {
            let eval = evaluate_prepared(&prepared, truth, cfg.runs, cfg.nmi)?;
            let mut report = MetricsReport::new(eval.mean, &first.labels, truth, first.timings.total_ms);
            if cfg.runs > 1 {
                report.runs = Some(cfg.runs);
                report.std = Some(eval.std);
            }
            report.nmi_normalization = Some(cfg.nmi.to_string());
            out.add_json("metrics.json", &report)?;
            Some(report)
        }
        None => None,
    };

    if cfg.dump_micro {
        let dump = MicroDump {
            algorithm: pc.algorithm,
            mode: pc.mode,
            k: pc.k,
            lambda: pc.lambda,
            beta: pc.beta,
            n: ds.len(),
            m: prepared.m(),
            n_star: prepared.n_star(),
            timings: first.timings,
            warnings: &prepared.warnings,
            micro_clusters: prepared.micro_dump(&ds, Some(&first.micro_labels)),
            split_log: &prepared.split_log,
            ball_log: &prepared.ball_log,
        };
        out.add_json("micro.json", &dump)?;
    }
    if cfg.dump_similarity {
        if let Some(s) = &prepared.similarity {
            let mut bytes = Vec::new();
            s.write_csv(&mut bytes).expect("vec writer");
            out.add("similarity.csv", bytes);
        }
    }

    let written = out.commit(&cfg.out_dir)?;
    Ok(ClusterSummary {
        n: ds.len(),
        m: prepared.m(),
        n_star: prepared.n_star(),
        timings: first.timings,
        metrics,
        warnings: prepared.warnings,
        written,
    })
}

#[derive(Debug)]
pub struct SweepSummary {
    pub report: SweepReport,
    pub written: Vec<PathBuf>,
}

impl SweepSummary {
    pub fn print(&self) {
        println!("{:>4} {:>5} {:>8} {:>8} {:>8} {:>6}", "k", "beta", "ARI%", "NMI%", "ACC%", "m");
        for row in &self.report.rows {
            match (&row.evaluation, &row.error) {
                (Some(e), _) => println!(
                    "{:>4} {:>5} {:>8.2} {:>8.2} {:>8.2} {:>6}",
                    row.k,
                    row.beta,
                    e.mean.ari * 100.0,
                    e.mean.nmi * 100.0,
                    e.mean.acc * 100.0,
                    e.m
                ),
                (None, Some(err)) => println!("{:>4} {:>5} failed: {err}", row.k, row.beta),
                (None, None) => {}
            }
        }
        if let Some(best) = self.report.best_row() {
            let e = best.evaluation.as_ref().expect("best row has scores");
            println!(
                "best: k={} beta={}  ARI {:.2}%  NMI {:.2}%  ACC {:.2}%",
                best.k,
                best.beta,
                e.mean.ari * 100.0,
                e.mean.nmi * 100.0,
                e.mean.acc * 100.0
            );
        }
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

fn sweep_csv(report: &SweepReport) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "k", "beta", "ari", "nmi", "acc", "ari_std", "nmi_std", "acc_std", "m", "n_star", "error",
    ])
    .expect("vec writer");
    for row in &report.rows {
        let mut rec = vec![row.k.to_string(), row.beta.to_string()];
        match &row.evaluation {
            Some(e) => {
                for v in [e.mean.ari, e.mean.nmi, e.mean.acc, e.std.ari, e.std.nmi, e.std.acc] {
                    rec.push(v.to_string());
                }
                rec.push(e.m.to_string());
                rec.push(e.n_star.to_string());
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 8)),
        }
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec).expect("vec writer");
    }
    w.into_inner().expect("vec writer")
}

pub fn sweep(cfg: &RunConfig, ks: &[usize], betas: &[usize]) -> Result<SweepSummary> {
    let ds = cfg.load_dataset()?;
    if ds.labels().is_none() {
        return Err(CliError::Config("sweep needs ground-truth labels (--labels-col)".into()));
    }
    if betas.is_empty() {
        return Err(CliError::Config("--betas must list at least one value".into()));
    }
    let base = cfg.pipeline(&ds)?;
    let report = run_sweep(&ds, &base, ks, betas, cfg.runs, cfg.nmi)?;
    let mut out = Outputs::default();
    out.add_json("sweep.json", &report)?;
    out.add("sweep.csv", sweep_csv(&report));
    let written = out.commit(&cfg.out_dir)?;
    Ok(SweepSummary { report, written })
}

pub fn eval(cfg: &RunConfig, pred_path: &Path, truth_path: Option<&Path>) -> Result<MetricsReport> {
    let start = Instant::now();
    let pred = read_labels(pred_path)?;
    let truth = match truth_path {
        Some(p) => read_labels(p)?,
        None => {
            let ds = cfg.load_dataset()?;
            ds.labels()
                .ok_or_else(|| CliError::Config("no ground truth: pass --truth or --labels-col".into()))?
                .to_vec()
        }
    };
    let scores = score_all(&pred, &truth, cfg.nmi)?;
    let mut report = MetricsReport::new(scores, &pred, &truth, start.elapsed().as_secs_f64() * 1e3);
    report.nmi_normalization = Some(cfg.nmi.to_string());
    let mut out = Outputs::default();
    out.add_json("metrics.json", &report)?;
    out.commit(&cfg.out_dir)?;
    Ok(report)
}
