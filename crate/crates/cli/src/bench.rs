//! Stage timings across datasets, algorithms and (for generated data)
//! sizes, with a power-law fit of time against n.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use mdmsc_core::metrics::acc;
use mdmsc_core::{prepare, Algorithm, Dataset, StageTimings};

use crate::config::{RunArgs, RunConfig};
use crate::error::Result;
use crate::output::Outputs;

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Input CSVs; repeat the flag for several files.
    #[arg(long = "dataset")]
    pub datasets: Vec<PathBuf>,
    /// Generated datasets (e.g. blobs:4); repeat for several kinds.
    #[arg(long = "generate")]
    pub generate: Vec<String>,
    /// Sizes for each generated kind.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Algorithms to compare.
    #[arg(long, value_delimiter = ',', default_value = "mdmsc,gbsc")]
    pub algos: Vec<Algorithm>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_star: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Fitted exponent `b` in `time = a * n^b` for one stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub stage: &'static str,
    pub sizes: Vec<usize>,
    pub times_ms: Vec<f64>,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub rows: Vec<BenchRow>,
    pub scaling: Vec<ScalingFit>,
    #[serde(skip)]
    pub written: Vec<PathBuf>,
}

impl BenchReport {
    pub fn print(&self) {
        println!(
            "{:<24} {:<6} {:>7} {:>6} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>7}",
            "dataset", "algo", "n", "m", "n*", "build ms", "split ms", "sim ms", "eigen ms", "total ms", "ACC%"
        );
        for r in &self.rows {
            match (&r.timings, &r.error) {
                (Some(t), _) => println!(
                    "{:<24} {:<6} {:>7} {:>6} {:>6} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>10.1} {:>7}",
                    r.dataset,
                    r.algorithm.to_string(),
                    r.n.unwrap_or(0),
                    r.m.unwrap_or(0),
                    r.n_star.unwrap_or(0),
                    t.construction_ms,
                    t.splitting_ms,
                    t.similarity_ms,
                    t.spectral_ms,
                    t.total_ms,
                    r.acc.map_or("-".to_string(), |a| format!("{:.2}", a * 100.0)),
                ),
                (None, Some(e)) => println!("{:<24} {:<6} failed: {e}", r.dataset, r.algorithm.to_string()),
                (None, None) => {}
            }
        }
        for s in &self.scaling {
            println!(
                "{} {} {}: time ~ n^{:.3} over n = {:?}",
                s.dataset, s.algorithm, s.stage, s.exponent, s.sizes
            );
        }
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-9).ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn run_one(name: &str, ds: &Dataset, algorithm: Algorithm, cfg: &RunConfig) -> BenchRow {
    let mut row = BenchRow {
        dataset: name.to_string(),
        algorithm,
        n: Some(ds.len()),
        m: None,
        n_star: None,
        timings: None,
        acc: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let pc = mdmsc_core::PipelineConfig {
            algorithm,
            ..cfg.pipeline(ds)?
        };
        let prepared = prepare(ds, &pc)?;
        let out = prepared.assign(pc.seed)?;
        row.m = Some(prepared.m());
        row.n_star = Some(prepared.n_star());
        row.timings = Some(out.timings);
        if let Some(truth) = ds.labels() {
            row.acc = Some(acc(&out.labels, truth)?);
        }
        Ok(())
    })();
    if let Err(e) = result {
        log::warn!("{name} / {algorithm}: {e}");
        row.error = Some(e.to_string());
    }
    row
}

pub fn bench(cfg: &RunConfig, args: &BenchArgs) -> Result<BenchReport> {
    let mut rows = Vec::new();
    let mut scaling = Vec::new();

    let mut files = args.datasets.clone();
    if files.is_empty() && args.generate.is_empty() {
        files.extend(cfg.input.clone());
    }
    for path in &files {
        let name = path.display().to_string();
        let file_cfg = RunConfig {
            input: Some(path.clone()),
            synthetic: None,
            ..cfg.clone()
        };
        match file_cfg.load_dataset() {
            Ok(ds) => {
                for &a in &args.algos {
                    rows.push(run_one(&name, &ds, a, cfg));
                }
            }
            Err(e) => {
                log::warn!("{name}: {e}");
                for &a in &args.algos {
                    rows.push(BenchRow {
                        dataset: name.clone(),
                        algorithm: a,
                        n: None,
                        m: None,
                        n_star: None,
                        timings: None,
                        acc: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
    }

    let mut kinds = args.generate.clone();
    if kinds.is_empty() && files.is_empty() {
        kinds.extend(cfg.synthetic.clone());
    }
    let sizes = if args.sizes.is_empty() { vec![cfg.size] } else { args.sizes.clone() };
    for kind in &kinds {
        let mut per_algo: Vec<(Vec<usize>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); args.algos.len()];
        for &size in &sizes {
            let name = format!("{kind}@{size}");
            let gen_cfg = RunConfig {
                input: None,
                synthetic: Some(kind.clone()),
                size,
                ..cfg.clone()
            };
            let ds = match gen_cfg.load_dataset() {
                Ok(ds) => ds,
                Err(e) => {
                    for &a in &args.algos {
                        rows.push(BenchRow {
                            dataset: name.clone(),
                            algorithm: a,
                            n: None,
                            m: None,
                            n_star: None,
                            timings: None,
                            acc: None,
                            error: Some(e.to_string()),
                        });
                    }
                    continue;
                }
            };
            for (i, &a) in args.algos.iter().enumerate() {
                let row = run_one(&name, &ds, a, cfg);
                if let Some(t) = &row.timings {
                    per_algo[i].0.push(size);
                    per_algo[i].1.push(t.splitting_ms);
                }
                rows.push(row);
            }
        }
        for (i, (ns, ts)) in per_algo.into_iter().enumerate() {
            if ns.len() >= 2 {
                let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
                scaling.push(ScalingFit {
                    dataset: kind.clone(),
                    algorithm: args.algos[i],
                    stage: "splitting",
                    exponent: fit_exponent(&xs, &ts),
                    sizes: ns,
                    times_ms: ts,
                });
            }
        }
    }

    let mut report = BenchReport {
        seed: cfg.seed,
        rows,
        scaling,
        written: Vec::new(),
    };
    let mut out = Outputs::default();
    out.add_json("bench.json", &report)?;
    report.written = out.commit(&cfg.out_dir)?;
    Ok(report)
}
