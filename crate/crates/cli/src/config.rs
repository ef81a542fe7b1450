//! Run configuration: defaults, a TOML file, then command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use mdmsc_core::{
    generate_synthetic, load_csv, Ablation, Algorithm, Dataset, LabelColumn, NmiNormalization,
    PipelineConfig, SyntheticKind,
};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub lambda: f64,
    pub beta: usize,
    /// Inferred from the ground-truth labels when absent.
    pub clusters: Option<usize>,
    pub seed: u64,
    pub mode: Ablation,
    pub input: Option<PathBuf>,
    pub labels_col: Option<String>,
    /// Generator name used instead of `input`, e.g. `two-spirals` or `blobs:4`.
    pub synthetic: Option<String>,
    pub size: usize,
    pub noise: f64,
    pub out_dir: PathBuf,
    pub runs: usize,
    pub normalize: bool,
    pub dump_micro: bool,
    pub dump_similarity: bool,
    pub nmi: NmiNormalization,
    pub max_rounds: Option<usize>,
    pub inclusive_curvature: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Mdmsc,
            k: 10,
            lambda: 1.5,
            beta: 8,
            clusters: None,
            seed: 0,
            mode: Ablation::Full,
            input: None,
            labels_col: None,
            synthetic: None,
            size: 300,
            noise: 0.0,
            out_dir: PathBuf::from("out"),
            runs: 10,
            normalize: true,
            dump_micro: false,
            dump_similarity: false,
            nmi: NmiNormalization::Geometric,
            max_rounds: None,
            inclusive_curvature: false,
        }
    }
}

/// Flags shared by every subcommand that runs the pipeline.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Pipeline: mdmsc, gbsc or sc.
    #[arg(long)]
    pub algo: Option<Algorithm>,
    /// Neighbor count.
    #[arg(long)]
    pub k: Option<usize>,
    /// Curvature threshold.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Minimum splittable cluster size (also the granular-ball minimum).
    #[arg(long)]
    pub beta: Option<usize>,
    /// Number of clusters; defaults to the number of ground-truth classes.
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// full, a (whole-dataset), b (no-split) or c (compactness-only).
    #[arg(long)]
    pub mode: Option<Ablation>,
    /// Input CSV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Ground-truth column: first, last, a 0-based index or a header name.
    #[arg(long)]
    pub labels_col: Option<String>,
    /// Generate data instead of reading it: two-spirals, moons, blobs or blobs:N.
    #[arg(long, conflicts_with = "input")]
    pub synthetic: Option<String>,
    /// Points to generate with --synthetic.
    #[arg(long)]
    pub size: Option<usize>,
    /// Gaussian noise for --synthetic.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Seeds seed..seed+runs-1 are averaged.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Skip min-max feature scaling.
    #[arg(long)]
    pub no_normalize: bool,
    /// Write micro-cluster members, centroids, MC and DM as JSON.
    #[arg(long)]
    pub dump_micro: bool,
    /// Write the micro-cluster similarity matrix as CSV.
    #[arg(long)]
    pub dump_similarity: bool,
    /// NMI denominator: geometric or arithmetic.
    #[arg(long)]
    pub nmi: Option<NmiNormalization>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Split when MC >= lambda rather than MC > lambda.
    #[arg(long)]
    pub inclusive_curvature: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable")
    }

    /// Defaults, then the optional file, then flags.
    pub fn resolve(file: Option<&Path>, args: &RunArgs) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(args);
        Ok(cfg)
    }

    pub fn apply(&mut self, a: &RunArgs) {
        macro_rules! take {
            ($($src:ident => $dst:ident),*) => {
                $(if let Some(v) = &a.$src { self.$dst = v.clone(); })*
            };
        }
        take!(algo => algorithm, k => k, lambda => lambda, beta => beta, seed => seed,
              mode => mode, size => size, noise => noise, out_dir => out_dir, runs => runs,
              nmi => nmi);
        if a.clusters.is_some() {
            self.clusters = a.clusters;
        }
        if a.max_rounds.is_some() {
            self.max_rounds = a.max_rounds;
        }
        if a.labels_col.is_some() {
            self.labels_col = a.labels_col.clone();
        }
        if a.input.is_some() {
            self.input = a.input.clone();
            self.synthetic = None;
        }
        if a.synthetic.is_some() {
            self.synthetic = a.synthetic.clone();
            self.input = None;
        }
        self.normalize &= !a.no_normalize;
        self.dump_micro |= a.dump_micro;
        self.dump_similarity |= a.dump_similarity;
        self.inclusive_curvature |= a.inclusive_curvature;
    }

    pub fn label_column(&self) -> Result<Option<LabelColumn>> {
        self.labels_col
            .as_deref()
            .map(|s| s.parse::<LabelColumn>().map_err(|e| CliError::Config(e.to_string())))
            .transpose()
    }

    /// Reads or generates the dataset and applies normalization.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let ds = match (&self.input, &self.synthetic) {
            (Some(path), _) => load_csv(path, self.label_column()?.as_ref())?,
            (None, Some(name)) => {
                let kind: SyntheticKind = name.parse().map_err(|e: mdmsc_core::Error| CliError::Config(e.to_string()))?;
                generate_synthetic(kind, self.size, self.noise, self.seed)?
            }
            (None, None) => return Err(CliError::Config("one of --input or --synthetic is required".into())),
        };
        Ok(if self.normalize { ds.normalize_minmax() } else { ds })
    }

    pub fn pipeline(&self, ds: &Dataset) -> Result<PipelineConfig> {
        let clusters = match (self.clusters, ds.num_classes()) {
            (Some(c), _) => c,
            (None, Some(c)) => c,
            (None, None) => {
                return Err(CliError::Config(
                    "--clusters is required when the data has no ground-truth labels".into(),
                ))
            }
        };
        if self.runs == 0 {
            return Err(CliError::Config("runs must be at least 1".into()));
        }
        let cfg = PipelineConfig {
            algorithm: self.algorithm,
            k: self.k,
            lambda: self.lambda,
            beta: self.beta,
            clusters,
            seed: self.seed,
            mode: self.mode,
            max_rounds: self.max_rounds,
            inclusive_curvature: self.inclusive_curvature,
        };
        cfg.validate(ds.len()).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_values() {
        let c = RunConfig::default();
        assert_eq!(c.lambda, 1.5);
        assert_eq!(c.beta, 8);
        assert_eq!(c.seed, 0);
        assert_eq!(c.mode, Ablation::Full);
    }

    #[test]
    fn toml_round_trip_and_override() {
        let mut c = RunConfig {
            k: 7,
            clusters: Some(3),
            mode: Ablation::NoSplit,
            synthetic: Some("moons".into()),
            ..RunConfig::default()
        };
        let text = c.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);

        c.apply(&RunArgs {
            k: Some(12),
            input: Some("x.csv".into()),
            no_normalize: true,
            ..RunArgs::default()
        });
        assert_eq!(c.k, 12);
        assert_eq!(c.clusters, Some(3));
        assert_eq!(c.synthetic, None);
        assert!(!c.normalize);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("kk = 3").is_err());
        let partial: RunConfig = toml::from_str("beta = 16\nmode = \"compactness-only\"").unwrap();
        assert_eq!(partial.beta, 16);
        assert_eq!(partial.mode, Ablation::CompactnessOnly);
        assert_eq!(partial.k, 10);
    }
}
