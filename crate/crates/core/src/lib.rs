//! Manifold-aware micro-cluster spectral clustering.
//!
//! Points are first grouped into pseudo-clusters by following each point to
//! its nearest denser neighbor. Pseudo-clusters that bend (their spanning
//! tree path is much longer than the straight line between its ends) are
//! split, the resulting micro-clusters are linked by shared-neighbor
//! similarity, and a normalized spectral cut assigns the final labels.
//!
//! ```
//! use mdmsc_core::{generate_synthetic, run, PipelineConfig, SyntheticKind};
//!
//! let ds = generate_synthetic(SyntheticKind::Blobs { components: 2 }, 60, 0.3, 7).unwrap();
//! let out = run(&ds, &PipelineConfig { k: 6, ..Default::default() }).unwrap();
//! assert_eq!(out.labels.len(), 60);
//! ```

pub mod data;
pub mod error;
pub mod granular;
pub mod graph;
pub mod metrics;
pub mod neighbors;
pub mod pipeline;
pub mod split;

pub use data::{
    encode_labels, generate_synthetic, load_csv, read_csv, Dataset, LabelColumn, SyntheticKind,
};
pub use error::{Error, Result};
pub use granular::{gb_generate, BallOutcome, BallSplitRecord, GranularBall};
pub use graph::{
    build_similarity_matrix, plain_spectral_baseline, propagate_labels, snn_similarity,
    spectral_cluster, SimilarityMatrix,
};
pub use metrics::{acc, ari, nmi, nmi_with, score_all, ContingencyTable, NmiNormalization, Scores};
pub use neighbors::{build_pseudo_clusters, compute_knn, NeighborTable, PseudoCluster, PseudoClusterSet};
pub use pipeline::{
    evaluate, prepare, run, sweep, Ablation, Algorithm, Evaluation, PipelineConfig, PipelineOutput,
    Prepared, StageTimings, SweepReport, SweepRow,
};
pub use split::{split_all, split_once, SplitConfig, SplitMode, SplitOutcome, SplitRecord};
