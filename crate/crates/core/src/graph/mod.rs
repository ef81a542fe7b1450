//! Micro-cluster similarity graph and normalized spectral clustering.

pub mod eigen;
pub mod kmeans;

use std::collections::HashSet;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{euclidean, Dataset};
use crate::error::{Error, Result};
use crate::neighbors::{compute_knn, NeighborTable, PseudoCluster, PseudoClusterSet};

pub use eigen::{jacobi_eigen, SymmetricEigen};
pub use kmeans::{kmeans, KMeansFit};

/// Symmetric, non-negative `m x m` matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMatrix {
    m: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Validates symmetry, finiteness, non-negativity and the zero diagonal.
    pub fn from_dense(m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != m * m {
            return Err(Error::param("similarity", format!("expected {} entries", m * m)));
        }
        for i in 0..m {
            if values[i * m + i] != 0.0 {
                return Err(Error::param("similarity", format!("non-zero diagonal at {i}")));
            }
            for j in 0..m {
                let v = values[i * m + j];
                if !(v.is_finite() && v >= 0.0) || v != values[j * m + i] {
                    return Err(Error::param(
                        "similarity",
                        format!("entry ({i}, {j}) is negative, non-finite or asymmetric"),
                    ));
                }
            }
        }
        Ok(SimilarityMatrix { m, values })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.m + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Connected components of the graph of positive entries.
    pub fn components(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.m).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut count = self.m;
        for i in 0..self.m {
            for j in i + 1..self.m {
                if self.get(i, j) > 0.0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a] = b;
                        count -= 1;
                    }
                }
            }
        }
        count
    }

    /// Dense CSV, one matrix row per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.m {
            let row: Vec<String> = (0..self.m).map(|j| self.get(i, j).to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn neighbor_union(cluster: &PseudoCluster, table: &NeighborTable) -> Vec<usize> {
    let mut u: Vec<usize> = cluster
        .members
        .iter()
        .flat_map(|&p| table.neighbors(p).iter().copied())
        .collect();
    u.sort_unstable();
    u.dedup();
    u
}

/// `|SNN(p_i, p_j)| / (1 + ||centroid_i - centroid_j||)`, where `SNN` is the
/// intersection of the two clusters' k-NN unions.
pub fn snn_similarity(a: &PseudoCluster, b: &PseudoCluster, table: &NeighborTable) -> f64 {
    let ua: HashSet<usize> = neighbor_union(a, table).into_iter().collect();
    let shared = neighbor_union(b, table)
        .into_iter()
        .filter(|p| ua.contains(p))
        .count();
    shared as f64 / (1.0 + euclidean(&a.centroid, &b.centroid))
}

/// Fills every off-diagonal pair with [`snn_similarity`], counting shared
/// neighbors through an inverted point -> clusters index.
pub fn build_similarity_matrix(pcs: &PseudoClusterSet, table: &NeighborTable) -> Result<SimilarityMatrix> {
    let m = pcs.len();
    if m < 2 {
        return Err(Error::param("micro-clusters", format!("need at least 2, got {m}")));
    }
    let mut holders: Vec<Vec<u32>> = vec![Vec::new(); pcs.num_points()];
    for (c, cluster) in pcs.clusters().iter().enumerate() {
        for p in neighbor_union(cluster, table) {
            holders[p].push(c as u32);
        }
    }
    let mut values = vec![0.0; m * m];
    for list in &holders {
        for (x, &a) in list.iter().enumerate() {
            for &b in &list[x + 1..] {
                values[a as usize * m + b as usize] += 1.0;
            }
        }
    }
    let clusters = pcs.clusters();
    for i in 0..m {
        for j in i + 1..m {
            let shared = values[i * m + j];
            let s = if shared > 0.0 {
                shared / (1.0 + euclidean(&clusters[i].centroid, &clusters[j].centroid))
            } else {
                0.0
            };
            values[i * m + j] = s;
            values[j * m + i] = s;
        }
    }
    Ok(SimilarityMatrix { m, values })
}

/// Degree assigned to isolated nodes.
pub const DEGREE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub max_sweeps: usize,
    pub tolerance: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            restarts: kmeans::DEFAULT_RESTARTS,
            max_iter: kmeans::DEFAULT_MAX_ITER,
            max_sweeps: eigen::DEFAULT_MAX_SWEEPS,
            tolerance: eigen::DEFAULT_TOLERANCE,
        }
    }
}

/// `I - D^{-1/2} S D^{-1/2}`, row-major.
pub fn normalized_laplacian(s: &SimilarityMatrix) -> Vec<f64> {
    let m = s.len();
    let inv_sqrt: Vec<f64> = (0..m)
        .map(|i| {
            let d: f64 = (0..m).map(|j| s.get(i, j)).sum();
            1.0 / if d > 0.0 { d } else { DEGREE_EPSILON }.sqrt()
        })
        .collect();
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let w = s.get(i, j) * inv_sqrt[i] * inv_sqrt[j];
            l[i * m + j] = if i == j { 1.0 - w } else { -w };
        }
    }
    l
}

/// Row-normalized spectral embedding of the similarity graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    pub m: usize,
    pub dim: usize,
    /// `m x dim`, each non-zero row scaled to unit length.
    pub rows: Vec<f64>,
    /// All Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub components: usize,
    pub sweeps: usize,
}

/// Eigenvectors of the `clusters` smallest Laplacian eigenvalues as row
/// features.
pub fn spectral_embedding(s: &SimilarityMatrix, clusters: usize, cfg: &SpectralConfig) -> Result<SpectralEmbedding> {
    let m = s.len();
    if clusters < 2 || clusters > m {
        return Err(Error::param(
            "clusters",
            format!("need 2 <= clusters <= {m}, got {clusters}"),
        ));
    }
    let l = normalized_laplacian(s);
    let eig = jacobi_eigen(&l, m, cfg.max_sweeps, cfg.tolerance)?;
    let mut rows = vec![0.0; m * clusters];
    for c in 0..clusters {
        for (i, v) in eig.vector(c).iter().enumerate() {
            rows[i * clusters + c] = *v;
        }
    }
    for r in rows.chunks_exact_mut(clusters) {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            r.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(SpectralEmbedding {
        m,
        dim: clusters,
        rows,
        eigenvalues: eig.values,
        components: s.components(),
        sweeps: eig.sweeps,
    })
}

impl SpectralEmbedding {
    /// k-means labels on the embedding rows for one seed.
    pub fn assign(&self, seed: u64, cfg: &SpectralConfig) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        kmeans(&self.rows, self.dim, self.dim, cfg.restarts, cfg.max_iter, &mut rng).labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOutcome {
    pub labels: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub components: usize,
    pub warnings: Vec<String>,
}

/// Normalized-cut clustering of the similarity graph into `clusters` groups.
pub fn spectral_cluster(s: &SimilarityMatrix, clusters: usize, seed: u64) -> Result<SpectralOutcome> {
    let cfg = SpectralConfig::default();
    let emb = spectral_embedding(s, clusters, &cfg)?;
    let labels = emb.assign(seed, &cfg);
    let mut warnings = Vec::new();
    if emb.components > clusters {
        warnings.push(format!(
            "similarity graph has {} components for {clusters} clusters",
            emb.components
        ));
    }
    Ok(SpectralOutcome {
        labels,
        eigenvalues: emb.eigenvalues,
        components: emb.components,
        warnings,
    })
}

/// Copies each micro-cluster's label onto its member points.
pub fn propagate_labels(pcs: &PseudoClusterSet, micro_labels: &[usize]) -> Result<Vec<usize>> {
    if micro_labels.len() != pcs.len() {
        return Err(Error::LengthMismatch {
            predicted: micro_labels.len(),
            truth: pcs.len(),
        });
    }
    Ok(pcs.assignment().iter().map(|&c| micro_labels[c]).collect())
}

/// Unit-weight symmetric k-NN graph over the points: `i ~ j` when either
/// lists the other.
pub fn knn_adjacency(table: &NeighborTable) -> SimilarityMatrix {
    let n = table.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for &j in table.neighbors(i) {
            values[i * n + j] = 1.0;
            values[j * n + i] = 1.0;
        }
    }
    SimilarityMatrix { m: n, values }
}

/// Plain spectral clustering on the point-level k-NN graph.
pub fn plain_spectral_baseline(ds: &Dataset, clusters: usize, knn: usize, seed: u64) -> Result<Vec<usize>> {
    if clusters > ds.len() {
        return Err(Error::param(
            "clusters",
            format!("{clusters} clusters for {} points", ds.len()),
        ));
    }
    let table = compute_knn(ds, knn)?;
    let adj = knn_adjacency(&table);
    Ok(spectral_cluster(&adj, clusters, seed)?.labels)
}
