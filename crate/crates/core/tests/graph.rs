use std::collections::HashSet;

use mdmsc_core::graph::spectral_cluster;
use mdmsc_core::{
    ari, build_pseudo_clusters, build_similarity_matrix, compute_knn, generate_synthetic,
    plain_spectral_baseline, Dataset, NeighborTable, PseudoCluster, SimilarityMatrix, SyntheticKind,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn literal_snn(a: &PseudoCluster, b: &PseudoCluster, table: &NeighborTable) -> f64 {
    let union = |c: &PseudoCluster| -> HashSet<usize> {
        c.members.iter().flat_map(|&p| table.neighbors(p).to_vec()).collect()
    };
    let shared = union(a).intersection(&union(b)).count() as f64;
    let gap: f64 = a
        .centroid
        .iter()
        .zip(&b.centroid)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    shared / (1.0 + gap)
}

fn components(m: usize, s: &SimilarityMatrix) -> Vec<usize> {
    let mut comp = vec![usize::MAX; m];
    let mut next = 0;
    for start in 0..m {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = next;
        while let Some(i) = stack.pop() {
            for j in 0..m {
                if s.get(i, j) > 0.0 && comp[j] == usize::MAX {
                    comp[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    comp
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn similarity_matrix_equals_pairwise_definition(n in 10usize..250, k in 1usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<f64> = (0..n * 2).map(|_| rng.random::<f64>()).collect();
        let ds = Dataset::new("r", pts, 2, None).unwrap();
        let table = compute_knn(&ds, k).unwrap();
        let pcs = build_pseudo_clusters(&ds, k).unwrap();
        prop_assume!(pcs.len() >= 2);
        let s = build_similarity_matrix(&pcs, &table).unwrap();
        let c = pcs.clusters();
        for i in 0..c.len() {
            for j in 0..c.len() {
                if i != j {
                    let want = literal_snn(&c[i], &c[j], &table);
                    prop_assert!((s.get(i, j) - want).abs() <= 1e-12 * want.max(1.0));
                }
            }
        }
    }

    #[test]
    fn block_diagonal_graphs_split_by_component(sizes in prop::collection::vec(2usize..8, 2..5), seed in any::<u64>()) {
        let m: usize = sizes.iter().sum();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = vec![0.0; m * m];
        let mut start = 0;
        for &size in &sizes {
            // a path inside each block keeps it connected
            for i in start..start + size {
                for j in i + 1..start + size {
                    let w = if j == i + 1 { rng.random_range(0.5..2.0) } else if rng.random::<bool>() { rng.random_range(0.1..2.0) } else { 0.0 };
                    v[i * m + j] = w;
                    v[j * m + i] = w;
                }
            }
            start += size;
        }
        let s = SimilarityMatrix::from_dense(m, v).unwrap();
        let want = components(m, &s);
        let out = spectral_cluster(&s, sizes.len(), seed).unwrap();
        prop_assert_eq!(out.components, sizes.len());
        prop_assert_eq!(ari(&out.labels, &want).unwrap(), 1.0);
    }
}

#[test]
fn plain_spectral_recovers_low_noise_moons() {
    let ds = generate_synthetic(SyntheticKind::Moons, 200, 0.03, 1).unwrap();
    let truth = ds.labels().unwrap().to_vec();
    let best = (5..=20)
        .map(|knn| ari(&plain_spectral_baseline(&ds, 2, knn, 0).unwrap(), &truth).unwrap())
        .fold(f64::MIN, f64::max);
    assert_eq!(best, 1.0);
}
