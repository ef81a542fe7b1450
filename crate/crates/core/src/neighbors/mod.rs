//! Local structure: k-nearest neighbors, Gaussian-kernel density, leaders and
//! the pseudo-clusters formed by following leader links to a core point.

mod kdtree;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub(crate) use kdtree::brute_force_query;
use kdtree::{Candidate, KdTree};

/// Above this dimension the KD-tree is skipped in favor of a linear scan.
pub const KD_TREE_MAX_DIM: usize = 16;

/// Per-point neighbor lists, sorted by `(distance, index)` ascending. A point
/// never appears in its own list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborTable {
    k: usize,
    indices: Vec<usize>,
    sq_distances: Vec<f64>,
}

impl NeighborTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Indices of the neighbors of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn squared_distances(&self, i: usize) -> &[f64] {
        &self.sq_distances[i * self.k..(i + 1) * self.k]
    }

    pub fn distance(&self, i: usize, slot: usize) -> f64 {
        self.sq_distances[i * self.k + slot].sqrt()
    }

    fn from_lists(k: usize, lists: Vec<Vec<Candidate>>) -> Self {
        let mut indices = Vec::with_capacity(lists.len() * k);
        let mut sq_distances = Vec::with_capacity(lists.len() * k);
        for list in lists {
            debug_assert_eq!(list.len(), k);
            for c in list {
                indices.push(c.index);
                sq_distances.push(c.sq);
            }
        }
        NeighborTable {
            k,
            indices,
            sq_distances,
        }
    }
}

/// Resolves the effective neighbor count: `0` is rejected, values above
/// `n - 1` are clamped with a warning.
pub fn effective_k(n: usize, k: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::param("k", format!("need at least 2 points for k-NN, got {n}")));
    }
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if k > n - 1 {
        log::warn!("k = {k} exceeds n - 1 = {}; clamping", n - 1);
        return Ok(n - 1);
    }
    Ok(k)
}

/// Exact Euclidean k-NN for every point.
pub fn compute_knn(ds: &Dataset, k: usize) -> Result<NeighborTable> {
    let k = effective_k(ds.len(), k)?;
    let lists: Vec<Vec<Candidate>> = if ds.dim() <= KD_TREE_MAX_DIM {
        let tree = KdTree::build(ds);
        (0..ds.len())
            .into_par_iter()
            .map(|i| tree.query(i, k))
            .collect()
    } else {
        (0..ds.len())
            .into_par_iter()
            .map(|i| brute_force_query(ds, i, k))
            .collect()
    };
    Ok(NeighborTable::from_lists(k, lists))
}

/// `rho_i = sum_j exp(-dist_ij^2)` over the k nearest neighbors of `i`.
pub fn compute_density(table: &NeighborTable) -> Vec<f64> {
    (0..table.len())
        .map(|i| table.squared_distances(i).iter().map(|sq| (-sq).exp()).sum())
        .collect()
}

/// Leader links and the resulting core points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeaderForest {
    pub leader: Vec<Option<usize>>,
    pub cores: Vec<usize>,
}

/// Each point's leader is its nearest neighbor with strictly higher density;
/// equidistant candidates resolve to the smallest index. Points with no such
/// neighbor are cores.
pub fn compute_leaders(table: &NeighborTable, density: &[f64]) -> LeaderForest {
    assert_eq!(table.len(), density.len(), "density length mismatch");
    let leader: Vec<Option<usize>> = (0..table.len())
        .map(|i| {
            table
                .neighbors(i)
                .iter()
                .copied()
                .find(|&j| density[j] > density[i])
        })
        .collect();
    let cores = leader
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.is_none().then_some(i))
        .collect();
    LeaderForest { leader, cores }
}

/// A micro-cluster: sorted member indices, a representative point and the
/// member centroid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoCluster {
    pub members: Vec<usize>,
    pub core: usize,
    pub centroid: Vec<f64>,
}

impl PseudoCluster {
    pub fn new(ds: &Dataset, mut members: Vec<usize>, core: usize) -> Self {
        members.sort_unstable();
        let centroid = ds.centroid(&members);
        PseudoCluster {
            members,
            core,
            centroid,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// A partition of the dataset into micro-clusters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PseudoClusterSet {
    clusters: Vec<PseudoCluster>,
    assignment: Vec<usize>,
}

impl PseudoClusterSet {
    /// Builds the set, checking that `clusters` partition `0..n`.
    pub fn new(n: usize, clusters: Vec<PseudoCluster>) -> Result<Self> {
        let mut assignment = vec![usize::MAX; n];
        for (c, cluster) in clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(Error::InvalidDataset(format!("micro-cluster {c} is empty")));
            }
            for &p in &cluster.members {
                match assignment.get_mut(p) {
                    Some(slot) if *slot == usize::MAX => *slot = c,
                    Some(_) => {
                        return Err(Error::InvalidDataset(format!(
                            "point {p} belongs to more than one micro-cluster"
                        )))
                    }
                    None => return Err(Error::InvalidDataset(format!("point {p} out of range"))),
                }
            }
        }
        if let Some(p) = assignment.iter().position(|&a| a == usize::MAX) {
            return Err(Error::InvalidDataset(format!("point {p} is not covered")));
        }
        Ok(PseudoClusterSet {
            clusters,
            assignment,
        })
    }

    /// A single micro-cluster holding every point, rooted at the point
    /// nearest the global centroid.
    pub fn whole(ds: &Dataset) -> Self {
        let members: Vec<usize> = (0..ds.len()).collect();
        let centroid = ds.centroid(&members);
        let core = (0..ds.len())
            .min_by(|&a, &b| {
                crate::data::squared_distance(ds.point(a), &centroid)
                    .total_cmp(&crate::data::squared_distance(ds.point(b), &centroid))
            })
            .unwrap_or(0);
        let cluster = PseudoCluster::new(ds, members, core);
        PseudoClusterSet::new(ds.len(), vec![cluster]).expect("whole set is a partition")
    }

    pub fn clusters(&self) -> &[PseudoCluster] {
        &self.clusters
    }

    pub fn into_clusters(self) -> Vec<PseudoCluster> {
        self.clusters
    }

    /// Micro-cluster id of every point.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn num_points(&self) -> usize {
        self.assignment.len()
    }

    /// Size of the largest micro-cluster.
    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(PseudoCluster::len).max().unwrap_or(0)
    }
}

/// Groups points into the trees of the leader forest. Cluster ids follow
/// ascending core index.
pub fn pseudo_clusters_from_leaders(ds: &Dataset, forest: &LeaderForest) -> PseudoClusterSet {
    let n = forest.leader.len();
    let mut root = vec![usize::MAX; n];
    let mut path = Vec::new();
    for start in 0..n {
        let mut cur = start;
        while root[cur] == usize::MAX {
            match forest.leader[cur] {
                Some(next) => {
                    path.push(cur);
                    cur = next;
                }
                None => {
                    root[cur] = cur;
                }
            }
        }
        let r = root[cur];
        for p in path.drain(..) {
            root[p] = r;
        }
    }
    let mut cluster_of_core = vec![usize::MAX; n];
    for (c, &core) in forest.cores.iter().enumerate() {
        cluster_of_core[core] = c;
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); forest.cores.len()];
    for (p, &r) in root.iter().enumerate() {
        groups[cluster_of_core[r]].push(p);
    }
    let clusters = groups
        .into_iter()
        .zip(&forest.cores)
        .map(|(members, &core)| PseudoCluster::new(ds, members, core))
        .collect();
    PseudoClusterSet::new(n, clusters).expect("leader forest yields a partition")
}

/// k-NN, density, leaders and connected components in one call.
pub fn build_pseudo_clusters(ds: &Dataset, k: usize) -> Result<PseudoClusterSet> {
    let table = compute_knn(ds, k)?;
    let density = compute_density(&table);
    let forest = compute_leaders(&table, &density);
    Ok(pseudo_clusters_from_leaders(ds, &forest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Dataset {
        Dataset::new("line", xs.to_vec(), 1, None).unwrap()
    }

    fn triple() -> Dataset {
        Dataset::from_rows("t", &[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]], None).unwrap()
    }

    /// Sorts every other point by (distance, index).
    fn oracle_knn(ds: &Dataset, k: usize) -> Vec<Vec<(usize, f64)>> {
        (0..ds.len())
            .map(|i| {
                let mut all: Vec<(usize, f64)> = (0..ds.len())
                    .filter(|&j| j != i)
                    .map(|j| (j, crate::data::squared_distance(ds.point(i), ds.point(j))))
                    .collect();
                all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                all.truncate(k);
                all
            })
            .collect()
    }

    #[test]
    fn collinear_nearest_neighbor() {
        let nt = compute_knn(&line(&[0.0, 1.0, 3.0]), 1).unwrap();
        assert_eq!(nt.neighbors(0), &[1]);
        assert_eq!(nt.neighbors(1), &[0]);
        assert_eq!(nt.neighbors(2), &[1]);
        assert_eq!(nt.distance(2, 0), 2.0);
    }

    #[test]
    fn full_ordering_when_k_is_n_minus_one() {
        let nt = compute_knn(&line(&[0.0, 1.0, 3.0, 7.0]), 3).unwrap();
        assert_eq!(nt.neighbors(0), &[1, 2, 3]);
        assert_eq!(nt.neighbors(3), &[2, 1, 0]);
    }

    #[test]
    fn duplicates_come_first_at_zero_distance() {
        let nt = compute_knn(&line(&[5.0, 0.0, 5.0, 4.0]), 2).unwrap();
        assert_eq!(nt.neighbors(0), &[2, 3]);
        assert_eq!(nt.squared_distances(0)[0], 0.0);
        assert_eq!(nt.neighbors(2), &[0, 3]);
    }

    #[test]
    fn k_validation() {
        assert!(compute_knn(&line(&[0.0, 1.0]), 0).is_err());
        assert!(compute_knn(&line(&[0.0]), 1).is_err());
        assert_eq!(compute_knn(&line(&[0.0, 1.0, 2.0]), 10).unwrap().k(), 2);
    }

    #[test]
    fn density_examples() {
        let nt = compute_knn(&triple(), 2).unwrap();
        let rho = compute_density(&nt);
        let e = std::f64::consts::E;
        assert!((rho[1] - 2.0 / e).abs() < 1e-15);
        assert!((rho[0] - (1.0 / e + (-4.0f64).exp())).abs() < 1e-15);
        assert!((rho[1] - 0.735759).abs() < 1e-6);
        assert!((rho[0] - 0.386195).abs() < 1e-6);

        let dup = compute_density(&compute_knn(&line(&[3.0, 3.0]), 1).unwrap());
        assert_eq!(dup, vec![1.0, 1.0]);

        let mut last = f64::INFINITY;
        for scale in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let rho = compute_density(&compute_knn(&line(&[0.0, scale]), 1).unwrap());
            assert!(rho[0] < last && rho[0] > 0.0);
            last = rho[0];
        }
    }

    #[test]
    fn leader_examples() {
        let nt = compute_knn(&triple(), 2).unwrap();
        let forest = compute_leaders(&nt, &compute_density(&nt));
        assert_eq!(forest.leader, vec![Some(1), None, Some(1)]);
        assert_eq!(forest.cores, vec![1]);

        // equal densities: both stay cores
        let nt = compute_knn(&line(&[0.0, 1.0]), 1).unwrap();
        let forest = compute_leaders(&nt, &compute_density(&nt));
        assert_eq!(forest.cores, vec![0, 1]);
    }

    #[test]
    fn unique_global_peak_gives_one_core() {
        let ds = line(&[0.0, 0.9, 1.0, 1.1, 2.5, 4.0]);
        let nt = compute_knn(&ds, ds.len() - 1).unwrap();
        let forest = compute_leaders(&nt, &compute_density(&nt));
        assert_eq!(forest.cores.len(), 1);
    }

    #[test]
    fn pseudo_cluster_examples() {
        let pcs = build_pseudo_clusters(&triple(), 2).unwrap();
        assert_eq!(pcs.len(), 1);
        assert_eq!(pcs.clusters()[0].core, 1);
        assert_eq!(pcs.clusters()[0].members, vec![0, 1, 2]);

        let ds = Dataset::from_rows(
            "two",
            &[
                vec![0.0, 0.0],
                vec![0.1, 0.0],
                vec![0.3, 0.0],
                vec![50.0, 0.0],
                vec![50.1, 0.0],
                vec![50.3, 0.0],
            ],
            None,
        )
        .unwrap();
        let nt = compute_knn(&ds, 2).unwrap();
        let oracle = oracle_knn(&ds, 2);
        for i in 0..6 {
            assert!(oracle[i].iter().all(|&(j, _)| (j < 3) == (i < 3)));
            assert_eq!(nt.neighbors(i), oracle[i].iter().map(|p| p.0).collect::<Vec<_>>());
        }
        let pcs = build_pseudo_clusters(&ds, 2).unwrap();
        assert_eq!(pcs.len(), 2);
        assert_eq!(pcs.clusters()[0].members, vec![0, 1, 2]);
        assert_eq!(pcs.clusters()[1].members, vec![3, 4, 5]);

        let pair = Dataset::from_rows("p", &[vec![0.0], vec![1.0]], None).unwrap();
        // equal densities for a lone pair, so both are cores
        assert_eq!(build_pseudo_clusters(&pair, 1).unwrap().len(), 2);
    }

    #[test]
    fn pair_with_distinct_densities_forms_one_cluster() {
        let ds = line(&[0.0, 1.0]);
        let forest = LeaderForest {
            leader: vec![Some(1), None],
            cores: vec![1],
        };
        let pcs = pseudo_clusters_from_leaders(&ds, &forest);
        assert_eq!(pcs.len(), 1);
        assert_eq!(pcs.assignment(), &[0, 0]);
    }

    #[test]
    fn centroid_is_member_mean() {
        let pcs = build_pseudo_clusters(&triple(), 2).unwrap();
        assert_eq!(pcs.clusters()[0].centroid, vec![1.0, 0.0]);
    }

    #[test]
    fn partition_validation() {
        let ds = triple();
        let a = PseudoCluster::new(&ds, vec![0, 1], 0);
        let b = PseudoCluster::new(&ds, vec![1, 2], 2);
        assert!(PseudoClusterSet::new(3, vec![a.clone(), b]).is_err());
        assert!(PseudoClusterSet::new(3, vec![a]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn knn_matches_oracle(
            n in 2usize..300,
            d in 1usize..20,
            k_seed in 1usize..40,
            grid in prop::bool::ANY,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            // integer grid values force many exact distance ties
            let pts: Vec<f64> = (0..n * d)
                .map(|_| if grid { rng.random_range(0..4) as f64 } else { rng.random::<f64>() })
                .collect();
            let ds = Dataset::new("r", pts, d, None).unwrap();
            let k = k_seed.min(n - 1);
            let nt = compute_knn(&ds, k).unwrap();
            let oracle = oracle_knn(&ds, k);
            for i in 0..n {
                let idx: Vec<usize> = oracle[i].iter().map(|p| p.0).collect();
                let sq: Vec<f64> = oracle[i].iter().map(|p| p.1).collect();
                prop_assert_eq!(nt.neighbors(i), &idx[..]);
                prop_assert_eq!(nt.squared_distances(i), &sq[..]);
            }
        }

        #[test]
        fn leader_links_increase_density_and_partition(
            n in 2usize..200,
            k_seed in 1usize..15,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<f64> = (0..n * 2).map(|_| rng.random_range(0..6) as f64 * 0.1).collect();
            let ds = Dataset::new("r", pts, 2, None).unwrap();
            let k = k_seed.min(n - 1);
            let nt = compute_knn(&ds, k).unwrap();
            let rho = compute_density(&nt);
            prop_assert!(rho.iter().all(|&r| r > 0.0 && r <= k as f64));
            let forest = compute_leaders(&nt, &rho);
            for (i, l) in forest.leader.iter().enumerate() {
                if let Some(j) = l {
                    prop_assert!(rho[*j] > rho[i]);
                    prop_assert!(nt.neighbors(i).contains(j));
                }
            }
            let pcs = pseudo_clusters_from_leaders(&ds, &forest);
            prop_assert_eq!(pcs.len(), forest.cores.len());
            prop_assert_eq!(pcs.clusters().iter().map(|c| c.len()).sum::<usize>(), n);
            for c in pcs.clusters() {
                prop_assert_eq!(c.members.iter().filter(|m| forest.cores.contains(m)).count(), 1);
            }
            let again = build_pseudo_clusters(&ds, k).unwrap();
            prop_assert_eq!(again, pcs);
        }
    }
}
