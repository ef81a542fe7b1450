//! Micro-cluster quality and curvature-driven splitting.
//!
//! A cluster's geodesic extent is approximated by the diameter of the
//! Euclidean minimum spanning tree over its members. The ratio of that tree
//! path to the straight-line distance between its two ends (the manifold
//! curvature) is 1 for points on a segment and grows as the cluster bends.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::data::{euclidean, Dataset};
use crate::error::{Error, Result};
use crate::neighbors::{PseudoCluster, PseudoClusterSet};

/// An MST edge between two point indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Minimum spanning tree of the complete Euclidean graph over `members`.
///
/// Equal weights are ordered by the `(min index, max index)` pair of the edge,
/// which makes the tree unique.
pub fn build_mst(members: &[usize], ds: &Dataset) -> Vec<TreeEdge> {
    let m = members.len();
    if m < 2 {
        return Vec::new();
    }
    let key = |w: f64, a: usize, b: usize| (w, a.min(b), a.max(b));
    let less = |x: (f64, usize, usize), y: (f64, usize, usize)| {
        x.0.total_cmp(&y.0)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
            == Ordering::Less
    };

    let mut in_tree = vec![false; m];
    let mut best_w = vec![f64::INFINITY; m];
    let mut best_from = vec![usize::MAX; m];
    let mut edges = Vec::with_capacity(m - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..m {
        let cp = ds.point(members[current]);
        let mut next = usize::MAX;
        for u in 0..m {
            if in_tree[u] {
                continue;
            }
            let w = euclidean(cp, ds.point(members[u]));
            let cand = key(w, members[current], members[u]);
            if best_from[u] == usize::MAX
                || less(cand, key(best_w[u], members[best_from[u]], members[u]))
            {
                best_w[u] = w;
                best_from[u] = current;
            }
            if next == usize::MAX
                || less(
                    key(best_w[u], members[best_from[u]], members[u]),
                    key(best_w[next], members[best_from[next]], members[next]),
                )
            {
                next = u;
            }
        }
        in_tree[next] = true;
        edges.push(TreeEdge {
            u: members[best_from[next]],
            v: members[next],
            weight: best_w[next],
        });
        current = next;
    }
    edges
}

/// The pair of tree nodes with the longest path between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Endpoints {
    /// Smaller point index of the pair.
    pub a: usize,
    pub b: usize,
    pub path_dist: f64,
}

/// Tree diameter by two farthest-point sweeps. Ties pick the smaller index.
pub fn find_endpoints(edges: &[TreeEdge]) -> Result<Endpoints> {
    if edges.is_empty() {
        return Err(Error::param("mst", "need a tree with at least 2 points"));
    }
    let mut nodes: Vec<usize> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let local = |p: usize| nodes.binary_search(&p).expect("edge endpoint is a node");
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nodes.len()];
    for e in edges {
        let (a, b) = (local(e.u), local(e.v));
        adj[a].push((b, e.weight));
        adj[b].push((a, e.weight));
    }
    let (a, _) = farthest(&adj, 0);
    let (b, path_dist) = farthest(&adj, a);
    let (a, b) = (nodes[a].min(nodes[b]), nodes[a].max(nodes[b]));
    Ok(Endpoints { a, b, path_dist })
}

fn farthest(adj: &[Vec<(usize, f64)>], source: usize) -> (usize, f64) {
    let dist = tree_distances(adj, source);
    let mut best = (source, 0.0);
    for (i, &d) in dist.iter().enumerate() {
        if d > best.1 {
            best = (i, d);
        }
    }
    best
}

pub(crate) fn tree_distances(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::NAN; adj.len()];
    dist[source] = 0.0;
    let mut stack = vec![source];
    while let Some(v) = stack.pop() {
        for &(u, w) in &adj[v] {
            if dist[u].is_nan() {
                dist[u] = dist[v] + w;
                stack.push(u);
            }
        }
    }
    dist
}

/// Tree-path length over straight-line length between the endpoints.
/// Spatially coincident endpoints give `+inf`.
pub fn manifold_curvature(endpoints: &Endpoints, ds: &Dataset) -> f64 {
    let euclid = ds.distance(endpoints.a, endpoints.b);
    if euclid > 0.0 {
        endpoints.path_dist / euclid
    } else {
        f64::INFINITY
    }
}

/// Mean distance of the members to their centroid.
pub fn compactness_dm(members: &[usize], ds: &Dataset) -> f64 {
    let c = ds.centroid(members);
    members.iter().map(|&i| euclidean(ds.point(i), &c)).sum::<f64>() / members.len() as f64
}

/// Size-weighted mean of the two children's compactness.
pub fn weighted_dm(child1: &[usize], child2: &[usize], ds: &Dataset) -> f64 {
    let (m1, m2) = (child1.len() as f64, child2.len() as f64);
    (m1 * compactness_dm(child1, ds) + m2 * compactness_dm(child2, ds)) / (m1 + m2)
}

/// Everything the split rule looks at for one cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterGeometry {
    pub mst: Vec<TreeEdge>,
    /// `None` for singletons.
    pub endpoints: Option<Endpoints>,
    pub euclid_dist: f64,
    pub mc: f64,
    pub dm: f64,
}

impl ClusterGeometry {
    pub fn compute(members: &[usize], ds: &Dataset) -> Self {
        let mst = build_mst(members, ds);
        let endpoints = find_endpoints(&mst).ok();
        let (euclid_dist, mc) = match &endpoints {
            Some(e) => (ds.distance(e.a, e.b), manifold_curvature(e, ds)),
            None => (0.0, 1.0),
        };
        ClusterGeometry {
            mst,
            endpoints,
            euclid_dist,
            mc,
            dm: compactness_dm(members, ds),
        }
    }

    pub fn path_dist(&self) -> f64 {
        self.endpoints.map_or(0.0, |e| e.path_dist)
    }
}

/// Which conditions may trigger a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Curvature, compactness and size gates.
    #[default]
    Full,
    /// Never split.
    NoSplit,
    /// Compactness and size gates only.
    CompactnessOnly,
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(SplitMode::Full),
            "no-split" | "nosplit" => Ok(SplitMode::NoSplit),
            "compactness-only" | "compactness" => Ok(SplitMode::CompactnessOnly),
            other => Err(Error::param("mode", format!("unknown split mode `{other}`"))),
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMode::Full => "full",
            SplitMode::NoSplit => "no-split",
            SplitMode::CompactnessOnly => "compactness-only",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitConfig {
    /// Curvature threshold.
    pub lambda: f64,
    /// Clusters of at most this many points are never split.
    pub beta: usize,
    /// Round cap; `None` uses `10 * log2(n)`.
    pub max_rounds: Option<usize>,
    pub mode: SplitMode,
    /// Use `mc >= lambda` instead of `mc > lambda`.
    pub inclusive_curvature: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            lambda: 1.5,
            beta: 8,
            max_rounds: None,
            mode: SplitMode::Full,
            inclusive_curvature: false,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return Err(Error::param("lambda", format!("must be finite and >= 1, got {}", self.lambda)));
        }
        if self.beta < 2 {
            return Err(Error::param("beta", format!("must be >= 2, got {}", self.beta)));
        }
        if self.max_rounds == Some(0) {
            return Err(Error::param("max_rounds", "must be >= 1"));
        }
        Ok(())
    }

    pub fn rounds_for(&self, n: usize) -> usize {
        self.max_rounds
            .unwrap_or_else(|| ((10.0 * (n.max(2) as f64).log2()).ceil() as usize).max(1))
    }

    fn curvature_passes(&self, mc: f64) -> bool {
        if self.inclusive_curvature {
            mc >= self.lambda
        } else {
            mc > self.lambda
        }
    }
}

/// One accepted split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitRecord {
    pub round: usize,
    /// Position of the parent in that round's cluster list.
    pub parent: usize,
    pub parent_size: usize,
    pub mc: f64,
    pub dm: f64,
    pub dm_weight: f64,
    pub child_sizes: [usize; 2],
}

/// Two children produced by [`split_once`], each seeded by one endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub child1: PseudoCluster,
    pub child2: PseudoCluster,
    pub mc: f64,
    pub dm: f64,
    pub dm_weight: f64,
}

/// Assigns every member to the nearer endpoint; ties go to `a` (the smaller
/// index), and each endpoint always keeps itself.
pub(crate) fn partition_by_endpoints(
    members: &[usize],
    a: usize,
    b: usize,
    ds: &Dataset,
) -> (Vec<usize>, Vec<usize>) {
    let (pa, pb) = (ds.point(a), ds.point(b));
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &p in members {
        let to_b = if p == a {
            false
        } else if p == b {
            true
        } else {
            let x = ds.point(p);
            crate::data::squared_distance(x, pb) < crate::data::squared_distance(x, pa)
        };
        if to_b {
            right.push(p);
        } else {
            left.push(p);
        }
    }
    (left, right)
}

/// Splits `cluster` at its MST endpoints when the configured gates pass.
pub fn split_once(cluster: &PseudoCluster, ds: &Dataset, cfg: &SplitConfig) -> Option<Split> {
    if cfg.mode == SplitMode::NoSplit || cluster.len() <= cfg.beta || cluster.len() < 2 {
        return None;
    }
    let members = &cluster.members;
    let mst = build_mst(members, ds);
    let ends = find_endpoints(&mst).ok()?;
    let mc = manifold_curvature(&ends, ds);
    if cfg.mode == SplitMode::Full && !cfg.curvature_passes(mc) {
        return None;
    }
    let dm = compactness_dm(members, ds);
    let (left, right) = partition_by_endpoints(members, ends.a, ends.b, ds);
    let dm_weight = weighted_dm(&left, &right, ds);
    if !(dm_weight < dm) {
        return None;
    }
    Some(Split {
        child1: PseudoCluster::new(ds, left, ends.a),
        child2: PseudoCluster::new(ds, right, ends.b),
        mc,
        dm,
        dm_weight,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub clusters: PseudoClusterSet,
    pub log: Vec<SplitRecord>,
    pub rounds: usize,
    /// True when the round cap stopped splitting early.
    pub exhausted: bool,
}

/// Splits clusters round by round until none qualifies or the round cap is
/// reached. A split cluster is replaced in place by its two children.
pub fn split_all(pcs: &PseudoClusterSet, ds: &Dataset, cfg: &SplitConfig) -> Result<SplitOutcome> {
    cfg.validate()?;
    let max_rounds = cfg.rounds_for(ds.len());
    let mut clusters: Vec<(PseudoCluster, bool)> =
        pcs.clusters().iter().cloned().map(|c| (c, true)).collect();
    let mut log = Vec::new();
    let mut rounds = 0;

    while rounds < max_rounds && clusters.iter().any(|(_, active)| *active) {
        let decisions: Vec<Option<Split>> = clusters
            .par_iter()
            .map(|(c, active)| if *active { split_once(c, ds, cfg) } else { None })
            .collect();
        let mut next = Vec::with_capacity(clusters.len() + 8);
        for (parent, ((cluster, _), decision)) in clusters.into_iter().zip(decisions).enumerate() {
            match decision {
                Some(s) => {
                    log.push(SplitRecord {
                        round: rounds,
                        parent,
                        parent_size: cluster.len(),
                        mc: s.mc,
                        dm: s.dm,
                        dm_weight: s.dm_weight,
                        child_sizes: [s.child1.len(), s.child2.len()],
                    });
                    next.push((s.child1, true));
                    next.push((s.child2, true));
                }
                None => next.push((cluster, false)),
            }
        }
        clusters = next;
        rounds += 1;
    }
    let exhausted = clusters.iter().any(|(_, active)| *active);
    if exhausted {
        log::warn!("split rounds exhausted after {rounds} rounds");
    }
    let clusters = PseudoClusterSet::new(ds.len(), clusters.into_iter().map(|(c, _)| c).collect())?;
    Ok(SplitOutcome {
        clusters,
        log,
        rounds,
        exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neighbors::build_pseudo_clusters;

    fn pts(rows: &[[f64; 2]]) -> Dataset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows("t", &rows, None).unwrap()
    }

    fn all(ds: &Dataset) -> Vec<usize> {
        (0..ds.len()).collect()
    }

    fn quadruple() -> Dataset {
        pts(&[[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
    }

    fn weight(edges: &[TreeEdge]) -> f64 {
        edges.iter().map(|e| e.weight).sum()
    }

    #[test]
    fn mst_of_right_angle_triple() {
        let ds = pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        let mst = build_mst(&all(&ds), &ds);
        let mut pairs: Vec<(usize, usize)> = mst.iter().map(|e| (e.u.min(e.v), e.u.max(e.v))).collect();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert_eq!(weight(&mst), 2.0);
    }

    #[test]
    fn mst_small_cases() {
        let ds = pts(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        assert!(build_mst(&[2], &ds).is_empty());
        let mut pairs: Vec<(usize, usize)> = build_mst(&all(&ds), &ds)
            .iter()
            .map(|e| (e.u.min(e.v), e.u.max(e.v)))
            .collect();
        pairs.sort_unstable();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn endpoints_examples() {
        let chain = [
            TreeEdge { u: 0, v: 1, weight: 1.0 },
            TreeEdge { u: 1, v: 2, weight: 1.0 },
        ];
        let e = find_endpoints(&chain).unwrap();
        assert_eq!((e.a, e.b, e.path_dist), (0, 2, 2.0));

        // star: center 0, leaves 1, 2, 3 at weights 1, 2, 3
        let star = [
            TreeEdge { u: 0, v: 1, weight: 1.0 },
            TreeEdge { u: 0, v: 2, weight: 2.0 },
            TreeEdge { u: 3, v: 0, weight: 3.0 },
        ];
        let e = find_endpoints(&star).unwrap();
        assert_eq!((e.a, e.b, e.path_dist), (2, 3, 5.0));

        let single = [TreeEdge { u: 4, v: 9, weight: 0.5 }];
        let e = find_endpoints(&single).unwrap();
        assert_eq!((e.a, e.b, e.path_dist), (4, 9, 0.5));

        assert!(find_endpoints(&[]).is_err());
    }

    #[test]
    fn curvature_examples() {
        let line = pts(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert_eq!(ClusterGeometry::compute(&all(&line), &line).mc, 1.0);

        let bend = pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        let g = ClusterGeometry::compute(&all(&bend), &bend);
        assert!((g.mc - 2.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((g.mc - 1.41421).abs() < 1e-5);

        let dup = pts(&[[1.0, 1.0], [1.0, 1.0]]);
        let ends = Endpoints { a: 0, b: 1, path_dist: 0.0 };
        assert_eq!(manifold_curvature(&ends, &dup), f64::INFINITY);
    }

    #[test]
    fn compactness_examples() {
        let same = pts(&[[2.0, 3.0], [2.0, 3.0], [2.0, 3.0]]);
        assert_eq!(compactness_dm(&all(&same), &same), 0.0);

        let pair = pts(&[[0.0, 0.0], [2.0, 0.0]]);
        assert_eq!(compactness_dm(&all(&pair), &pair), 1.0);

        let q = quadruple();
        assert!((compactness_dm(&all(&q), &q) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_compactness_examples() {
        let q = quadruple();
        assert!((weighted_dm(&[0, 1], &[2, 3], &q) - 0.05).abs() < 1e-12);

        let same = pts(&[[1.0, 1.0], [1.0, 1.0], [4.0, 4.0]]);
        assert_eq!(weighted_dm(&[0, 1], &[2], &same), 0.0);

        // equal child DM: weighted value is that DM whatever the sizes
        let ds = pts(&[[0.0, 0.0], [2.0, 0.0], [10.0, 0.0], [12.0, 0.0], [10.0, 0.0], [12.0, 0.0]]);
        assert!((weighted_dm(&[0, 1], &[2, 3, 4, 5], &ds) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_gates() {
        let line = pts(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let c = PseudoCluster::new(&line, all(&line), 1);
        let cfg = SplitConfig { beta: 2, ..Default::default() };
        assert!(split_once(&c, &line, &cfg).is_none());

        let q = quadruple();
        let c = PseudoCluster::new(&q, all(&q), 0);
        let full = SplitConfig { beta: 2, ..Default::default() };
        let g = ClusterGeometry::compute(&c.members, &q);
        assert_eq!(g.endpoints.map(|e| (e.a, e.b)), Some((0, 3)));
        assert!((g.mc - 1.0).abs() < 1e-12);
        assert!(split_once(&c, &q, &full).is_none());

        let compact = SplitConfig { mode: SplitMode::CompactnessOnly, ..full.clone() };
        let s = split_once(&c, &q, &compact).unwrap();
        assert_eq!(s.child1.members, vec![0, 1]);
        assert_eq!(s.child2.members, vec![2, 3]);
        assert!((s.dm_weight - 0.05).abs() < 1e-12 && (s.dm - 5.0).abs() < 1e-12);
        assert_eq!((s.child1.core, s.child2.core), (0, 3));

        let size_gated = SplitConfig { beta: 4, ..compact };
        assert!(split_once(&c, &q, &size_gated).is_none());
    }

    #[test]
    fn config_validation() {
        assert!(SplitConfig::default().validate().is_ok());
        assert!(SplitConfig { lambda: 0.5, ..Default::default() }.validate().is_err());
        assert!(SplitConfig { beta: 1, ..Default::default() }.validate().is_err());
        assert!(SplitConfig { max_rounds: Some(0), ..Default::default() }.validate().is_err());
        assert_eq!("compactness-only".parse::<SplitMode>().unwrap(), SplitMode::CompactnessOnly);
    }

    #[test]
    fn inclusive_threshold() {
        // right-angle triple padded so the size gate passes
        let ds = pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        let c = PseudoCluster::new(&ds, all(&ds), 1);
        let lambda = ClusterGeometry::compute(&c.members, &ds).mc;
        let strict = SplitConfig { beta: 2, lambda, ..Default::default() };
        assert!(split_once(&c, &ds, &strict).is_none());
        let inclusive = SplitConfig { inclusive_curvature: true, ..strict };
        assert!(split_once(&c, &ds, &inclusive).is_some());
    }

    fn l_shape() -> Dataset {
        let mut rows = Vec::new();
        for i in 0..20 {
            rows.push([i as f64 * 0.1, 0.0]);
        }
        for i in 1..=20 {
            rows.push([1.9, i as f64 * 0.1]);
        }
        pts(&rows)
    }

    #[test]
    fn l_shape_splits_into_straight_pieces() {
        let ds = l_shape();
        let whole = PseudoClusterSet::whole(&ds);
        assert!(ClusterGeometry::compute(&whole.clusters()[0].members, &ds).mc > 1.3);
        let cfg = SplitConfig { lambda: 1.2, ..Default::default() };
        let out = split_all(&whole, &ds, &cfg).unwrap();
        assert!(!out.exhausted);
        assert!(out.clusters.len() >= 2);
        for c in out.clusters.clusters() {
            let mc = ClusterGeometry::compute(&c.members, &ds).mc;
            assert!(mc <= 1.2 || c.len() <= cfg.beta, "mc {mc} size {}", c.len());
        }
        let first = &out.log[0];
        assert_eq!(first.parent_size, 40);
        assert!((first.mc - 3.9 / (1.9f64.powi(2) + 2.0f64.powi(2)).sqrt()).abs() < 1e-9);
        assert_eq!(out.clusters.len(), 2);

        // two straight legs can never bend past sqrt(2), so the default
        // threshold leaves the L whole
        let out = split_all(&whole, &ds, &SplitConfig::default()).unwrap();
        assert_eq!(out.clusters.len(), 1);
    }

    #[test]
    fn u_shape_splits_at_default_threshold() {
        let mut rows = Vec::new();
        for i in 0..15 {
            rows.push([0.0, 1.5 - i as f64 * 0.1]);
        }
        for i in 0..10 {
            rows.push([0.1 + i as f64 * 0.1, 0.0]);
        }
        for i in 0..15 {
            rows.push([1.0, 0.1 + i as f64 * 0.1]);
        }
        let ds = pts(&rows);
        let whole = PseudoClusterSet::whole(&ds);
        assert!(ClusterGeometry::compute(&whole.clusters()[0].members, &ds).mc > 1.5);
        let out = split_all(&whole, &ds, &SplitConfig::default()).unwrap();
        assert!(out.clusters.len() >= 2);
        for c in out.clusters.clusters() {
            let mc = ClusterGeometry::compute(&c.members, &ds).mc;
            assert!(mc <= 1.5 || c.len() <= 8, "mc {mc} size {}", c.len());
        }
        for rec in &out.log {
            assert!(rec.dm_weight < rec.dm);
        }
    }

    #[test]
    fn split_all_passthrough_cases() {
        let ds = l_shape();
        let pcs = build_pseudo_clusters(&ds, 3).unwrap();
        let none = SplitConfig { mode: SplitMode::NoSplit, ..Default::default() };
        let out = split_all(&pcs, &ds, &none).unwrap();
        assert_eq!(out.clusters, pcs);
        assert!(out.log.is_empty());

        let big_beta = SplitConfig { beta: 1000, ..Default::default() };
        assert_eq!(split_all(&pcs, &ds, &big_beta).unwrap().clusters, pcs);
    }
}
