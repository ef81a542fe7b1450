//! Exact algorithms checked against slow, independent reference versions.

use std::collections::HashMap;

use mdmsc_core::graph::eigen::{jacobi_eigen, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE};
use mdmsc_core::metrics::{acc, hungarian};
use mdmsc_core::split::{build_mst, find_endpoints};
use mdmsc_core::{compute_knn, Dataset};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(n: usize, d: usize, grid: bool, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..n * d)
        .map(|_| {
            if grid {
                rng.random_range(0..6) as f64
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    Dataset::new("r", pts, d, None).unwrap()
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn brute_knn(ds: &Dataset, i: usize, k: usize) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = (0..ds.len())
        .filter(|&j| j != i)
        .map(|j| (sq(ds.point(i), ds.point(j)), j))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all
}

/// Kruskal over every pair.
fn brute_mst_weight(members: &[usize], ds: &Dataset) -> f64 {
    let mut edges = Vec::new();
    for (x, &a) in members.iter().enumerate() {
        for &b in &members[x + 1..] {
            edges.push((sq(ds.point(a), ds.point(b)).sqrt(), x, members.iter().position(|&m| m == b).unwrap()));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let mut total = 0.0;
    for (w, a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            total += w;
        }
    }
    total
}

/// Largest tree-path length between any two vertices, by a search from every
/// vertex.
fn brute_tree_diameter(edges: &[(usize, usize, f64)]) -> f64 {
    let mut adj: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
    for &(u, v, w) in edges {
        adj.entry(u).or_default().push((v, w));
        adj.entry(v).or_default().push((u, w));
    }
    let mut best: f64 = 0.0;
    for &start in adj.keys() {
        let mut stack = vec![(start, usize::MAX, 0.0)];
        while let Some((node, from, dist)) = stack.pop() {
            best = best.max(dist);
            for &(next, w) in &adj[&node] {
                if next != from {
                    stack.push((next, node, dist + w));
                }
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn knn_equals_all_pairs_search(
        n in 2usize..=2000,
        d in 1usize..=20,
        k in 1usize..=20,
        grid in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let ds = random_dataset(n, d, grid, seed);
        let table = compute_knn(&ds, k).unwrap();
        let k = k.min(n - 1);
        prop_assert_eq!(table.k(), k);
        for i in 0..n {
            let want = brute_knn(&ds, i, k);
            let idx: Vec<usize> = want.iter().map(|w| w.1).collect();
            let dist: Vec<f64> = want.iter().map(|w| w.0).collect();
            prop_assert_eq!(table.neighbors(i), &idx[..]);
            prop_assert_eq!(table.squared_distances(i), &dist[..]);
        }
    }

    #[test]
    fn mst_weight_and_diameter_match_brute_force(
        m in 1usize..=200,
        d in 1usize..=4,
        grid in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let ds = random_dataset(m + 5, d, grid, seed);
        // a non-contiguous member subset
        let members: Vec<usize> = (0..m + 5).filter(|i| i % 7 != 3).take(m).collect();
        let mst = build_mst(&members, &ds);
        prop_assert_eq!(mst.len(), members.len() - 1);
        let total: f64 = mst.iter().map(|e| e.weight).sum();
        let oracle = brute_mst_weight(&members, &ds);
        prop_assert!((total - oracle).abs() <= 1e-9 * oracle.max(1.0), "{} vs {}", total, oracle);

        if members.len() >= 2 {
            let ends = find_endpoints(&mst).unwrap();
            let edges: Vec<(usize, usize, f64)> = mst.iter().map(|e| (e.u, e.v, e.weight)).collect();
            let diam = brute_tree_diameter(&edges);
            prop_assert!((ends.path_dist - diam).abs() <= 1e-9 * diam.max(1.0));
            prop_assert!(ends.a < ends.b);
            prop_assert!(members.contains(&ends.a) && members.contains(&ends.b));
        }
    }

    #[test]
    fn hungarian_accuracy_equals_permutation_search(
        n in 1usize..100,
        kp in 1usize..=7,
        kt in 1usize..=7,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..kp)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..kt)).collect();
        let mut table = [[0usize; 7]; 7];
        for (&p, &t) in pred.iter().zip(&truth) {
            table[p][t] += 1;
        }
        let mut perm: Vec<usize> = (0..7).collect();
        let mut best = 0;
        permute(&mut perm, 0, &mut |p| {
            best = best.max((0..7).map(|r| table[r][p[r]]).sum::<usize>());
        });
        prop_assert!((acc(&pred, &truth).unwrap() - best as f64 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn hungarian_cost_is_optimal_on_rectangles(rows in 1usize..=6, extra in 0usize..=2, seed in any::<u64>()) {
        let cols = rows + extra;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cost: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-5.0..5.0)).collect();
        let assign = hungarian(&cost, rows, cols);
        let got: f64 = (0..rows).map(|r| cost[r * cols + assign[r]]).sum();
        let mut perm: Vec<usize> = (0..cols).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            best = best.min((0..rows).map(|r| cost[r * cols + p[r]]).sum::<f64>());
        });
        prop_assert!((got - best).abs() < 1e-9);
    }

    #[test]
    fn jacobi_agrees_with_dense_reference(m in 1usize..=50, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = rng.random_range(-1.0..1.0);
                a[i * m + j] = v;
                a[j * m + i] = v;
            }
        }
        let ours = jacobi_eigen(&a, m, DEFAULT_MAX_SWEEPS, DEFAULT_TOLERANCE).unwrap();
        let reference = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_row_slice(m, m, &a));
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| reference.eigenvalues[x].total_cmp(&reference.eigenvalues[y]));
        for (j, &r) in order.iter().enumerate() {
            let want = reference.eigenvalues[r];
            prop_assert!((ours.values[j] - want).abs() < 1e-8, "eigenvalue {}: {} vs {}", j, ours.values[j], want);
            // compare vectors only where the eigenvalue is well separated
            let gap = order
                .iter()
                .filter(|&&o| o != r)
                .map(|&o| (reference.eigenvalues[o] - want).abs())
                .fold(f64::INFINITY, f64::min);
            if gap > 1e-3 {
                let v = reference.eigenvectors.column(r);
                let dot: f64 = ours.vector(j).iter().zip(v.iter()).map(|(x, y)| x * y).sum();
                // sine of the angle between the two lines
                let sin = (1.0 - dot * dot).max(0.0).sqrt();
                prop_assert!(sin < 1e-6, "vector {} off by angle {}", j, sin);
            }
        }
    }
}

fn permute(p: &mut Vec<usize>, at: usize, visit: &mut dyn FnMut(&[usize])) {
    if at == p.len() {
        visit(p);
        return;
    }
    for i in at..p.len() {
        p.swap(at, i);
        permute(p, at + 1, visit);
        p.swap(at, i);
    }
}
