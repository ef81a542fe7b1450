//! Lloyd's k-means with k-means++ seeding and restarts.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::squared_distance;

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centers: Vec<f64>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    pub iterations: usize,
}

/// Best of `restarts` runs by inertia (earliest wins ties). `data` is
/// row-major `n x dim`; requires `1 <= k <= n`.
pub fn kmeans(
    data: &[f64],
    dim: usize,
    k: usize,
    restarts: usize,
    max_iter: usize,
    rng: &mut ChaCha8Rng,
) -> KMeansFit {
    let n = data.len() / dim;
    assert!(k >= 1 && k <= n, "k-means needs 1 <= k <= n (k = {k}, n = {n})");
    let mut best: Option<KMeansFit> = None;
    for _ in 0..restarts.max(1) {
        let fit = lloyd(data, dim, k, max_iter, rng);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart")
}

fn row(data: &[f64], dim: usize, i: usize) -> &[f64] {
    &data[i * dim..(i + 1) * dim]
}

fn plus_plus_seeds(data: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = data.len() / dim;
    let mut centers = Vec::with_capacity(k * dim);
    centers.extend_from_slice(row(data, dim, rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(row(data, dim, i), &centers[..dim]))
        .collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            // rounding can walk past the end; fall back to the last positive weight
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|&w| w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = row(data, dim, pick).to_vec();
        for (i, slot) in d2.iter_mut().enumerate() {
            *slot = slot.min(squared_distance(row(data, dim, i), &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

fn lloyd(data: &[f64], dim: usize, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> KMeansFit {
    let n = data.len() / dim;
    let mut centers = plus_plus_seeds(data, dim, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        for i in 0..n {
            let x = row(data, dim, i);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = squared_distance(x, row(&centers, dim, c));
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        changed |= repair_empty(data, dim, k, &mut labels, &centers);
        recompute_centers(data, dim, k, &labels, &mut centers);
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| squared_distance(row(data, dim, i), row(&centers, dim, labels[i])))
        .sum();
    KMeansFit {
        labels,
        centers,
        inertia,
        iterations,
    }
}

/// Gives every empty cluster the point of the largest cluster that lies
/// farthest from that cluster's center.
fn repair_empty(data: &[f64], dim: usize, k: usize, labels: &mut [usize], centers: &[f64]) -> bool {
    let mut repaired = false;
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return repaired;
        };
        let largest = (0..k).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
        if sizes[largest] < 2 {
            return repaired;
        }
        let victim = (0..labels.len())
            .filter(|&i| labels[i] == largest)
            .max_by(|&a, &b| {
                let da = squared_distance(row(data, dim, a), row(centers, dim, largest));
                let db = squared_distance(row(data, dim, b), row(centers, dim, largest));
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .unwrap();
        labels[victim] = empty;
        repaired = true;
    }
}

fn recompute_centers(data: &[f64], dim: usize, k: usize, labels: &[usize], centers: &mut [f64]) {
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (s, v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(row(data, dim, i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            for j in 0..dim {
                centers[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
            }
        }
    }
}
