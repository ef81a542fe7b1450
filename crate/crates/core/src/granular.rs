//! Granular-ball baseline: top-down farthest-pair splitting under the
//! weighted-compactness rule.

use serde::Serialize;

use crate::data::{euclidean, squared_distance, Dataset};
use crate::error::{Error, Result};
use crate::neighbors::{PseudoCluster, PseudoClusterSet};
use crate::split::{compactness_dm, weighted_dm};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GranularBall {
    pub members: Vec<usize>,
    pub center: Vec<f64>,
    pub radius: f64,
    pub dm: f64,
}

impl GranularBall {
    pub fn new(mut members: Vec<usize>, ds: &Dataset) -> Self {
        members.sort_unstable();
        let center = ds.centroid(&members);
        let radius = members
            .iter()
            .map(|&i| euclidean(ds.point(i), &center))
            .fold(0.0, f64::max);
        let dm = compactness_dm(&members, ds);
        GranularBall {
            members,
            center,
            radius,
            dm,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The two members farthest apart, lexicographically first on ties.
pub fn farthest_pair(members: &[usize], ds: &Dataset) -> Result<(usize, usize)> {
    if members.len() < 2 {
        return Err(Error::param("members", "need at least 2 members"));
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let mut best = (sorted[0], sorted[1]);
    let mut best_sq = f64::NEG_INFINITY;
    for (x, &i) in sorted.iter().enumerate() {
        let pi = ds.point(i);
        for &j in &sorted[x + 1..] {
            let sq = squared_distance(pi, ds.point(j));
            if sq > best_sq {
                best_sq = sq;
                best = (i, j);
            }
        }
    }
    Ok(best)
}

/// One accepted ball split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallSplitRecord {
    pub parent_size: usize,
    pub dm: f64,
    pub dm_weight: f64,
    pub child_sizes: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallOutcome {
    pub balls: Vec<GranularBall>,
    pub log: Vec<BallSplitRecord>,
}

impl BallOutcome {
    /// The balls as a micro-cluster partition. Each ball's representative is
    /// the member nearest its center.
    pub fn to_partition(&self, ds: &Dataset) -> PseudoClusterSet {
        let clusters = self
            .balls
            .iter()
            .map(|b| {
                let core = *b
                    .members
                    .iter()
                    .min_by(|&&x, &&y| {
                        squared_distance(ds.point(x), &b.center)
                            .total_cmp(&squared_distance(ds.point(y), &b.center))
                    })
                    .expect("balls are non-empty");
                PseudoCluster {
                    members: b.members.clone(),
                    core,
                    centroid: b.center.clone(),
                }
            })
            .collect();
        PseudoClusterSet::new(ds.len(), clusters).expect("balls partition the dataset")
    }
}

/// Starts from one ball over the whole dataset and splits any ball with more
/// than `min_size` members whose children are more compact on average.
/// Balls are processed in ascending id order; the children of a split ball
/// take its place.
pub fn gb_generate(ds: &Dataset, min_size: usize) -> Result<BallOutcome> {
    if min_size < 2 {
        return Err(Error::param("min_size", format!("must be >= 2, got {min_size}")));
    }
    let mut pending = vec![GranularBall::new((0..ds.len()).collect(), ds)];
    let mut done = Vec::new();
    let mut log = Vec::new();
    // depth-first with a stack keeps children adjacent to each other
    pending.reverse();
    while let Some(ball) = pending.pop() {
        match try_split(&ball, ds, min_size) {
            Some((left, right, dm_weight)) => {
                log.push(BallSplitRecord {
                    parent_size: ball.len(),
                    dm: ball.dm,
                    dm_weight,
                    child_sizes: [left.len(), right.len()],
                });
                pending.push(right);
                pending.push(left);
            }
            None => done.push(ball),
        }
    }
    Ok(BallOutcome { balls: done, log })
}

fn try_split(
    ball: &GranularBall,
    ds: &Dataset,
    min_size: usize,
) -> Option<(GranularBall, GranularBall, f64)> {
    if ball.len() <= min_size {
        return None;
    }
    let (p1, p2) = farthest_pair(&ball.members, ds).ok()?;
    if ds.distance(p1, p2) == 0.0 {
        return None;
    }
    let (a, b) = (ds.point(p1), ds.point(p2));
    let (left, right): (Vec<usize>, Vec<usize>) = ball
        .members
        .iter()
        .partition(|&&i| squared_distance(ds.point(i), a) <= squared_distance(ds.point(i), b));
    let dm_weight = weighted_dm(&left, &right, ds);
    if !(dm_weight < ball.dm) {
        return None;
    }
    Some((GranularBall::new(left, ds), GranularBall::new(right, ds), dm_weight))
}
