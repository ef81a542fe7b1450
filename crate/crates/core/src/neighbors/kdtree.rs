//! Exact k-nearest-neighbor search over a static point set.
//!
//! Candidates are ordered by `(squared distance, index)`, so results are
//! identical to a brute-force scan, ties included.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::data::{squared_distance, Dataset};

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub sq: f64,
    pub index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sq
            .total_cmp(&other.sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

pub(crate) struct KdTree<'a> {
    ds: &'a Dataset,
    order: Vec<usize>,
    root: Node,
}

impl<'a> KdTree<'a> {
    pub fn build(ds: &'a Dataset) -> Self {
        let mut order: Vec<usize> = (0..ds.len()).collect();
        let n = order.len();
        let root = build_node(ds, &mut order, 0, n);
        KdTree { ds, order, root }
    }

    /// The `k` nearest points to point `query`, excluding `query` itself,
    /// sorted ascending.
    pub fn query(&self, query: usize, k: usize) -> Vec<Candidate> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(&self.root, self.ds.point(query), query, k, &mut heap);
        heap.into_sorted_vec()
    }

    fn search(
        &self,
        node: &Node,
        q: &[f64],
        skip: usize,
        k: usize,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match node {
            Node::Leaf { start, end } => {
                for &idx in &self.order[*start..*end] {
                    if idx == skip {
                        continue;
                    }
                    let cand = Candidate {
                        sq: squared_distance(q, self.ds.point(idx)),
                        index: idx,
                    };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().expect("heap holds k items") {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[*axis] - value;
                let (near, far) = if diff <= 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, skip, k, heap);
                // equal bounds must still be visited: a tie with a smaller
                // index may live on the far side
                let bound = diff * diff;
                if heap.len() < k || bound <= heap.peek().map_or(f64::INFINITY, |c| c.sq) {
                    self.search(far, q, skip, k, heap);
                }
            }
        }
    }
}

fn build_node(ds: &Dataset, order: &mut [usize], start: usize, end: usize) -> Node {
    let slice = &mut order[start..end];
    if slice.len() <= LEAF_SIZE {
        return Node::Leaf { start, end };
    }
    let dim = ds.dim();
    let mut axis = 0;
    let mut best_spread = f64::NEG_INFINITY;
    for a in 0..dim {
        let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = ds.point(i)[a];
            (lo.min(v), hi.max(v))
        });
        if hi - lo > best_spread {
            best_spread = hi - lo;
            axis = a;
        }
    }
    if best_spread <= 0.0 {
        return Node::Leaf { start, end };
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        ds.point(a)[axis]
            .total_cmp(&ds.point(b)[axis])
            .then(a.cmp(&b))
    });
    let value = ds.point(slice[mid])[axis];
    // left holds coordinates <= value, right holds coordinates >= value
    let left = build_node(ds, order, start, start + mid);
    let right = build_node(ds, order, start + mid, end);
    Node::Split {
        axis,
        value,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Exhaustive scan with the same ordering as the tree.
pub(crate) fn brute_force_query(ds: &Dataset, query: usize, k: usize) -> Vec<Candidate> {
    let q = ds.point(query);
    let mut heap = BinaryHeap::with_capacity(k + 1);
    for idx in (0..ds.len()).filter(|&i| i != query) {
        let cand = Candidate {
            sq: squared_distance(q, ds.point(idx)),
            index: idx,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().expect("heap holds k items") {
            heap.pop();
            heap.push(cand);
        }
    }
    heap.into_sorted_vec()
}
