//! Exact nearest-neighbor search over a fixed point set.
//!
//! The index is a kd-tree with per-node bounding boxes. Query results are
//! defined to be identical to brute-force Euclidean search with ties broken
//! by lowest point index, so candidates are ordered by `(distance², index)`
//! and a subtree is pruned only when its box distance strictly exceeds the
//! current worst candidate.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::cloud::dist2;

const LEAF_SIZE: usize = 24;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: [f64; 3],
    max: [f64; 3],
}

impl Aabb {
    fn of(points: &[[f64; 3]], idx: &[u32]) -> Aabb {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for &i in idx {
            let p = &points[i as usize];
            for a in 0..3 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        Aabb { min, max }
    }

    /// Squared distance from `q` to this box, summed axis by axis in x,y,z
    /// order so it never exceeds the identically-ordered point distance of
    /// any contained point.
    #[inline]
    fn dist2_to(&self, q: &[f64; 3]) -> f64 {
        let mut d2 = 0.0;
        for a in 0..3 {
            let t = if q[a] < self.min[a] {
                self.min[a] - q[a]
            } else if q[a] > self.max[a] {
                q[a] - self.max[a]
            } else {
                0.0
            };
            d2 += t * t;
        }
        d2
    }
}

#[derive(Debug)]
enum Node {
    Leaf {
        bbox: Aabb,
        start: usize,
        end: usize,
    },
    Split {
        bbox: Aabb,
        left: usize,
        right: usize,
    },
}

/// Immutable exact k-NN / radius index over a fixed point list.
#[derive(Debug)]
pub struct SpatialIndex {
    points: Vec<[f64; 3]>,
    nodes: Vec<Node>,
    /// Point indices, partitioned into contiguous leaf ranges.
    order: Vec<u32>,
    root: usize,
}

/// Max-heap entry ordered by (distance², index); the heap top is the
/// current worst candidate.
#[derive(PartialEq)]
struct Candidate {
    d2: f64,
    idx: u32,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl SpatialIndex {
    /// Build an index over a copy of `points`.
    pub fn build(points: &[[f64; 3]]) -> Result<SpatialIndex> {
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "cannot index an empty point set".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coordinate at point {i}"
                )));
            }
        }
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        let root = build_node(points, &mut order, 0, points.len(), &mut nodes);
        Ok(SpatialIndex {
            points: points.to_vec(),
            nodes,
            order,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    /// Exact k nearest neighbors of `query`, ascending by distance with
    /// lowest-index tie-breaking. Returns `(point index, distance)` pairs.
    pub fn knn(&self, query: &[f64; 3], k: usize) -> Result<Vec<(usize, f64)>> {
        if k == 0 {
            return Err(Error::InvalidArgument("knn requires k >= 1".into()));
        }
        if k > self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "knn k={} exceeds point count {}",
                k,
                self.points.len()
            )));
        }
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(self.root, query, k, &mut heap);
        let mut out: Vec<(usize, f64)> = heap
            .into_sorted_vec()
            .into_iter()
            .map(|c| (c.idx as usize, c.d2.sqrt()))
            .collect();
        debug_assert_eq!(out.len(), k);
        out.shrink_to_fit();
        Ok(out)
    }

    fn knn_rec(&self, node: usize, q: &[f64; 3], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match &self.nodes[node] {
            Node::Leaf { start, end, .. } => {
                for &i in &self.order[*start..*end] {
                    let d2 = dist2(q, &self.points[i as usize]);
                    let cand = Candidate { d2, idx: i };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(cand);
                    }
                }
            }
            Node::Split { left, right, .. } => {
                let (dl, dr) = (self.node_bbox(*left).dist2_to(q), self.node_bbox(*right).dist2_to(q));
                let (first, second, d_second) = if dl <= dr {
                    (*left, *right, dr)
                } else {
                    (*right, *left, dl)
                };
                self.knn_rec(first, q, k, heap);
                // Equal box distance may still hold an equal-distance,
                // lower-index point, so prune only on strict excess.
                if heap.len() < k || d_second <= heap.peek().unwrap().d2 {
                    self.knn_rec(second, q, k, heap);
                }
            }
        }
    }

    /// All points within Euclidean distance `radius` (inclusive) of `query`,
    /// ascending by distance with lowest-index tie-breaking.
    pub fn radius(&self, query: &[f64; 3], radius: f64) -> Result<Vec<(usize, f64)>> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius must be non-negative, got {radius}"
            )));
        }
        let r2 = radius * radius;
        let mut hits: Vec<(f64, u32)> = Vec::new();
        self.radius_rec(self.root, query, r2, &mut hits);
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(hits
            .into_iter()
            .map(|(d2, i)| (i as usize, d2.sqrt()))
            .collect())
    }

    fn radius_rec(&self, node: usize, q: &[f64; 3], r2: f64, hits: &mut Vec<(f64, u32)>) {
        match &self.nodes[node] {
            Node::Leaf { start, end, .. } => {
                for &i in &self.order[*start..*end] {
                    let d2 = dist2(q, &self.points[i as usize]);
                    if d2 <= r2 {
                        hits.push((d2, i));
                    }
                }
            }
            Node::Split { left, right, .. } => {
                if self.node_bbox(*left).dist2_to(q) <= r2 {
                    self.radius_rec(*left, q, r2, hits);
                }
                if self.node_bbox(*right).dist2_to(q) <= r2 {
                    self.radius_rec(*right, q, r2, hits);
                }
            }
        }
    }

    fn node_bbox(&self, node: usize) -> &Aabb {
        match &self.nodes[node] {
            Node::Leaf { bbox, .. } => bbox,
            Node::Split { bbox, .. } => bbox,
        }
    }
}

fn build_node(
    points: &[[f64; 3]],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let bbox = Aabb::of(points, &order[start..end]);
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bbox, start, end });
        return nodes.len() - 1;
    }
    // Split at the median of the widest axis.
    let mut axis = 0;
    let mut width = bbox.max[0] - bbox.min[0];
    for a in 1..3 {
        let w = bbox.max[a] - bbox.min[a];
        if w > width {
            width = w;
            axis = a;
        }
    }
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        points[a as usize][axis]
            .total_cmp(&points[b as usize][axis])
            .then(a.cmp(&b))
    });
    let left = build_node(points, order, start, mid, nodes);
    let right = build_node(points, order, mid, end, nodes);
    nodes.push(Node::Split { bbox, left, right });
    nodes.len() - 1
}

/// Brute-force k-NN with the same (distance, index) ordering as the index.
/// Kept public for oracle tests and small ad hoc queries.
pub fn brute_force_knn(points: &[[f64; 3]], query: &[f64; 3], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (dist2(query, p), i))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    all.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
}
