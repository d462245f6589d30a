//! Exact k-nearest-neighbour search (Euclidean) and the k-NN volume transforms.
//!
//! Neighbours are ordered by `(squared distance, point index)`, so ties are broken by the
//! smaller index. The kd-tree and the brute-force path compute squared distances with the
//! same routine and therefore return identical results, including on exact ties.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::special::ln_gamma;

pub const DEFAULT_LEAF_SIZE: usize = 32;

/// `ln V_d`, the log-volume of the unit Euclidean ball in R^d.
pub fn ln_unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let half = 0.5 * d as f64;
    Ok(half * std::f64::consts::PI.ln() - ln_gamma(1.0 + half))
}

/// `V_d = pi^{d/2} / Gamma(1 + d/2)`. Small dimensions use `V_d = V_{d-2} 2 pi / d`,
/// which is exact to rounding; large ones go through log-gamma.
pub fn unit_ball_volume(d: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if d > 64 {
        return Ok(ln_unit_ball_volume(d)?.exp());
    }
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut j = 2 + d % 2;
    while j <= d {
        v *= 2.0 * std::f64::consts::PI / j as f64;
        j += 2;
    }
    Ok(v)
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

/// One neighbour of a query: its index in the indexed set and squared distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist2: f64,
}

impl Neighbor {
    pub fn distance(&self) -> f64 {
        self.dist2.sqrt()
    }
}

impl Eq for Neighbor {}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

/// A kd-tree over a borrowed point set. Each node keeps its bounding box, which is used
/// for exact pruning.
#[derive(Debug, Clone)]
pub struct KnnIndex<'a> {
    points: &'a PointSet,
    order: Vec<usize>,
    nodes: Vec<Node>,
    bounds: Vec<f64>,
}

/// Bounded max-heap of the best `k` candidates seen so far.
struct Best {
    k: usize,
    heap: BinaryHeap<Neighbor>,
}

impl Best {
    fn new(k: usize) -> Self {
        Best {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    fn worst(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |n| n.dist2)
        }
    }

    fn offer(&mut self, cand: Neighbor) {
        if self.heap.len() < self.k {
            self.heap.push(cand);
        } else if let Some(top) = self.heap.peek() {
            if cand < *top {
                self.heap.pop();
                self.heap.push(cand);
            }
        }
    }

    fn into_sorted(self) -> Vec<Neighbor> {
        self.heap.into_sorted_vec()
    }
}

impl<'a> KnnIndex<'a> {
    pub fn new(points: &'a PointSet) -> Self {
        Self::with_leaf_size(points, DEFAULT_LEAF_SIZE)
    }

    pub fn with_leaf_size(points: &'a PointSet, leaf_size: usize) -> Self {
        let leaf_size = leaf_size.max(1);
        let mut index = KnnIndex {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        index.build(0, points.len(), leaf_size);
        index
    }

    pub fn points(&self) -> &'a PointSet {
        self.points
    }

    fn build(&mut self, start: usize, end: usize, leaf_size: usize) -> usize {
        let d = self.points.dim();
        let id = self.nodes.len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.order[start..end] {
            for (j, &c) in self.points.point(i).iter().enumerate() {
                lo[j] = lo[j].min(c);
                hi[j] = hi[j].max(c);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= leaf_size {
            return id;
        }
        let (dim, spread) = (0..d)
            .map(|j| (j, hi[j] - lo[j]))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if spread <= 0.0 {
            // All points coincide; a leaf is as good as any split.
            return id;
        }
        let mid = start + (end - start) / 2;
        let pts = self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts.point(a)[dim]
                .total_cmp(&pts.point(b)[dim])
                .then(a.cmp(&b))
        });
        let left = self.build(start, mid, leaf_size);
        let right = self.build(mid, end, leaf_size);
        self.nodes[id] = Node::Inner { left, right };
        id
    }

    fn box_distance2(&self, node: usize, q: &[f64]) -> f64 {
        let d = q.len();
        let b = &self.bounds[2 * d * node..2 * d * (node + 1)];
        let mut s = 0.0;
        for j in 0..d {
            let gap = if q[j] < b[j] {
                b[j] - q[j]
            } else if q[j] > b[d + j] {
                q[j] - b[d + j]
            } else {
                0.0
            };
            s += gap * gap;
        }
        s
    }

    fn check_query(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Result<()> {
        if q.len() != self.points.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.points.dim(),
                found: q.len(),
            });
        }
        let available = self.points.len() - exclude.map_or(0, |e| (e < self.points.len()) as usize);
        if k == 0 || k > available {
            return Err(Error::InsufficientPoints {
                needed: k.max(1),
                available,
            });
        }
        Ok(())
    }

    /// The `k` nearest neighbours of `q`, nearest first, skipping the index `exclude`.
    pub fn query(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<Neighbor>> {
        self.check_query(q, k, exclude)?;
        let mut best = Best::new(k);
        let mut stack = vec![(0usize, 0.0f64)];
        while let Some((node, bd)) = stack.pop() {
            if bd > best.worst() {
                continue;
            }
            match self.nodes[node] {
                Node::Leaf { start, end } => {
                    for &i in &self.order[start..end] {
                        if Some(i) == exclude {
                            continue;
                        }
                        let d2 = squared_distance(q, self.points.point(i));
                        best.offer(Neighbor { index: i, dist2: d2 });
                    }
                }
                Node::Inner { left, right } => {
                    let dl = self.box_distance2(left, q);
                    let dr = self.box_distance2(right, q);
                    // Push the farther child first so the nearer one is searched first.
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
            }
        }
        Ok(best.into_sorted())
    }

    /// Reference implementation scanning every point.
    pub fn query_brute(&self, q: &[f64], k: usize, exclude: Option<usize>) -> Result<Vec<Neighbor>> {
        self.check_query(q, k, exclude)?;
        let mut best = Best::new(k);
        for (i, p) in self.points.iter().enumerate() {
            if Some(i) != exclude {
                best.offer(Neighbor {
                    index: i,
                    dist2: squared_distance(q, p),
                });
            }
        }
        Ok(best.into_sorted())
    }
}

/// `r_k(x)`: distance from `x` to its k-th nearest neighbour in the indexed set.
pub fn knn_distance(index: &KnnIndex<'_>, x: &[f64], k: usize, exclude: Option<usize>) -> Result<f64> {
    let nbrs = index.query(x, k, exclude)?;
    Ok(nbrs[k - 1].distance())
}

/// For every point of the indexed set, its `k` nearest other points.
pub fn self_neighbors(index: &KnnIndex<'_>, k: usize) -> Result<Vec<Vec<Neighbor>>> {
    let pts = index.points();
    (0..pts.len())
        .into_par_iter()
        .map(|i| index.query(pts.point(i), k, Some(i)))
        .collect()
}

/// For every point of `queries`, its `k` nearest points of the indexed set.
pub fn cross_neighbors(index: &KnnIndex<'_>, queries: &PointSet, k: usize) -> Result<Vec<Vec<Neighbor>>> {
    if queries.dim() != index.points().dim() {
        return Err(Error::DimensionMismatch {
            expected: index.points().dim(),
            found: queries.dim(),
        });
    }
    (0..queries.len())
        .into_par_iter()
        .map(|i| index.query(queries.point(i), k, None))
        .collect()
}

/// `multiplier * V_d * r^d` from the squared radius.
pub fn ball_volume(multiplier: f64, vd: f64, dist2: f64, d: usize) -> f64 {
    multiplier * vd * dist2.sqrt().powi(d as i32)
}

/// `U_m^(k)(X_i) = (m - 1) V_d r_k(X_i)^d` with `X_i` excluded from its own search.
pub fn self_knn_volumes(sample: &PointSet, k: usize) -> Result<Vec<f64>> {
    let d = sample.dim();
    let vd = unit_ball_volume(d)?;
    let m = sample.len();
    let index = KnnIndex::new(sample);
    let nbrs = self_neighbors(&index, k)?;
    let mult = (m - 1) as f64;
    Ok(nbrs
        .iter()
        .map(|nb| ball_volume(mult, vd, nb[k - 1].dist2, d))
        .collect())
}

/// `V_n^(l)(X_i) = n V_d r_l(X_i | Y)^d`.
pub fn cross_knn_volumes(x: &PointSet, y: &PointSet, l: usize) -> Result<Vec<f64>> {
    let d = x.dim();
    let vd = unit_ball_volume(d)?;
    let index = KnnIndex::new(y);
    let nbrs = cross_neighbors(&index, x, l)?;
    let mult = y.len() as f64;
    Ok(nbrs
        .iter()
        .map(|nb| ball_volume(mult, vd, nb[l - 1].dist2, d))
        .collect())
}
