//! Exact k-nearest-neighbor search with a k-d tree.
//!
//! Every query excludes the query sample itself. Ties in distance are broken
//! by the smaller sample index, so results are deterministic even for data
//! with repeated distances. The [`brute`] module holds the O(N) per-query
//! reference used to verify the tree.

use crate::error::{Error, Result};
use crate::metrics::IndexMetric;
use crate::sample::SampleSet;

const LEAF_SIZE: usize = 16;
const NO_CHILD: u32 = u32::MAX;

/// The `k` nearest neighbors of one sample, sorted by (distance, index).
#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl KnnResult {
    /// Distance to the k-th neighbor.
    pub fn kth_distance(&self) -> f64 {
        *self.distances.last().expect("k >= 1")
    }
}

#[derive(Debug, Clone)]
struct Node {
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

/// Immutable k-d tree over a sample set. Safe to query from many threads.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    metric: IndexMetric,
    n: usize,
    d: usize,
    /// Coordinates in tree order.
    coords: Vec<f64>,
    /// Original row coordinates, for query points.
    rows: Vec<f64>,
    /// `ids[slot]` is the sample index stored at tree slot `slot`.
    ids: Vec<usize>,
    nodes: Vec<Node>,
    /// Per node: `d` lower bounds followed by `d` upper bounds.
    bounds: Vec<f64>,
}

/// Builds an exact neighbor index. Median splits on the widest coordinate.
pub fn build_index(points: &SampleSet, metric: impl Into<IndexMetric>) -> Result<NeighborIndex> {
    let metric = metric.into();
    let n = points.len();
    let d = points.dim();
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if let Some(expected) = metric.dim_hint() {
        if expected != d {
            return Err(Error::DimensionMismatch { expected, got: d });
        }
    }
    if let Some(pos) = points.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: pos / d, col: pos % d });
    }
    let mut ids: Vec<usize> = (0..n).collect();
    let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
    let mut bounds = Vec::with_capacity((2 * n / LEAF_SIZE + 1) * 2 * d);
    build_node(points, &mut ids, 0, &mut nodes, &mut bounds);

    let mut coords = Vec::with_capacity(n * d);
    for &id in &ids {
        coords.extend_from_slice(points.row(id));
    }
    Ok(NeighborIndex {
        metric,
        n,
        d,
        coords,
        rows: points.as_slice().to_vec(),
        ids,
        nodes,
        bounds,
    })
}

fn build_node(
    points: &SampleSet,
    ids: &mut [usize],
    offset: usize,
    nodes: &mut Vec<Node>,
    bounds: &mut Vec<f64>,
) -> u32 {
    let d = points.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &id in ids.iter() {
        for (c, &v) in points.row(id).iter().enumerate() {
            lo[c] = lo[c].min(v);
            hi[c] = hi[c].max(v);
        }
    }
    let me = nodes.len() as u32;
    nodes.push(Node {
        start: offset as u32,
        end: (offset + ids.len()) as u32,
        left: NO_CHILD,
        right: NO_CHILD,
    });
    bounds.extend_from_slice(&lo);
    bounds.extend_from_slice(&hi);

    let (axis, spread) = (0..d)
        .map(|c| (c, hi[c] - lo[c]))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    if ids.len() <= LEAF_SIZE || spread <= 0.0 {
        return me;
    }
    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| {
        points.row(a)[axis]
            .total_cmp(&points.row(b)[axis])
            .then(a.cmp(&b))
    });
    let (left_ids, right_ids) = ids.split_at_mut(mid);
    let left = build_node(points, left_ids, offset, nodes, bounds);
    let right = build_node(points, right_ids, offset + mid, nodes, bounds);
    nodes[me as usize].left = left;
    nodes[me as usize].right = right;
    me
}

/// Bounded list of the best (distance, index) pairs seen so far.
struct Candidates {
    k: usize,
    items: Vec<(f64, usize)>,
}

impl Candidates {
    fn new(k: usize) -> Self {
        Candidates { k, items: Vec::with_capacity(k + 1) }
    }

    #[inline]
    fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].0
        }
    }

    #[inline]
    fn offer(&mut self, dist: f64, id: usize) {
        if self.items.len() == self.k {
            let (wd, wi) = self.items[self.k - 1];
            if (dist, id) >= (wd, wi) {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .partition_point(|&(d, i)| d < dist || (d == dist && i < id));
        self.items.insert(pos, (dist, id));
    }
}

impl NeighborIndex {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn metric(&self) -> IndexMetric {
        self.metric
    }

    fn query_row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(())
    }

    fn lo(&self, node: usize) -> &[f64] {
        &self.bounds[2 * node * self.d..(2 * node + 1) * self.d]
    }

    fn hi(&self, node: usize) -> &[f64] {
        &self.bounds[(2 * node + 1) * self.d..(2 * node + 2) * self.d]
    }

    /// Lower bound on the distance from `q` to any point in the node's box.
    #[inline]
    fn box_min_dist(&self, node: usize, q: &[f64], scratch: &mut [f64]) -> f64 {
        for (c, (&lo, &hi)) in self.lo(node).iter().zip(self.hi(node)).enumerate() {
            let v = q[c];
            scratch[c] = if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                0.0
            };
        }
        self.metric.norm_of(scratch)
    }

    /// Upper bound on the distance from `q` to any point in the node's box.
    #[inline]
    fn box_max_dist(&self, node: usize, q: &[f64], scratch: &mut [f64]) -> f64 {
        for (c, (&lo, &hi)) in self.lo(node).iter().zip(self.hi(node)).enumerate() {
            scratch[c] = (q[c] - lo).abs().max((hi - q[c]).abs());
        }
        self.metric.norm_of(scratch)
    }

    /// The `k` nearest other samples to sample `i`.
    pub fn knn_of_sample(&self, i: usize, k: usize) -> Result<KnnResult> {
        self.check_index(i)?;
        if k == 0 || k >= self.n {
            return Err(Error::InvalidK { k, n: self.n });
        }
        let mut cand = Candidates::new(k);
        let mut scratch = vec![0.0; self.d];
        self.search(0, i, self.query_row(i), &mut cand, &mut scratch);
        let (distances, indices) = cand.items.into_iter().unzip();
        Ok(KnnResult { indices, distances })
    }

    /// Distance from sample `i` to its k-th nearest other sample.
    pub fn kth_distance(&self, i: usize, k: usize) -> Result<f64> {
        Ok(self.knn_of_sample(i, k)?.kth_distance())
    }

    fn search(&self, node: usize, exclude: usize, q: &[f64], cand: &mut Candidates, scratch: &mut [f64]) {
        let nd = &self.nodes[node];
        if nd.left == NO_CHILD {
            for slot in nd.start as usize..nd.end as usize {
                let id = self.ids[slot];
                if id == exclude {
                    continue;
                }
                let p = &self.coords[slot * self.d..(slot + 1) * self.d];
                cand.offer(self.metric.dist(q, p), id);
            }
            return;
        }
        let (l, r) = (nd.left as usize, nd.right as usize);
        let dl = self.box_min_dist(l, q, scratch);
        let dr = self.box_min_dist(r, q, scratch);
        let (first, d_first, second, d_second) = if dl <= dr { (l, dl, r, dr) } else { (r, dr, l, dl) };
        // Boxes at exactly the current worst distance can still hold a
        // lower-index tie, so only strictly farther boxes are pruned.
        if d_first <= cand.worst() {
            self.search(first, exclude, q, cand, scratch);
        }
        if d_second <= cand.worst() {
            self.search(second, exclude, q, cand, scratch);
        }
    }

    /// Number of samples `j != i` with `distance(j, i) < r` (strict).
    pub fn count_within(&self, i: usize, r: f64) -> Result<usize> {
        self.check_index(i)?;
        if !(r > 0.0) {
            return Ok(0);
        }
        let mut scratch = vec![0.0; self.d];
        let total = self.count_node(0, self.query_row(i), r, &mut scratch);
        // The query itself is at distance 0 < r and always counted once.
        Ok(total - 1)
    }

    fn count_node(&self, node: usize, q: &[f64], r: f64, scratch: &mut [f64]) -> usize {
        if self.box_min_dist(node, q, scratch) >= r {
            return 0;
        }
        let nd = &self.nodes[node];
        if self.box_max_dist(node, q, scratch) < r {
            return (nd.end - nd.start) as usize;
        }
        if nd.left == NO_CHILD {
            return (nd.start as usize..nd.end as usize)
                .filter(|&slot| {
                    let p = &self.coords[slot * self.d..(slot + 1) * self.d];
                    self.metric.dist(q, p) < r
                })
                .count();
        }
        self.count_node(nd.left as usize, q, r, scratch) + self.count_node(nd.right as usize, q, r, scratch)
    }
}

/// O(N) reference implementations over the raw sample set.
pub mod brute {
    use super::*;

    pub fn knn_of_sample(points: &SampleSet, metric: impl Into<IndexMetric>, i: usize, k: usize) -> Result<KnnResult> {
        let metric = metric.into();
        let n = points.len();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        if k == 0 || k >= n {
            return Err(Error::InvalidK { k, n });
        }
        let q = points.row(i);
        let mut all: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (metric.dist(q, points.row(j)), j))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        let (distances, indices) = all.into_iter().unzip();
        Ok(KnnResult { indices, distances })
    }

    pub fn count_within(points: &SampleSet, metric: impl Into<IndexMetric>, i: usize, r: f64) -> usize {
        let metric = metric.into();
        let q = points.row(i);
        (0..points.len())
            .filter(|&j| j != i && metric.dist(q, points.row(j)) < r)
            .count()
    }
}
