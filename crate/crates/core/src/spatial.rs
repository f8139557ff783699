//! Exact spatial index for 3-D neighbor queries.
//!
//! A bucketed kd-tree over a borrowed point slice. Queries are *exact*, not
//! approximate, and ties in distance are broken deterministically toward the
//! lower point index, so results are identical to a brute-force scan that
//! sorts candidates by `(distance, index)`. Both query kinds take an optional
//! excluded index so that a member point can ask for neighbors other than
//! itself (duplicate coordinates at distance zero are still reported).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::cloud::dist2;

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    /// Range into `perm`.
    Leaf { start: u32, end: u32 },
    /// All points in the left subtree have `coord[axis] <= value`, all in the
    /// right have `coord[axis] >= value`.
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

/// Exact kd-tree over a borrowed slice of points.
pub struct SpatialIndex<'a> {
    points: &'a [[f64; 3]],
    perm: Vec<u32>,
    nodes: Vec<Node>,
}

/// Max-heap entry ordered by `(dist2, index)` so the lexicographically worst
/// candidate sits on top. Coordinates are finite, so `total_cmp` agrees with
/// numeric order.
#[derive(PartialEq)]
struct Cand {
    d2: f64,
    idx: u32,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> SpatialIndex<'a> {
    /// Builds the index in O(n log n).
    pub fn build(points: &'a [[f64; 3]]) -> SpatialIndex<'a> {
        let mut perm: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        if points.is_empty() {
            nodes.push(Node::Leaf { start: 0, end: 0 });
        } else {
            build_node(points, &mut perm, 0, &mut nodes);
        }
        SpatialIndex {
            points,
            perm,
            nodes,
        }
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True if the index covers no points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// The `k` nearest points to `query`, excluding `exclude` when given.
    ///
    /// Returns `(index, squared distance)` pairs sorted ascending by
    /// `(distance, index)`; fewer than `k` when the cloud is small.
    pub fn k_nearest(
        &self,
        query: [f64; 3],
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<(usize, f64)> {
        if k == 0 || self.points.is_empty() {
            return Vec::new();
        }
        let mut heap: BinaryHeap<Cand> = BinaryHeap::with_capacity(k + 1);
        self.knn_visit(0, query, k, exclude, &mut heap);
        heap.into_sorted_vec()
            .into_iter()
            .map(|c| (c.idx as usize, c.d2))
            .collect()
    }

    fn knn_visit(
        &self,
        node: u32,
        query: [f64; 3],
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Cand>,
    ) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[*start as usize..*end as usize] {
                    if exclude == Some(i as usize) {
                        continue;
                    }
                    let d2 = dist2(query, self.points[i as usize]);
                    let cand = Cand { d2, idx: i };
                    if heap.len() < k {
                        heap.push(cand);
                    } else if cand < *heap.peek().unwrap() {
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
                let diff = query[*axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.knn_visit(near, query, k, exclude, heap);
                // Visit the far side unless every point there is strictly
                // worse than the current worst candidate. Equality must
                // descend: an equidistant point with a lower index wins ties.
                let worst = heap.peek().map(|c| c.d2).unwrap_or(f64::INFINITY);
                if heap.len() < k || diff * diff <= worst {
                    self.knn_visit(far, query, k, exclude, heap);
                }
            }
        }
    }

    /// All points within the *closed* ball of radius `radius` around `query`,
    /// excluding `exclude` when given. Returns `(index, squared distance)`
    /// pairs sorted ascending by index.
    pub fn within_radius(
        &self,
        query: [f64; 3],
        radius: f64,
        exclude: Option<usize>,
    ) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        if self.points.is_empty() || radius < 0.0 {
            return out;
        }
        let r2 = radius * radius;
        self.radius_visit(0, query, r2, exclude, &mut out);
        out.sort_unstable_by_key(|&(i, _)| i);
        out
    }

    fn radius_visit(
        &self,
        node: u32,
        query: [f64; 3],
        r2: f64,
        exclude: Option<usize>,
        out: &mut Vec<(usize, f64)>,
    ) {
        match &self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.perm[*start as usize..*end as usize] {
                    if exclude == Some(i as usize) {
                        continue;
                    }
                    let d2 = dist2(query, self.points[i as usize]);
                    if d2 <= r2 {
                        out.push((i as usize, d2));
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[*axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (*left, *right)
                } else {
                    (*right, *left)
                };
                self.radius_visit(near, query, r2, exclude, out);
                if diff * diff <= r2 {
                    self.radius_visit(far, query, r2, exclude, out);
                }
            }
        }
    }
}

/// Recursively builds the subtree over `perm[range]`; returns its node index.
fn build_node(points: &[[f64; 3]], perm: &mut [u32], offset: u32, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    if perm.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + perm.len() as u32,
        });
        return id;
    }

    // Split along the axis of widest extent; ties go to the lower axis.
    let mut lo = points[perm[0] as usize];
    let mut hi = lo;
    for &i in perm.iter().skip(1) {
        let p = points[i as usize];
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let mut axis = 0;
    for a in 1..3 {
        if hi[a] - lo[a] > hi[axis] - lo[axis] {
            axis = a;
        }
    }

    // Median split under the total order (coord, index); duplicates are
    // fine because subtree bounds only rely on coord <= / >= value.
    let mid = perm.len() / 2;
    perm.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize][axis]
            .total_cmp(&points[b as usize][axis])
            .then(a.cmp(&b))
    });
    let value = points[perm[mid] as usize][axis];

    nodes.push(Node::Split {
        axis: axis as u8,
        value,
        left: 0,
        right: 0,
    });
    let (left_perm, right_perm) = perm.split_at_mut(mid);
    let left = build_node(points, left_perm, offset, nodes);
    let right = build_node(points, right_perm, offset + mid as u32, nodes);
    match &mut nodes[id as usize] {
        Node::Split {
            left: l, right: r, ..
        } => {
            *l = left;
            *r = right;
        }
        Node::Leaf { .. } => unreachable!(),
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Reference implementation: sort all candidates by (distance, index).
    fn brute_knn(
        points: &[[f64; 3]],
        query: [f64; 3],
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<(usize, f64)> {
        let mut all: Vec<(usize, f64)> = points
            .iter()
            .enumerate()
            .filter(|(i, _)| exclude != Some(*i))
            .map(|(i, &p)| (i, dist2(query, p)))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }

    fn brute_radius(
        points: &[[f64; 3]],
        query: [f64; 3],
        radius: f64,
        exclude: Option<usize>,
    ) -> Vec<(usize, f64)> {
        points
            .iter()
            .enumerate()
            .filter(|(i, _)| exclude != Some(*i))
            .map(|(i, &p)| (i, dist2(query, p)))
            .filter(|&(_, d2)| d2 <= radius * radius)
            .collect()
    }

    /// Clouds with many exact duplicates and collinear runs to force ties.
    fn tied_cloud(rng: &mut StdRng, n: usize) -> Vec<[f64; 3]> {
        (0..n)
            .map(|_| {
                [
                    (rng.random_range(0..7) as f64) * 0.25,
                    (rng.random_range(0..7) as f64) * 0.25,
                    (rng.random_range(0..7) as f64) * 0.25,
                ]
            })
            .collect()
    }

    #[test]
    fn knn_matches_brute_force_with_ties() {
        let mut rng = StdRng::seed_from_u64(11);
        for trial in 0..40 {
            let n = rng.random_range(1..120);
            let points = tied_cloud(&mut rng, n);
            let index = SpatialIndex::build(&points);
            for qi in 0..n.min(25) {
                for k in [1, 3, n] {
                    let got = index.k_nearest(points[qi], k, Some(qi));
                    let want = brute_knn(&points, points[qi], k, Some(qi));
                    assert_eq!(got, want, "trial {trial}, query {qi}, k {k}");
                }
            }
        }
    }

    #[test]
    fn knn_matches_brute_force_on_continuous_clouds() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..20 {
            let n = rng.random_range(2..200);
            let points: Vec<[f64; 3]> = (0..n)
                .map(|_| {
                    [
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ]
                })
                .collect();
            let index = SpatialIndex::build(&points);
            for qi in (0..n).step_by(7) {
                let got = index.k_nearest(points[qi], 8, Some(qi));
                let want = brute_knn(&points, points[qi], 8, Some(qi));
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn radius_matches_brute_force_including_boundary() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..30 {
            let n = rng.random_range(1..150);
            let points = tied_cloud(&mut rng, n);
            let index = SpatialIndex::build(&points);
            // 0.5 hits quantized distances exactly: the closed ball matters.
            for radius in [0.0, 0.25, 0.5, 1.0] {
                for qi in 0..n.min(10) {
                    let mut got = index.within_radius(points[qi], radius, None);
                    let mut want = brute_radius(&points, points[qi], radius, None);
                    got.sort_unstable_by_key(|&(i, _)| i);
                    want.sort_unstable_by_key(|&(i, _)| i);
                    assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn member_query_returns_itself_at_distance_zero() {
        let points = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let index = SpatialIndex::build(&points);
        let got = index.k_nearest(points[0], 1, None);
        assert_eq!(got, vec![(0, 0.0)]);
    }

    #[test]
    fn duplicates_are_neighbors_at_distance_zero() {
        let points = vec![[1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [5.0, 5.0, 5.0]];
        let index = SpatialIndex::build(&points);
        let got = index.k_nearest(points[0], 1, Some(0));
        assert_eq!(got, vec![(1, 0.0)]);
    }

    #[test]
    fn k_of_n_returns_everything_sorted() {
        let points = vec![
            [0.0, 0.0, 0.0],
            [3.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
        ];
        let index = SpatialIndex::build(&points);
        let got = index.k_nearest([0.0, 0.0, 0.0], 4, None);
        let idx: Vec<usize> = got.iter().map(|&(i, _)| i).collect();
        assert_eq!(idx, vec![0, 2, 3, 1]);
    }

    #[test]
    fn empty_and_degenerate_inputs() {
        let points: Vec<[f64; 3]> = Vec::new();
        let index = SpatialIndex::build(&points);
        assert!(index.k_nearest([0.0; 3], 3, None).is_empty());
        assert!(index.within_radius([0.0; 3], 1.0, None).is_empty());

        let one = vec![[1.0, 1.0, 1.0]];
        let index = SpatialIndex::build(&one);
        assert!(index.k_nearest(one[0], 5, Some(0)).is_empty());
        assert_eq!(index.k_nearest(one[0], 0, None), Vec::new());
    }
}
