//! Neighborhood graph construction.
//!
//! All regularizers in this crate operate on an undirected weighted graph
//! whose vertices are the cloud's points. Edge weights come from a Gaussian
//! kernel on Euclidean distance,
//!
//! ```text
//! w_ij = exp(-||p_i - p_j||^2 / (2 theta^2)),
//! ```
//!
//! so weights live in (0, 1] and shorter edges weigh more. Three
//! constructions are provided:
//!
//! * [`build_knn_graph`]: i and j are connected when j is among the k nearest
//!   neighbors of i *or* i is among the k nearest of j (OR symmetrization).
//! * [`build_epsilon_graph`]: i and j are connected when `||p_i - p_j|| <= eps`
//!   (closed ball). Isolated vertices are allowed.
//! * [`build_spatiotemporal_graph`]: for time-tagged clouds; k1 nearest
//!   neighbors within a point's own frame plus k2 in each adjacent frame.
//!
//! Storage is compressed sparse rows over *directed arcs*: every undirected
//! edge {i, j} appears as the two arcs (i, j) and (j, i) with identical
//! weight. Columns within a row are sorted ascending and self-loops never
//! occur. Neighbor ties at equal distance resolve toward the lower point
//! index, which keeps construction reproducible and lets tests compare
//! against exhaustive enumeration.

use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::Write;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::spatial::SpatialIndex;

/// Kernel bandwidth selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta {
    /// Resolve from the data: the mean distance to the k-th nearest neighbor
    /// (k-NN and spatio-temporal graphs) or the mean edge length
    /// (epsilon graphs, falling back to eps/3 when no edges exist).
    Auto,
    /// Use the given bandwidth, which must be positive and finite.
    Fixed(f64),
}

impl Theta {
    fn validate(self) -> Result<()> {
        match self {
            Theta::Auto => Ok(()),
            Theta::Fixed(t) if t.is_finite() && t > 0.0 => Ok(()),
            Theta::Fixed(t) => Err(Error::invalid(format!(
                "theta must be positive and finite, got {t}"
            ))),
        }
    }
}

impl std::fmt::Display for Theta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Theta::Auto => f.write_str("auto"),
            Theta::Fixed(t) => write!(f, "{t}"),
        }
    }
}

impl std::str::FromStr for Theta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Theta::Auto);
        }
        let t: f64 = s
            .parse()
            .map_err(|_| Error::invalid(format!("theta must be 'auto' or a number, got '{s}'")))?;
        let theta = Theta::Fixed(t);
        theta.validate()?;
        Ok(theta)
    }
}

/// Gaussian kernel weight for a squared distance.
///
/// The zero-distance case is pinned to exactly 1 so coincident duplicates get
/// full weight even when theta resolves to 0 (an all-duplicates cloud). An
/// underflowed exponential is clamped to the smallest positive normal so
/// stored weights stay strictly positive.
#[inline]
fn kernel_weight(d2: f64, theta: f64) -> f64 {
    if d2 == 0.0 {
        1.0
    } else {
        (-d2 / (2.0 * theta * theta)).exp().max(f64::MIN_POSITIVE)
    }
}

/// Undirected weighted neighborhood graph in CSR form.
///
/// Invariants: weights are symmetric, strictly positive, and at most 1;
/// columns within each row are sorted ascending; no self-loops; the arc list
/// has exactly twice the undirected edge count.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
    degrees: Vec<f64>,
    /// Source vertex of each arc (the row it lives in).
    arc_src: Vec<u32>,
    /// Position of the opposite arc: `rev_arc[a]` indexes (j, i) when `a`
    /// indexes (i, j). Exists for every arc because edges are undirected.
    rev_arc: Vec<u32>,
    theta: f64,
}

impl WeightedGraph {
    /// Builds a graph from an explicit undirected edge list.
    ///
    /// Every `(i, j, w)` must satisfy `i != j`, both endpoints in range, `w`
    /// in (0, 1], and no unordered pair may repeat.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<WeightedGraph> {
        if n > u32::MAX as usize {
            return Err(Error::invalid("vertex count exceeds u32 range"));
        }
        let mut pairs: Vec<(u32, u32, f64)> = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i == j {
                return Err(Error::invalid(format!("self-loop on vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) out of range for {n} vertices"
                )));
            }
            if !(w.is_finite() && w > 0.0 && w <= 1.0) {
                return Err(Error::invalid(format!(
                    "edge ({i}, {j}) weight {w} outside (0, 1]"
                )));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            pairs.push((a as u32, b as u32, w));
        }
        pairs.sort_unstable_by_key(|&(a, b, _)| (a, b));
        if pairs
            .windows(2)
            .any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::invalid("duplicate edge in edge list"));
        }
        Ok(assemble_from_weighted_pairs(n, &pairs, f64::NAN))
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.row_ptr.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.col_idx.len() / 2
    }

    /// Number of directed arcs (always `2 * edge_count`).
    pub fn arc_count(&self) -> usize {
        self.col_idx.len()
    }

    /// The resolved kernel bandwidth, NaN for graphs built from explicit
    /// edge lists.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Neighbors of vertex `i` with edge weights, ascending by index.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .zip(&self.weights[span])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// Weighted degree of every vertex: the sum of incident edge weights.
    pub fn weighted_degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub(crate) fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub(crate) fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_weights
    }

    pub(crate) fn arc_src(&self) -> &[u32] {
        &self.arc_src
    }

    pub(crate) fn rev_arc(&self) -> &[u32] {
        &self.rev_arc
    }

    /// All directed arcs `(i, j, w)` in storage order: row by row, columns
    /// ascending within each row.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.vertex_count()).flat_map(move |i| self.neighbors(i).map(move |(j, w)| (i, j, w)))
    }

    /// Writes the arc list as text, one `i j w` triple per line.
    pub fn export_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, j, w) in self.arcs() {
            writeln!(out, "{i} {j} {w}")?;
        }
        Ok(())
    }

    /// Connected-component label per vertex; labels are consecutive from 0
    /// in order of first appearance.
    pub fn connected_components(&self) -> (usize, Vec<usize>) {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for (u, _) in self.neighbors(v) {
                    if label[u] == usize::MAX {
                        label[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }
}

/// Assembles CSR storage from normalized `(lo, hi, weight)` pairs that are
/// sorted by `(lo, hi)` and duplicate-free. Iterating pairs in that order
/// fills every row's columns in ascending order.
fn assemble_from_weighted_pairs(n: usize, pairs: &[(u32, u32, f64)], theta: f64) -> WeightedGraph {
    let mut counts = vec![0usize; n];
    for &(a, b, _) in pairs {
        counts[a as usize] += 1;
        counts[b as usize] += 1;
    }
    let mut row_ptr = vec![0usize; n + 1];
    for i in 0..n {
        row_ptr[i + 1] = row_ptr[i] + counts[i];
    }
    let arcs = row_ptr[n];
    let mut col_idx = vec![0u32; arcs];
    let mut weights = vec![0.0f64; arcs];
    let mut cursor = row_ptr.clone();
    for &(a, b, w) in pairs {
        let (a, b) = (a as usize, b as usize);
        col_idx[cursor[a]] = b as u32;
        weights[cursor[a]] = w;
        cursor[a] += 1;
        col_idx[cursor[b]] = a as u32;
        weights[cursor[b]] = w;
        cursor[b] += 1;
    }
    let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();
    // Fold from +0.0: `Sum` for f64 starts at -0.0, which would surface as
    // a puzzling "-0" degree for isolated vertices in reports.
    let degrees = (0..n)
        .map(|i| {
            weights[row_ptr[i]..row_ptr[i + 1]]
                .iter()
                .fold(0.0, |a, w| a + w)
        })
        .collect();

    let mut arc_src = vec![0u32; arcs];
    let mut rev_arc = vec![0u32; arcs];
    for i in 0..n {
        for a in row_ptr[i]..row_ptr[i + 1] {
            arc_src[a] = i as u32;
            let j = col_idx[a] as usize;
            let row_j = &col_idx[row_ptr[j]..row_ptr[j + 1]];
            // Columns are sorted, and symmetry guarantees i appears in row j.
            let pos = row_j.binary_search(&(i as u32)).expect("symmetric arc");
            rev_arc[a] = (row_ptr[j] + pos) as u32;
        }
    }

    WeightedGraph {
        row_ptr,
        col_idx,
        weights,
        sqrt_weights,
        degrees,
        arc_src,
        rev_arc,
        theta,
    }
}

/// Turns `(lo, hi, d2)` candidate pairs into a graph: sort, drop duplicate
/// pairs, apply the kernel.
fn assemble_from_distance_pairs(
    n: usize,
    mut pairs: Vec<(u32, u32, f64)>,
    theta: f64,
) -> WeightedGraph {
    pairs.sort_unstable_by_key(|&(a, b, _)| (a, b));
    pairs.dedup_by_key(|&mut (a, b, _)| (a, b));
    for p in pairs.iter_mut() {
        p.2 = kernel_weight(p.2, theta);
    }
    assemble_from_weighted_pairs(n, &pairs, theta)
}

fn validate_cloud_for_build(cloud: &PointCloud) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cloud.len() > u32::MAX as usize {
        return Err(Error::invalid("cloud exceeds u32 vertex range"));
    }
    Ok(())
}

/// Builds the mutual-OR k-nearest-neighbor graph.
///
/// The edge set is `{ {i, j} : j ∈ C_k(i) or i ∈ C_k(j) }` where `C_k(i)` is
/// the set of `k` points closest to `p_i` (itself excluded, distance ties
/// broken toward the lower index). Requires `1 <= k < n`. With `Theta::Auto`
/// the bandwidth is the mean distance from each point to its k-th nearest
/// neighbor.
pub fn build_knn_graph(cloud: &PointCloud, k: usize, theta: Theta) -> Result<WeightedGraph> {
    validate_cloud_for_build(cloud)?;
    theta.validate()?;
    let n = cloud.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k >= n {
        return Err(Error::invalid(format!(
            "k = {k} must be smaller than the point count {n}"
        )));
    }

    let points = cloud.points();
    let index = SpatialIndex::build(points);
    let lists: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| index.k_nearest(points[i], k, Some(i)))
        .collect();

    let theta = match theta {
        Theta::Fixed(t) => t,
        Theta::Auto => {
            // lists[i] holds exactly k entries sorted by distance; the last
            // one is the k-th nearest.
            let sum: f64 = lists.iter().map(|l| l.last().unwrap().1.sqrt()).sum();
            sum / n as f64
        }
    };

    let mut pairs = Vec::with_capacity(n * k);
    for (i, list) in lists.iter().enumerate() {
        for &(j, d2) in list {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            pairs.push((a as u32, b as u32, d2));
        }
    }
    Ok(assemble_from_distance_pairs(n, pairs, theta))
}

/// Builds the fixed-radius graph: an edge wherever `||p_i - p_j|| <= epsilon`
/// (closed ball). Vertices with no neighbor in range stay isolated. With
/// `Theta::Auto` the bandwidth is the mean edge length, or `epsilon / 3`
/// when the graph has no edges.
pub fn build_epsilon_graph(
    cloud: &PointCloud,
    epsilon: f64,
    theta: Theta,
) -> Result<WeightedGraph> {
    validate_cloud_for_build(cloud)?;
    theta.validate()?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    let n = cloud.len();
    let points = cloud.points();
    let index = SpatialIndex::build(points);

    // Each unordered pair is found once, from its lower-index endpoint.
    let per_point: Vec<Vec<(u32, u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            index
                .within_radius(points[i], epsilon, Some(i))
                .into_iter()
                .filter(|&(j, _)| j > i)
                .map(|(j, d2)| (i as u32, j as u32, d2))
                .collect()
        })
        .collect();
    let pairs: Vec<(u32, u32, f64)> = per_point.into_iter().flatten().collect();

    let theta = match theta {
        Theta::Fixed(t) => t,
        Theta::Auto => {
            if pairs.is_empty() {
                epsilon / 3.0
            } else {
                pairs.iter().map(|&(_, _, d2)| d2.sqrt()).sum::<f64>() / pairs.len() as f64
            }
        }
    };
    Ok(assemble_from_distance_pairs(n, pairs, theta))
}

/// Builds the spatio-temporal graph for a time-tagged cloud: every point gets
/// `k1` nearest neighbors within its own frame plus `k2` within frame `t - 1`
/// and `k2` within frame `t + 1` (when those frames exist), all
/// OR-symmetrized. Requires `k1 > 2 * k2 >= 2` and more than `k1` points in
/// every frame. With `Theta::Auto` the bandwidth is the mean distance to the
/// k1-th intra-frame neighbor, so a single-frame cloud builds the exact same
/// graph as [`build_knn_graph`] with `k = k1`.
pub fn build_spatiotemporal_graph(
    cloud: &PointCloud,
    k1: usize,
    k2: usize,
    theta: Theta,
) -> Result<WeightedGraph> {
    validate_cloud_for_build(cloud)?;
    theta.validate()?;
    let frame_ids = cloud
        .frame_ids()
        .ok_or_else(|| Error::invalid("spatio-temporal graph requires a cloud with frame ids"))?;
    if k2 < 1 || k1 <= 2 * k2 {
        return Err(Error::invalid(format!(
            "temporal neighbor counts must satisfy k1 > 2*k2 >= 2, got k1 = {k1}, k2 = {k2}"
        )));
    }

    // Group points by frame, keeping global indices.
    let mut frames: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (i, &f) in frame_ids.iter().enumerate() {
        frames.entry(f).or_default().push(i as u32);
    }
    for (f, members) in &frames {
        if members.len() <= k1 {
            return Err(Error::invalid(format!(
                "frame {f} has {} points but k1 = {k1} requires more than k1",
                members.len()
            )));
        }
    }

    let points = cloud.points();
    struct FrameIndex<'a> {
        globals: &'a [u32],
        coords: Vec<[f64; 3]>,
    }
    let frame_data: BTreeMap<u32, FrameIndex> = frames
        .iter()
        .map(|(&f, members)| {
            let coords = members.iter().map(|&g| points[g as usize]).collect();
            (
                f,
                FrameIndex {
                    globals: members,
                    coords,
                },
            )
        })
        .collect();

    let mut pairs: Vec<(u32, u32, f64)> = Vec::new();
    let mut kth_intra_sum = 0.0f64;

    for (&f, frame) in &frame_data {
        let index = SpatialIndex::build(&frame.coords);
        let prev = f.checked_sub(1).and_then(|pf| frame_data.get(&pf));
        let next = f.checked_add(1).and_then(|nf| frame_data.get(&nf));
        let prev_index = prev.map(|p| SpatialIndex::build(&p.coords));
        let next_index = next.map(|p| SpatialIndex::build(&p.coords));

        // Pair list and k1-th neighbor distance per member of this frame.
        type MemberResult = (Vec<(u32, u32, f64)>, f64);
        let results: Vec<MemberResult> = (0..frame.globals.len())
            .into_par_iter()
            .map(|local| {
                let g = frame.globals[local] as usize;
                let q = points[g];
                let mut local_pairs = Vec::with_capacity(k1 + 2 * k2);
                let intra = index.k_nearest(q, k1, Some(local));
                let kth = intra.last().unwrap().1.sqrt();
                let mut push = |other_global: u32, d2: f64| {
                    let (a, b) = if (g as u32) < other_global {
                        (g as u32, other_global)
                    } else {
                        (other_global, g as u32)
                    };
                    local_pairs.push((a, b, d2));
                };
                for (j, d2) in intra {
                    push(frame.globals[j], d2);
                }
                if let (Some(p), Some(pi)) = (prev, &prev_index) {
                    for (j, d2) in pi.k_nearest(q, k2, None) {
                        push(p.globals[j], d2);
                    }
                }
                if let (Some(nx), Some(ni)) = (next, &next_index) {
                    for (j, d2) in ni.k_nearest(q, k2, None) {
                        push(nx.globals[j], d2);
                    }
                }
                (local_pairs, kth)
            })
            .collect();

        for (local_pairs, kth) in results {
            pairs.extend(local_pairs);
            kth_intra_sum += kth;
        }
    }

    let theta = match theta {
        Theta::Fixed(t) => t,
        Theta::Auto => kth_intra_sum / cloud.len() as f64,
    };
    Ok(assemble_from_distance_pairs(cloud.len(), pairs, theta))
}

/// Which neighborhood construction a pipeline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    Knn,
    Epsilon,
    Spatiotemporal,
}

impl GraphMode {
    pub fn name(self) -> &'static str {
        match self {
            GraphMode::Knn => "knn",
            GraphMode::Epsilon => "epsilon",
            GraphMode::Spatiotemporal => "spatiotemporal",
        }
    }
}

impl std::fmt::Display for GraphMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GraphMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(GraphMode::Knn),
            "epsilon" => Ok(GraphMode::Epsilon),
            "spatiotemporal" => Ok(GraphMode::Spatiotemporal),
            other => Err(Error::invalid(format!(
                "unknown graph mode '{other}' (expected knn, epsilon, or spatiotemporal)"
            ))),
        }
    }
}

/// Bundled graph-construction parameters, as consumed by pipelines that
/// rebuild graphs (iterative denoising, the CLI, the synthetic benchmark).
#[derive(Debug, Clone, Copy)]
pub struct GraphBuildParams {
    pub mode: GraphMode,
    /// Neighbor count for `GraphMode::Knn`.
    pub k: usize,
    /// Ball radius for `GraphMode::Epsilon`.
    pub epsilon: f64,
    pub theta: Theta,
    /// Intra-frame neighbor count for `GraphMode::Spatiotemporal`.
    pub k1: usize,
    /// Inter-frame neighbor count for `GraphMode::Spatiotemporal`.
    pub k2: usize,
}

impl Default for GraphBuildParams {
    fn default() -> Self {
        GraphBuildParams {
            mode: GraphMode::Knn,
            k: 10,
            epsilon: 0.01,
            theta: Theta::Auto,
            k1: 10,
            k2: 3,
        }
    }
}

impl GraphBuildParams {
    /// Builds the graph this parameter set describes.
    pub fn build(&self, cloud: &PointCloud) -> Result<WeightedGraph> {
        match self.mode {
            GraphMode::Knn => build_knn_graph(cloud, self.k, self.theta),
            GraphMode::Epsilon => build_epsilon_graph(cloud, self.epsilon, self.theta),
            GraphMode::Spatiotemporal => {
                build_spatiotemporal_graph(cloud, self.k1, self.k2, self.theta)
            }
        }
    }
}
