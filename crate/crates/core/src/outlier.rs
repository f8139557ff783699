//! Outlier removal by weighted-degree thresholding.
//!
//! On a neighborhood graph with Gaussian kernel weights, the weighted degree
//! `d_i = sum_j w_ij` measures how densely a point is surrounded: points on
//! the sampled surface accumulate many near-unit weights, while isolated
//! outliers keep degrees near zero (an isolated vertex has degree exactly
//! zero). Removal keeps every point whose degree reaches a threshold `tau`
//! and drops the rest; `tau` can be fixed or derived from a percentile of
//! the degree distribution itself.

use std::io::Write;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Outcome of one filtering pass.
#[derive(Debug, Clone)]
pub struct FilterReport {
    /// Indices into the input cloud that survived, in ascending order.
    pub kept: Vec<usize>,
    /// Indices that were removed, in ascending order.
    pub removed: Vec<usize>,
    /// Threshold that was applied.
    pub tau: f64,
    /// Weighted degree of every input point (parallel to the input cloud).
    pub degrees: Vec<f64>,
}

impl FilterReport {
    /// Writes one CSV row per input point: `index,degree,kept`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,degree,kept")?;
        let mut removed = self.removed.iter().peekable();
        for (i, d) in self.degrees.iter().enumerate() {
            // `kept` and `removed` partition the indices in order, so one
            // pointer into `removed` suffices.
            let kept = match removed.peek() {
                Some(&&r) if r == i => {
                    removed.next();
                    false
                }
                _ => true,
            };
            writeln!(out, "{},{},{}", i, d, kept)?;
        }
        Ok(())
    }
}

/// Picks a threshold as the given percentile of the observed degrees, using
/// the nearest-rank rule: the value at sorted index `ceil(pct * n)`, clamped
/// to the last element. `pct = 0` selects the minimum degree.
pub fn tau_from_percentile(degrees: &[f64], pct: f64) -> Result<f64> {
    if degrees.is_empty() {
        return Err(Error::invalid("cannot take a percentile of no degrees"));
    }
    if !(pct.is_finite() && (0.0..=1.0).contains(&pct)) {
        return Err(Error::invalid(format!(
            "percentile must lie in [0, 1], got {pct}"
        )));
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let idx = ((pct * degrees.len() as f64).ceil() as usize).min(degrees.len() - 1);
    Ok(sorted[idx])
}

/// Keeps every point whose weighted degree is at least `tau`.
///
/// The graph must have been built from `cloud` (one vertex per point). The
/// surviving subset preserves input order; removing every point is an error
/// since downstream stages need a non-empty cloud.
pub fn degree_filter(
    cloud: &PointCloud,
    graph: &WeightedGraph,
    tau: f64,
) -> Result<(PointCloud, FilterReport)> {
    if graph.vertex_count() != cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} vertices, cloud has {} points",
            graph.vertex_count(),
            cloud.len()
        )));
    }
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::invalid(format!(
            "tau must be finite and non-negative, got {tau}"
        )));
    }

    let degrees = graph.weighted_degrees().to_vec();
    let mut kept = Vec::with_capacity(cloud.len());
    let mut removed = Vec::new();
    for (i, &d) in degrees.iter().enumerate() {
        if d < tau {
            removed.push(i);
        } else {
            kept.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::AllPointsRemoved {
            tau,
            n: cloud.len(),
        });
    }

    let filtered = cloud.select(&kept);
    Ok((
        filtered,
        FilterReport {
            kept,
            removed,
            tau,
            degrees,
        },
    ))
}
