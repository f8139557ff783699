//! Point cloud container.
//!
//! A [`PointCloud`] is an ordered list of 3-D points with optional per-point
//! frame indices (for time-varying clouds). Coordinates are validated to be
//! finite at construction, so every downstream consumer can assume clean
//! input. The container is immutable: operations that drop points build a new
//! cloud via [`PointCloud::select`] and report which original indices
//! survived.

use crate::error::{Error, Result};

/// An immutable 3-D point cloud, optionally tagged with per-point frame indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<[f64; 3]>,
    frame_ids: Option<Vec<u32>>,
}

impl PointCloud {
    /// Builds a static (single-frame) cloud.
    ///
    /// Errors with [`Error::NonFinite`] naming the first offending vertex if
    /// any coordinate is NaN or infinite.
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        check_finite(&points)?;
        Ok(PointCloud {
            points,
            frame_ids: None,
        })
    }

    /// Builds a time-varying cloud with one frame index per point.
    pub fn with_frames(points: Vec<[f64; 3]>, frame_ids: Vec<u32>) -> Result<Self> {
        if points.len() != frame_ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} points but {} frame ids",
                points.len(),
                frame_ids.len()
            )));
        }
        check_finite(&points)?;
        Ok(PointCloud {
            points,
            frame_ids: Some(frame_ids),
        })
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// True if the cloud holds no points.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// All points, in storage order.
    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    /// Per-point frame indices, if this cloud is time-varying.
    pub fn frame_ids(&self) -> Option<&[u32]> {
        self.frame_ids.as_deref()
    }

    /// The point at `index`.
    pub fn point(&self, index: usize) -> [f64; 3] {
        self.points[index]
    }

    /// Builds a new cloud from the points at `indices`, in the given order.
    /// Frame indices, when present, follow their points.
    ///
    /// Panics if an index is out of bounds (caller bug, not input error).
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let points: Vec<[f64; 3]> = indices.iter().map(|&i| self.points[i]).collect();
        let frame_ids = self
            .frame_ids
            .as_ref()
            .map(|f| indices.iter().map(|&i| f[i]).collect());
        PointCloud { points, frame_ids }
    }

    /// Replaces the coordinates while keeping length and frame tags.
    ///
    /// Used by denoisers that move points but never add or drop them.
    pub fn with_points(&self, points: Vec<[f64; 3]>) -> Result<PointCloud> {
        if points.len() != self.points.len() {
            return Err(Error::DimensionMismatch(format!(
                "replacement has {} points, original has {}",
                points.len(),
                self.points.len()
            )));
        }
        check_finite(&points)?;
        Ok(PointCloud {
            points,
            frame_ids: self.frame_ids.clone(),
        })
    }

    /// Axis-aligned bounding box as `(min, max)`, or `None` for an empty cloud.
    pub fn bounding_box(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = *self.points.first()?;
        let mut lo = first;
        let mut hi = first;
        for p in &self.points[1..] {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        Some((lo, hi))
    }
}

fn check_finite(points: &[[f64; 3]]) -> Result<()> {
    for (index, p) in points.iter().enumerate() {
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(())
}

/// Squared Euclidean distance between two points.
#[inline]
pub fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_coordinates() {
        let err = PointCloud::new(vec![[0.0, 0.0, 0.0], [1.0, f64::NAN, 0.0]]).unwrap_err();
        match err {
            Error::NonFinite { index } => assert_eq!(index, 1),
            other => panic!("unexpected error: {other}"),
        }

        let err = PointCloud::new(vec![[f64::INFINITY, 0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0 }));
    }

    #[test]
    fn select_preserves_order_and_frames() {
        let cloud = PointCloud::with_frames(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let sub = cloud.select(&[3, 1]);
        assert_eq!(sub.points(), &[[3.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert_eq!(sub.frame_ids(), Some(&[1, 0][..]));
    }

    #[test]
    fn frame_length_mismatch_is_an_error() {
        let err = PointCloud::with_frames(vec![[0.0; 3]], vec![0, 1]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn bounding_box_covers_all_points() {
        let cloud = PointCloud::new(vec![[1.0, -2.0, 3.0], [-1.0, 5.0, 0.5]]).unwrap();
        let (lo, hi) = cloud.bounding_box().unwrap();
        assert_eq!(lo, [-1.0, -2.0, 0.5]);
        assert_eq!(hi, [1.0, 5.0, 3.0]);
    }
}
