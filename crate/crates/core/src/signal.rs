//! Vertex and arc signals.
//!
//! A [`GraphSignal`] attaches a `dim`-dimensional real value to every vertex
//! of a graph; position denoising uses `dim = 3` (the coordinates themselves
//! are the signal). An [`EdgeSignal`] attaches a value to every *directed
//! arc*; it is the codomain of the graph gradient and the domain of the
//! divergence. Both store values row-major (all components of vertex/arc 0,
//! then vertex/arc 1, ...).

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// A `dim`-dimensional signal on the vertices of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    data: Vec<f64>,
    dim: usize,
}

impl GraphSignal {
    /// Wraps raw row-major data. `data.len()` must be a multiple of `dim`
    /// and every entry must be finite.
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("signal dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not divide into rows of dimension {}",
                data.len(),
                dim
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(GraphSignal { data, dim })
    }

    /// The all-zero signal on `len` vertices.
    pub fn zeros(len: usize, dim: usize) -> Self {
        GraphSignal {
            data: vec![0.0; len * dim],
            dim,
        }
    }

    /// Treats cloud coordinates as a 3-dimensional vertex signal.
    pub fn from_cloud(cloud: &PointCloud) -> Self {
        let mut data = Vec::with_capacity(cloud.len() * 3);
        for p in cloud.points() {
            data.extend_from_slice(p);
        }
        GraphSignal { data, dim: 3 }
    }

    /// Converts a 3-dimensional signal back into point coordinates.
    pub fn to_points(&self) -> Result<Vec<[f64; 3]>> {
        if self.dim != 3 {
            return Err(Error::DimensionMismatch(format!(
                "signal dimension is {}, expected 3",
                self.dim
            )));
        }
        Ok(self
            .data
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect())
    }

    /// Number of vertices the signal covers.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// True if the signal covers no vertices.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Components per vertex.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw row-major values.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Mutable raw values (row-major).
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// All components of vertex `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Copies component `c` of every vertex into a dense column vector.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.data[c..].iter().step_by(self.dim).copied().collect()
    }

    /// Overwrites component `c` of every vertex from a dense column vector.
    pub fn set_column(&mut self, c: usize, column: &[f64]) {
        debug_assert_eq!(column.len(), self.len());
        for (row, &v) in column.iter().enumerate() {
            self.data[row * self.dim + c] = v;
        }
    }

    /// Euclidean norm over all entries.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A `dim`-dimensional signal on the directed arcs of a graph.
///
/// Arc order matches [`crate::graph::WeightedGraph`]'s arc enumeration: every
/// undirected edge {i, j} contributes the two arcs (i, j) and (j, i).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSignal {
    data: Vec<f64>,
    dim: usize,
}

impl EdgeSignal {
    /// The all-zero signal on `arcs` directed arcs.
    pub fn zeros(arcs: usize, dim: usize) -> Self {
        EdgeSignal {
            data: vec![0.0; arcs * dim],
            dim,
        }
    }

    /// Number of directed arcs the signal covers.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    /// True if the signal covers no arcs.
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Components per arc.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Raw row-major values.
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// Mutable raw values (row-major).
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// All components of arc `a`.
    pub fn row(&self, a: usize) -> &[f64] {
        &self.data[a * self.dim..(a + 1) * self.dim]
    }

    /// Euclidean (Frobenius) norm over all entries.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of absolute values of all entries.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_validates_shape_and_finiteness() {
        assert!(GraphSignal::new(vec![1.0, 2.0, 3.0], 2).is_err());
        let err = GraphSignal::new(vec![1.0, 2.0, f64::NAN, 4.0], 2).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1 }));
        assert!(GraphSignal::new(vec![1.0, 2.0], 0).is_err());
    }

    #[test]
    fn column_round_trip() {
        let mut s = GraphSignal::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3).unwrap();
        assert_eq!(s.column(1), vec![2.0, 5.0]);
        s.set_column(1, &[20.0, 50.0]);
        assert_eq!(s.row(0), &[1.0, 20.0, 3.0]);
        assert_eq!(s.row(1), &[4.0, 50.0, 6.0]);
    }

    #[test]
    fn cloud_round_trip() {
        let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let signal = GraphSignal::from_cloud(&cloud);
        assert_eq!(signal.len(), 2);
        assert_eq!(signal.to_points().unwrap(), cloud.points());
    }
}
