//! Graph differential operators.
//!
//! Conventions, used consistently across the crate:
//!
//! * The combinatorial Laplacian is `L = D - W` with `D` the diagonal of
//!   weighted degrees. `L` is symmetric positive semidefinite and constant
//!   signals lie in its null space.
//! * The gradient maps a vertex signal to a signal on *directed arcs*: for
//!   the arc `a = (i, j)`,
//!
//!   ```text
//!   (grad x)_a = sqrt(w_ij) * (x_j - x_i),
//!   ```
//!
//!   so the two arcs of an edge carry opposite values. Because every edge is
//!   enumerated twice, `||grad x||^2 = 2 x' L x` and `grad' grad = 2 L`.
//! * The divergence is the negative adjoint, `div = -grad'`, giving the
//!   integration-by-parts identity `<grad x, z> = <x, -div z>` exactly (up
//!   to floating-point rounding) for all `x`, `z`.
//!
//! Multi-dimensional signals apply the operators to each component
//! independently. All three operators are linear-time in the arc count and
//! parallelize over rows or arcs; every output entry is an ordered sum, so
//! results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::signal::{EdgeSignal, GraphSignal};

/// Minimum elements per rayon work unit; keeps tiny problems effectively
/// sequential so parallelism never costs more than it saves.
const PAR_MIN_LEN: usize = 4096;

impl WeightedGraph {
    fn check_vertex_signal(&self, x: &GraphSignal) -> Result<()> {
        if x.len() != self.vertex_count() {
            return Err(Error::DimensionMismatch(format!(
                "signal covers {} vertices, graph has {}",
                x.len(),
                self.vertex_count()
            )));
        }
        Ok(())
    }

    fn check_edge_signal(&self, z: &EdgeSignal) -> Result<()> {
        if z.len() != self.arc_count() {
            return Err(Error::DimensionMismatch(format!(
                "edge signal covers {} arcs, graph has {}",
                z.len(),
                self.arc_count()
            )));
        }
        Ok(())
    }

    /// Applies the combinatorial Laplacian `L = D - W` componentwise.
    pub fn laplacian_apply(&self, x: &GraphSignal) -> Result<GraphSignal> {
        self.check_vertex_signal(x)?;
        let dim = x.dim();
        let mut out = GraphSignal::zeros(self.vertex_count(), dim);
        self.laplacian_apply_raw(x.values(), dim, out.values_mut());
        Ok(out)
    }

    /// `out = (D - W) x` on raw row-major storage.
    pub(crate) fn laplacian_apply_raw(&self, x: &[f64], dim: usize, out: &mut [f64]) {
        let row_ptr = self.row_ptr();
        let col_idx = self.col_idx();
        let weights = self.weights();
        let degrees = self.weighted_degrees();
        out.par_chunks_mut(dim)
            .with_min_len(PAR_MIN_LEN / dim.max(1))
            .enumerate()
            .for_each(|(i, o)| {
                let deg = degrees[i];
                for c in 0..dim {
                    o[c] = deg * x[i * dim + c];
                }
                for a in row_ptr[i]..row_ptr[i + 1] {
                    let j = col_idx[a] as usize;
                    let w = weights[a];
                    for c in 0..dim {
                        o[c] -= w * x[j * dim + c];
                    }
                }
            });
    }

    /// Specialized single-component Laplacian product for solver hot loops.
    pub(crate) fn laplacian_apply_column(&self, x: &[f64], out: &mut [f64]) {
        let row_ptr = self.row_ptr();
        let col_idx = self.col_idx();
        let weights = self.weights();
        let degrees = self.weighted_degrees();
        out.par_iter_mut()
            .with_min_len(PAR_MIN_LEN)
            .enumerate()
            .for_each(|(i, o)| {
                let mut acc = degrees[i] * x[i];
                for a in row_ptr[i]..row_ptr[i + 1] {
                    acc -= weights[a] * x[col_idx[a] as usize];
                }
                *o = acc;
            });
    }

    /// Graph gradient: arc `(i, j)` carries `sqrt(w_ij) * (x_j - x_i)`.
    pub fn gradient(&self, x: &GraphSignal) -> Result<EdgeSignal> {
        self.check_vertex_signal(x)?;
        let dim = x.dim();
        let mut out = EdgeSignal::zeros(self.arc_count(), dim);
        self.gradient_raw(x.values(), dim, out.values_mut());
        Ok(out)
    }

    pub(crate) fn gradient_raw(&self, x: &[f64], dim: usize, out: &mut [f64]) {
        let col_idx = self.col_idx();
        let arc_src = self.arc_src();
        let sqrt_w = self.sqrt_weights();
        out.par_chunks_mut(dim)
            .with_min_len(PAR_MIN_LEN / dim.max(1))
            .enumerate()
            .for_each(|(a, o)| {
                let i = arc_src[a] as usize;
                let j = col_idx[a] as usize;
                let s = sqrt_w[a];
                for c in 0..dim {
                    o[c] = s * (x[j * dim + c] - x[i * dim + c]);
                }
            });
    }

    /// Graph divergence, the negative adjoint of [`WeightedGraph::gradient`]:
    ///
    /// ```text
    /// (div z)_i = sum_{j ~ i} sqrt(w_ij) * (z_(i,j) - z_(j,i)).
    /// ```
    pub fn divergence(&self, z: &EdgeSignal) -> Result<GraphSignal> {
        self.check_edge_signal(z)?;
        let dim = z.dim();
        let mut out = GraphSignal::zeros(self.vertex_count(), dim);
        self.divergence_raw(z.values(), dim, out.values_mut());
        Ok(out)
    }

    pub(crate) fn divergence_raw(&self, z: &[f64], dim: usize, out: &mut [f64]) {
        let row_ptr = self.row_ptr();
        let rev_arc = self.rev_arc();
        let sqrt_w = self.sqrt_weights();
        out.par_chunks_mut(dim)
            .with_min_len(PAR_MIN_LEN / dim.max(1))
            .enumerate()
            .for_each(|(i, o)| {
                o.fill(0.0);
                for a in row_ptr[i]..row_ptr[i + 1] {
                    let r = rev_arc[a] as usize;
                    let s = sqrt_w[a];
                    for c in 0..dim {
                        o[c] += s * (z[a * dim + c] - z[r * dim + c]);
                    }
                }
            });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn path_graph() -> WeightedGraph {
        WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    fn random_graph(rng: &mut StdRng, n: usize) -> WeightedGraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(0.4) {
                    edges.push((i, j, rng.random_range(0.05..=1.0)));
                }
            }
        }
        // Keep at least one edge so the graph is not trivial.
        if edges.is_empty() {
            edges.push((0, 1, 0.5));
        }
        WeightedGraph::from_edges(n, &edges).unwrap()
    }

    fn random_signal(rng: &mut StdRng, len: usize, dim: usize) -> GraphSignal {
        GraphSignal::new(
            (0..len * dim)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect(),
            dim,
        )
        .unwrap()
    }

    #[test]
    fn laplacian_on_a_path() {
        let g = path_graph();
        let x = GraphSignal::new(vec![0.0, 1.0, 2.0], 1).unwrap();
        let lx = g.laplacian_apply(&x).unwrap();
        assert_eq!(lx.values(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn constants_are_in_the_null_space() {
        let mut rng = StdRng::seed_from_u64(21);
        let g = random_graph(&mut rng, 30);
        let x = GraphSignal::new(vec![3.7; 30], 1).unwrap();
        let lx = g.laplacian_apply(&x).unwrap();
        for v in lx.values() {
            assert!(v.abs() < 1e-12, "Lc = {v}");
        }
        let gx = g.gradient(&x).unwrap();
        for v in gx.values() {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn gradient_is_antisymmetric_across_arc_pairs() {
        let mut rng = StdRng::seed_from_u64(22);
        let g = random_graph(&mut rng, 25);
        let x = random_signal(&mut rng, 25, 2);
        let gx = g.gradient(&x).unwrap();
        let rev = g.rev_arc();
        for (a, &r) in rev.iter().enumerate() {
            let r = r as usize;
            for c in 0..2 {
                let forward = gx.values()[a * 2 + c];
                let backward = gx.values()[r * 2 + c];
                assert_eq!(forward, -backward);
            }
        }
    }

    #[test]
    fn single_edge_gradient_energy_doubles_quadratic_form() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let x = GraphSignal::new(vec![0.0, 1.0], 1).unwrap();
        let gx = g.gradient(&x).unwrap();
        // Arcs carry +1 and -1; the squared norm is 2 = 2 * x'Lx.
        let energy: f64 = gx.values().iter().map(|v| v * v).sum();
        assert_eq!(energy, 2.0);
    }

    #[test]
    fn gradient_norm_equals_twice_laplacian_quadratic_form() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..20 {
            let n = rng.random_range(2..40);
            let g = random_graph(&mut rng, n);
            let x = random_signal(&mut rng, n, 3);
            let gx = g.gradient(&x).unwrap();
            let lx = g.laplacian_apply(&x).unwrap();
            let xlx: f64 = x.values().iter().zip(lx.values()).map(|(a, b)| a * b).sum();
            let g2 = gx.values().iter().map(|v| v * v).sum::<f64>();
            assert!(
                (g2 - 2.0 * xlx).abs() <= 1e-10 * (1.0 + g2.abs()),
                "||grad x||^2 = {g2}, 2 x'Lx = {}",
                2.0 * xlx
            );
        }
    }

    #[test]
    fn divergence_is_negative_adjoint_of_gradient() {
        let mut rng = StdRng::seed_from_u64(24);
        for _ in 0..20 {
            let n = rng.random_range(2..40);
            let g = random_graph(&mut rng, n);
            let x = random_signal(&mut rng, n, 1);
            let mut z = EdgeSignal::zeros(g.arc_count(), 1);
            for v in z.values_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            let gx = g.gradient(&x).unwrap();
            let dz = g.divergence(&z).unwrap();
            let lhs: f64 = gx.values().iter().zip(z.values()).map(|(a, b)| a * b).sum();
            let rhs: f64 = x
                .values()
                .iter()
                .zip(dz.values())
                .map(|(a, b)| -a * b)
                .sum();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()),
                "<grad x, z> = {lhs}, <x, -div z> = {rhs}"
            );
        }
    }

    #[test]
    fn divergence_of_gradient_is_minus_twice_laplacian() {
        let mut rng = StdRng::seed_from_u64(25);
        let g = random_graph(&mut rng, 30);
        let x = random_signal(&mut rng, 30, 3);
        let gx = g.gradient(&x).unwrap();
        let div_gx = g.divergence(&gx).unwrap();
        let lx = g.laplacian_apply(&x).unwrap();
        for (d, l) in div_gx.values().iter().zip(lx.values()) {
            assert!(
                (d + 2.0 * l).abs() < 1e-12,
                "div grad = {d}, -2Lx = {}",
                -2.0 * l
            );
        }
    }

    #[test]
    fn dimension_mismatches_are_errors() {
        let g = path_graph();
        let short = GraphSignal::new(vec![1.0, 2.0], 1).unwrap();
        assert!(g.laplacian_apply(&short).is_err());
        assert!(g.gradient(&short).is_err());
        let bad_edges = EdgeSignal::zeros(3, 1);
        assert!(g.divergence(&bad_edges).is_err());
    }
}
