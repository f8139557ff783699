//! Preconditioned conjugate gradients for shifted Laplacian systems.
//!
//! Both denoisers reduce to solving `(alpha I + beta L) x = b` per signal
//! component with `alpha > 0`, `beta >= 0`: the system matrix is symmetric
//! positive definite, so CG applies. A Jacobi (diagonal) preconditioner is
//! enough because the diagonal `alpha + beta * degree` captures most of the
//! scale variation of kernel-weighted neighborhood graphs. The matrix is
//! never materialized; only Laplacian products are used.
//!
//! Convergence is declared on the relative residual
//! `||b - A x|| <= tol * ||b||`. A zero right-hand side has the exact
//! solution `x = 0` and returns immediately.

use crate::graph::WeightedGraph;

/// Outcome of one CG solve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CgOutcome {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` at exit (0 when `||b|| = 0`).
    pub rel_residual: f64,
    pub converged: bool,
}

/// Reusable scratch vectors so repeated solves (per component, per ADMM
/// iteration) do not reallocate.
#[derive(Debug, Default)]
pub(crate) struct CgWorkspace {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl CgWorkspace {
    fn resize(&mut self, n: usize) {
        self.r.resize(n, 0.0);
        self.z.resize(n, 0.0);
        self.p.resize(n, 0.0);
        self.ap.resize(n, 0.0);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `(alpha I + beta L) x = b`, starting from the initial guess in `x`
/// and overwriting it with the solution.
#[allow(clippy::too_many_arguments)] // scalar knobs of one linear solve; a struct would obscure them
pub(crate) fn solve_shifted_laplacian(
    graph: &WeightedGraph,
    alpha: f64,
    beta: f64,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    work: &mut CgWorkspace,
) -> CgOutcome {
    let n = b.len();
    debug_assert_eq!(x.len(), n);
    debug_assert_eq!(graph.vertex_count(), n);

    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return CgOutcome {
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        };
    }

    work.resize(n);
    let CgWorkspace { r, z, p, ap } = work;

    // A x0 into ap, r = b - A x0.
    apply(graph, alpha, beta, x, ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let mut r_norm = norm(r);
    if r_norm <= tol * b_norm {
        return CgOutcome {
            iterations: 0,
            rel_residual: r_norm / b_norm,
            converged: true,
        };
    }

    // Jacobi preconditioner: the diagonal of alpha I + beta L.
    let degrees = graph.weighted_degrees();
    let inv_diag: Vec<f64> = degrees.iter().map(|&d| 1.0 / (alpha + beta * d)).collect();

    for i in 0..n {
        z[i] = inv_diag[i] * r[i];
    }
    p.copy_from_slice(z);
    let mut rz = dot(r, z);

    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        apply(graph, alpha, beta, p, ap);
        let pap = dot(p, ap);
        if pap.is_nan() || pap <= 0.0 {
            // Numerical breakdown; the matrix is SPD so this only happens
            // when p has collapsed to rounding noise. Stop with what we have.
            break;
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        r_norm = norm(r);
        if r_norm <= tol * b_norm {
            break;
        }
        for i in 0..n {
            z[i] = inv_diag[i] * r[i];
        }
        let rz_next = dot(r, z);
        let dir = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + dir * p[i];
        }
    }

    let rel_residual = r_norm / b_norm;
    CgOutcome {
        iterations,
        rel_residual,
        converged: rel_residual <= tol,
    }
}

#[inline]
fn apply(graph: &WeightedGraph, alpha: f64, beta: f64, x: &[f64], out: &mut [f64]) {
    graph.laplacian_apply_column(x, out);
    for i in 0..x.len() {
        out[i] = alpha * x[i] + beta * out[i];
    }
}
