//! Position denoising on a fixed neighborhood graph.
//!
//! Treating the coordinates themselves as a vertex signal `f`, two convex
//! programs are solved:
//!
//! * Tikhonov (quadratic) smoothing:
//!   `min_x ||x - f||^2 + gamma * ||grad x||^2`.
//!   Under this crate's arc conventions `||grad x||^2 = 2 x'Lx`, so the
//!   minimizer satisfies the linear system `(I + 2 gamma L) x = f`, solved
//!   per component by preconditioned CG — equivalent to the spectral filter
//!   `1 / (1 + 2 gamma lambda)` but without any eigendecomposition.
//! * Total-variation smoothing:
//!   `min_x ||x - f||^2 + gamma * ||grad x||_1`,
//!   solved by ADMM on the split `z = grad x`:
//!   - x-update: `(2I + 2 rho L) x = 2 f + rho * grad'(z - u)`,
//!   - z-update: soft-thresholding of `grad x + u` with threshold
//!     `gamma / rho` (per component, or per arc block when the coupling is
//!     isotropic),
//!   - dual update `u += grad x - z`.
//!
//!   The iteration stops on the usual primal/dual residual rule and
//!   rebalances `rho` when the residuals drift apart.
//!
//! Both solvers accept signals of any dimension; the components couple only
//! through the isotropic TV shrinkage. `gamma = 0` returns the input
//! unchanged, and a constant input is a fixed point for every `gamma`.

use std::io::Write;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::graph::{GraphBuildParams, WeightedGraph};
use crate::signal::{EdgeSignal, GraphSignal};
use crate::solver::{solve_shifted_laplacian, CgWorkspace};

/// Default Tikhonov regularization strength: the smallest value on a coarse
/// 1-2-5 grid that at least halves the mean error of the synthetic plane
/// benchmark at mid noise (n = 10000, sigma = 0.01, k = 10). See the README's
/// calibration section; `examples/calibrate_gamma.rs` reproduces the table.
pub const DEFAULT_GAMMA_TIKHONOV: f64 = 0.2;

/// Default TV regularization strength: the smallest value on the same grid
/// that cuts mean error by at least 20% on all three benchmark shapes at mid
/// noise. The l1 penalty buys far more smoothing per unit `gamma` than the
/// quadratic one (its shrinkage is scale-free), so its useful range sits two
/// orders of magnitude below Tikhonov's; a shared value would over-smooth
/// curved shapes or do nothing, hence per-regularizer defaults.
pub const DEFAULT_GAMMA_TV: f64 = 0.001;

/// Default relative tolerance for conjugate-gradient solves.
pub const DEFAULT_CG_TOL: f64 = 1e-6;

/// Default relative tolerance for ADMM primal/dual residuals.
pub const DEFAULT_ADMM_TOL: f64 = 1e-4;

/// Which smoothness prior a pipeline applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularizer {
    Tikhonov,
    Tv,
}

impl Regularizer {
    pub fn name(self) -> &'static str {
        match self {
            Regularizer::Tikhonov => "tikhonov",
            Regularizer::Tv => "tv",
        }
    }
}

impl std::fmt::Display for Regularizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tikhonov" => Ok(Regularizer::Tikhonov),
            "tv" => Ok(Regularizer::Tv),
            other => Err(Error::invalid(format!(
                "unknown regularizer '{other}' (expected tikhonov or tv)"
            ))),
        }
    }
}

/// How the TV shrinkage couples signal components on each arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TvCoupling {
    /// Each component is thresholded independently (separable l1 norm).
    #[default]
    Anisotropic,
    /// The per-arc component vector is shrunk as a block (group norm), which
    /// favors discontinuities aligned across components.
    Isotropic,
}

impl TvCoupling {
    pub fn name(self) -> &'static str {
        match self {
            TvCoupling::Anisotropic => "anisotropic",
            TvCoupling::Isotropic => "isotropic",
        }
    }
}

impl std::fmt::Display for TvCoupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TvCoupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "anisotropic" => Ok(TvCoupling::Anisotropic),
            "isotropic" => Ok(TvCoupling::Isotropic),
            other => Err(Error::invalid(format!(
                "unknown coupling '{other}' (expected anisotropic or isotropic)"
            ))),
        }
    }
}

/// Parameters shared by both denoisers.
#[derive(Debug, Clone, Copy)]
pub struct DenoiseConfig {
    /// Regularization strength `gamma >= 0`. `None` uses the documented
    /// per-regularizer default ([`DEFAULT_GAMMA_TIKHONOV`] or
    /// [`DEFAULT_GAMMA_TV`]); setting an explicit value applies it to
    /// whichever regularizer runs.
    pub gamma: Option<f64>,
    /// Relative solver tolerance. `None` uses the solver-specific default:
    /// [`DEFAULT_CG_TOL`] for Tikhonov, [`DEFAULT_ADMM_TOL`] for TV (where it
    /// bounds the residuals relative to `||grad f||`).
    pub solver_tol: Option<f64>,
    /// Iteration cap: CG iterations per component (Tikhonov) or outer ADMM
    /// iterations (TV).
    pub max_iter: usize,
    /// Initial ADMM penalty parameter.
    pub rho: f64,
    /// TV component coupling.
    pub tv_coupling: TvCoupling,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            gamma: None,
            solver_tol: None,
            max_iter: 1000,
            rho: 1.0,
            tv_coupling: TvCoupling::default(),
        }
    }
}

impl DenoiseConfig {
    /// The regularization strength a given regularizer will actually use.
    pub fn effective_gamma(&self, regularizer: Regularizer) -> f64 {
        self.gamma.unwrap_or(match regularizer {
            Regularizer::Tikhonov => DEFAULT_GAMMA_TIKHONOV,
            Regularizer::Tv => DEFAULT_GAMMA_TV,
        })
    }

    /// Checks every field against its documented range. The solvers call
    /// this on entry; frontends can call it earlier to fail fast.
    pub fn validate(&self) -> Result<()> {
        if let Some(gamma) = self.gamma {
            if !(gamma.is_finite() && gamma >= 0.0) {
                return Err(Error::invalid(format!(
                    "gamma must be finite and non-negative, got {gamma}"
                )));
            }
        }
        if let Some(tol) = self.solver_tol {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::invalid(format!(
                    "solver_tol must be positive and finite, got {tol}"
                )));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::invalid(format!(
                "rho must be positive and finite, got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Convergence record of one denoising solve.
#[derive(Debug, Clone)]
pub struct SolveDiagnostics {
    /// CG iterations (maximum over components) or outer ADMM iterations.
    pub iterations: usize,
    /// Relative residual at exit: CG residual, or the larger ADMM residual
    /// divided by its scale. At most `solver_tol` when `converged`.
    pub final_residual: f64,
    /// Objective values: one entry per ADMM iteration, or the single final
    /// value for Tikhonov.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Per-iteration ADMM primal residuals (empty for Tikhonov).
    pub primal_residuals: Vec<f64>,
    /// Per-iteration ADMM dual residuals (empty for Tikhonov).
    pub dual_residuals: Vec<f64>,
}

impl SolveDiagnostics {
    /// Writes the trace as CSV rows `iteration,objective,primal_residual,
    /// dual_residual`; residual cells are empty where not applicable.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,objective,primal_residual,dual_residual")?;
        for (i, obj) in self.objective_trace.iter().enumerate() {
            let primal = self
                .primal_residuals
                .get(i)
                .map(|v| v.to_string())
                .unwrap_or_default();
            let dual = self
                .dual_residuals
                .get(i)
                .map(|v| v.to_string())
                .unwrap_or_default();
            writeln!(out, "{},{},{},{}", i + 1, obj, primal, dual)?;
        }
        Ok(())
    }
}

/// Scalar soft-thresholding: `sign(v) * max(|v| - kappa, 0)`.
#[inline]
pub fn soft_threshold_scalar(v: f64, kappa: f64) -> f64 {
    let mag = v.abs() - kappa;
    if mag > 0.0 {
        mag * v.signum()
    } else {
        0.0
    }
}

/// Block soft-thresholding: `v * max(1 - kappa / ||v||, 0)`, with the origin
/// mapped to the origin.
pub fn soft_threshold_block(v: &[f64], kappa: f64, out: &mut [f64]) {
    debug_assert_eq!(v.len(), out.len());
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > kappa {
        let s = 1.0 - kappa / norm;
        for (o, a) in out.iter_mut().zip(v) {
            *o = s * a;
        }
    } else {
        out.fill(0.0);
    }
}

fn check_signal(graph: &WeightedGraph, f: &GraphSignal) -> Result<()> {
    if f.len() != graph.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "signal covers {} vertices, graph has {}",
            f.len(),
            graph.vertex_count()
        )));
    }
    Ok(())
}

fn fidelity(x: &GraphSignal, f: &GraphSignal) -> f64 {
    x.values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn tv_of_gradient(grad: &EdgeSignal, coupling: TvCoupling) -> f64 {
    match coupling {
        TvCoupling::Anisotropic => grad.l1_norm(),
        TvCoupling::Isotropic => {
            let dim = grad.dim();
            grad.values()
                .chunks_exact(dim)
                .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
                .sum()
        }
    }
}

/// The quadratic objective `||x - f||^2 + gamma * ||grad x||^2`.
pub fn tikhonov_objective(
    graph: &WeightedGraph,
    f: &GraphSignal,
    x: &GraphSignal,
    gamma: f64,
) -> Result<f64> {
    check_signal(graph, f)?;
    check_signal(graph, x)?;
    let grad = graph.gradient(x)?;
    Ok(fidelity(x, f) + gamma * grad.norm().powi(2))
}

/// The TV objective `||x - f||^2 + gamma * ||grad x||_1` (or the group-norm
/// variant for isotropic coupling).
pub fn tv_objective(
    graph: &WeightedGraph,
    f: &GraphSignal,
    x: &GraphSignal,
    gamma: f64,
    coupling: TvCoupling,
) -> Result<f64> {
    check_signal(graph, f)?;
    check_signal(graph, x)?;
    let grad = graph.gradient(x)?;
    Ok(fidelity(x, f) + gamma * tv_of_gradient(&grad, coupling))
}

/// Quadratic denoising: solves `(I + 2 gamma L) x = f` per component.
pub fn tikhonov_denoise(
    graph: &WeightedGraph,
    f: &GraphSignal,
    cfg: &DenoiseConfig,
) -> Result<(GraphSignal, SolveDiagnostics)> {
    cfg.validate()?;
    check_signal(graph, f)?;
    let gamma = cfg.effective_gamma(Regularizer::Tikhonov);
    let tol = cfg.solver_tol.unwrap_or(DEFAULT_CG_TOL);

    let mut x = f.clone();
    let mut ws = CgWorkspace::default();
    let mut iterations = 0;
    let mut final_residual = 0.0f64;
    let mut converged = true;
    for c in 0..f.dim() {
        let rhs = f.column(c);
        let mut col = x.column(c); // warm start at f itself
        let outcome = solve_shifted_laplacian(
            graph,
            1.0,
            2.0 * gamma,
            &rhs,
            &mut col,
            tol,
            cfg.max_iter,
            &mut ws,
        );
        x.set_column(c, &col);
        iterations = iterations.max(outcome.iterations);
        final_residual = final_residual.max(outcome.rel_residual);
        converged &= outcome.converged;
    }

    let objective = tikhonov_objective(graph, f, &x, gamma)?;
    Ok((
        x,
        SolveDiagnostics {
            iterations,
            final_residual,
            objective_trace: vec![objective],
            converged,
            primal_residuals: Vec::new(),
            dual_residuals: Vec::new(),
        },
    ))
}

/// Total-variation denoising by ADMM on the split `z = grad x`.
pub fn tv_denoise(
    graph: &WeightedGraph,
    f: &GraphSignal,
    cfg: &DenoiseConfig,
) -> Result<(GraphSignal, SolveDiagnostics)> {
    cfg.validate()?;
    check_signal(graph, f)?;
    let gamma = cfg.effective_gamma(Regularizer::Tv);
    let tol = cfg.solver_tol.unwrap_or(DEFAULT_ADMM_TOL);

    // The penalty vanishes: the objective is pure fidelity and x = f exactly.
    if gamma == 0.0 {
        return Ok((
            f.clone(),
            SolveDiagnostics {
                iterations: 0,
                final_residual: 0.0,
                objective_trace: vec![0.0],
                converged: true,
                primal_residuals: Vec::new(),
                dual_residuals: Vec::new(),
            },
        ));
    }

    let n = graph.vertex_count();
    let dim = f.dim();
    let arcs = graph.arc_count();
    let inner_tol = DEFAULT_CG_TOL.min(tol * 1e-2);

    let mut x = f.clone();
    let mut grad_x = graph.gradient(f)?;
    let scale = grad_x.norm();
    let mut z = grad_x.clone();
    let mut u = EdgeSignal::zeros(arcs, dim);
    // Scratch: v holds grad x + u then the new z; tmp holds z - u and later
    // the z-step difference for the dual residual.
    let mut v = EdgeSignal::zeros(arcs, dim);
    let mut tmp = EdgeSignal::zeros(arcs, dim);
    let mut div_buf = GraphSignal::zeros(n, dim);
    let f_cols: Vec<Vec<f64>> = (0..dim).map(|c| f.column(c)).collect();
    let mut rhs = vec![0.0f64; n];
    let mut ws = CgWorkspace::default();

    let mut rho = cfg.rho;
    let mut adaptations = 0usize;
    const MAX_ADAPTATIONS: usize = 100;

    let mut objective_trace = Vec::new();
    let mut primal_residuals = Vec::new();
    let mut dual_residuals = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);

    for iter in 1..=cfg.max_iter {
        iterations = iter;

        // x-update: (2I + 2 rho L) x_c = 2 f_c + rho * grad'(z - u)_c, where
        // grad' = -div.
        for (t, (zv, uv)) in tmp
            .values_mut()
            .iter_mut()
            .zip(z.values().iter().zip(u.values()))
        {
            *t = zv - uv;
        }
        graph.divergence_raw(tmp.values(), dim, div_buf.values_mut());
        for c in 0..dim {
            let div_c = div_buf.values();
            for i in 0..n {
                rhs[i] = 2.0 * f_cols[c][i] - rho * div_c[i * dim + c];
            }
            let mut col = x.column(c);
            solve_shifted_laplacian(
                graph,
                2.0,
                2.0 * rho,
                &rhs,
                &mut col,
                inner_tol,
                cfg.max_iter,
                &mut ws,
            );
            x.set_column(c, &col);
        }
        graph.gradient_raw(x.values(), dim, grad_x.values_mut());

        // z-update: shrink grad x + u.
        for (vv, (gv, uv)) in v
            .values_mut()
            .iter_mut()
            .zip(grad_x.values().iter().zip(u.values()))
        {
            *vv = gv + uv;
        }
        let kappa = gamma / rho;
        match cfg.tv_coupling {
            TvCoupling::Anisotropic => {
                for vv in v.values_mut() {
                    *vv = soft_threshold_scalar(*vv, kappa);
                }
            }
            TvCoupling::Isotropic => {
                let mut row = vec![0.0f64; dim];
                for chunk in v.values_mut().chunks_exact_mut(dim) {
                    row.copy_from_slice(chunk);
                    soft_threshold_block(&row, kappa, chunk);
                }
            }
        }

        // Dual residual rho * div(z_new - z_old); primal residual grad x - z.
        for (t, (new, old)) in tmp
            .values_mut()
            .iter_mut()
            .zip(v.values().iter().zip(z.values()))
        {
            *t = new - old;
        }
        graph.divergence_raw(tmp.values(), dim, div_buf.values_mut());
        s_norm = rho * div_buf.norm();
        r_norm = 0.0;
        for (uv, (gv, zv)) in u
            .values_mut()
            .iter_mut()
            .zip(grad_x.values().iter().zip(v.values()))
        {
            let r = gv - zv;
            r_norm += r * r;
            *uv += r;
        }
        r_norm = r_norm.sqrt();
        std::mem::swap(&mut z, &mut v);

        objective_trace.push(fidelity(&x, f) + gamma * tv_of_gradient(&grad_x, cfg.tv_coupling));
        primal_residuals.push(r_norm);
        dual_residuals.push(s_norm);

        if r_norm <= tol * scale && s_norm <= tol * scale {
            converged = true;
            break;
        }

        // Residual balancing keeps primal and dual progress comparable.
        if adaptations < MAX_ADAPTATIONS {
            if r_norm > 10.0 * s_norm {
                rho *= 2.0;
                for uv in u.values_mut() {
                    *uv *= 0.5;
                }
                adaptations += 1;
            } else if s_norm > 10.0 * r_norm {
                rho *= 0.5;
                for uv in u.values_mut() {
                    *uv *= 2.0;
                }
                adaptations += 1;
            }
        }
    }

    let final_residual = if scale > 0.0 {
        r_norm.max(s_norm) / scale
    } else {
        0.0
    };
    Ok((
        x,
        SolveDiagnostics {
            iterations,
            final_residual,
            objective_trace,
            converged,
            primal_residuals,
            dual_residuals,
        },
    ))
}

/// Applies one regularizer with the given config.
pub fn denoise_signal(
    graph: &WeightedGraph,
    f: &GraphSignal,
    cfg: &DenoiseConfig,
    regularizer: Regularizer,
) -> Result<(GraphSignal, SolveDiagnostics)> {
    match regularizer {
        Regularizer::Tikhonov => tikhonov_denoise(graph, f, cfg),
        Regularizer::Tv => tv_denoise(graph, f, cfg),
    }
}

/// Alternates graph construction and denoising for `rounds` passes: after
/// each pass the graph is rebuilt from the just-denoised coordinates, so
/// later passes see cleaner neighborhoods. `rounds = 1` is exactly one graph
/// build followed by one solve.
pub fn iterative_denoise(
    cloud: &PointCloud,
    build: &GraphBuildParams,
    cfg: &DenoiseConfig,
    regularizer: Regularizer,
    rounds: usize,
) -> Result<(PointCloud, Vec<SolveDiagnostics>)> {
    if rounds == 0 {
        return Err(Error::invalid("rounds must be at least 1"));
    }
    let mut current = cloud.clone();
    let mut diagnostics = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let graph = build.build(&current)?;
        let f = GraphSignal::from_cloud(&current);
        let (x, diag) = denoise_signal(&graph, &f, cfg, regularizer)?;
        diagnostics.push(diag);
        current = current.with_points(x.to_points()?)?;
    }
    Ok((current, diagnostics))
}
