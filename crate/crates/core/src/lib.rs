//! Graph-based outlier removal and position denoising for 3D point clouds.
//!
//! The pipeline treats a point cloud as a weighted proximity graph and the
//! coordinates as a signal on its vertices:
//!
//! 1. **Graph construction** ([`graph`]) — k-nearest-neighbor, fixed-radius,
//!    or spatio-temporal neighborhoods, with Gaussian kernel weights
//!    `w_ij = exp(-||p_i - p_j||^2 / (2 theta^2))`.
//! 2. **Outlier removal** ([`outlier`]) — points whose weighted degree falls
//!    below a threshold are dropped; sparsely supported points (isolated
//!    noise) have low degree, surface points have high degree.
//! 3. **Position denoising** ([`denoise`]) — the coordinates are smoothed by
//!    solving a convex fidelity-plus-regularity program on the graph, with
//!    either a quadratic (Tikhonov) or total-variation penalty on the graph
//!    gradient. TV preserves sharp features better; Tikhonov is cheaper and
//!    excels on smooth surfaces.
//!
//! Supporting modules: [`cloud`] (point storage), [`signal`] (vertex/arc
//! signals), [`spatial`] (exact nearest-neighbor queries), [`io`] (PLY and
//! XYZ formats), and [`bench`] (synthetic benchmark on analytic surfaces).
//!
//! All randomized pieces take explicit seeds, and every algorithm is
//! deterministic for a fixed input — including under Rayon parallelism,
//! which is restricted to per-element maps with fixed reduction order.

pub mod bench;
pub mod cloud;
pub mod denoise;
pub mod error;
pub mod graph;
pub mod io;
mod ops;
pub mod outlier;
pub mod signal;
mod solver;
pub mod spatial;

pub use cloud::PointCloud;
pub use denoise::{
    denoise_signal, iterative_denoise, tikhonov_denoise, tv_denoise, DenoiseConfig, Regularizer,
    SolveDiagnostics, TvCoupling, DEFAULT_ADMM_TOL, DEFAULT_CG_TOL, DEFAULT_GAMMA_TIKHONOV,
    DEFAULT_GAMMA_TV,
};
pub use error::{Error, Result};
pub use graph::{
    build_epsilon_graph, build_knn_graph, build_spatiotemporal_graph, GraphBuildParams, GraphMode,
    Theta, WeightedGraph,
};
pub use io::{read_cloud, write_cloud, CloudFormat};
pub use outlier::{degree_filter, tau_from_percentile, FilterReport};
pub use signal::{EdgeSignal, GraphSignal};
