//! Command-line frontend for graph-based point cloud cleanup.
//!
//! Four subcommands compose the library's stages:
//!
//! * `filter` — outlier removal by weighted-degree thresholding.
//! * `denoise` — the full pipeline: filtering, then position denoising.
//! * `bench` — synthetic noise sweeps written as CSV plus a plot script.
//! * `graph-stats` — structural statistics of the neighborhood graph.
//!
//! Parameters resolve with the precedence flags > `--config` file >
//! built-in defaults, and every run prints and snapshots its fully
//! resolved configuration (`run-config.txt`), which can be passed back via
//! `--config` to reproduce the run exactly.
//!
//! Exit status: 0 on success, 1 on any error, 2 on command-line misuse,
//! and 3 when the run completed but a solver stopped at its iteration cap.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use pcdenoise::{GraphMode, Regularizer, Theta, TvCoupling};

use config::{FloatOrDefault, FormatChoice, Overrides, PipelineConfig, ShapeChoice};

#[derive(Parser)]
#[command(
    name = "pcdenoise",
    version,
    about = "Graph-based outlier removal and position denoising for 3D point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove outliers: threshold weighted degrees on an epsilon graph.
    Filter(FilterCmd),
    /// Full pipeline: outlier filtering, then position denoising.
    Denoise(DenoiseCmd),
    /// Sweep synthetic shapes over noise levels; write CSVs and a plot script.
    Bench(BenchCmd),
    /// Print neighborhood-graph statistics for a cloud.
    GraphStats(GraphStatsCmd),
}

/// Flags shared by every subcommand.
#[derive(Args, Default)]
struct CommonOpts {
    /// Config file of `key = value` lines; flags take precedence over it.
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory receiving all outputs (created if missing).
    #[arg(short, long, value_name = "DIR")]
    output_dir: Option<PathBuf>,
    /// Seed for every randomized stage.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

/// Input selection for commands that read a cloud.
#[derive(Args, Default)]
struct InputOpts {
    /// Input cloud (.ply or .xyz); may instead come from the config file.
    #[arg(value_name = "INPUT")]
    input: Option<PathBuf>,
    /// Input format: auto, ply, ply-ascii, ply-binary, or xyz.
    #[arg(long, value_name = "FMT")]
    input_format: Option<FormatChoice>,
}

/// Graph-construction flags.
#[derive(Args, Default)]
struct GraphOpts {
    /// Denoising-graph construction: knn, epsilon, or spatiotemporal.
    #[arg(long, value_name = "MODE")]
    graph: Option<GraphMode>,
    /// Neighbor count for knn graphs.
    #[arg(short, long, value_name = "K")]
    k: Option<usize>,
    /// Ball radius for the outlier-filter graph and epsilon-mode graphs.
    #[arg(short, long, value_name = "EPS")]
    epsilon: Option<f64>,
    /// Gaussian kernel bandwidth: auto, or a positive number.
    #[arg(long, value_name = "THETA")]
    theta: Option<Theta>,
    /// Same-frame neighbor count for spatiotemporal graphs.
    #[arg(long, value_name = "K1")]
    k1: Option<usize>,
    /// Adjacent-frame neighbor count for spatiotemporal graphs.
    #[arg(long, value_name = "K2")]
    k2: Option<usize>,
}

/// Outlier-filter flags.
#[derive(Args, Default)]
struct FilterOpts {
    /// Weighted-degree threshold; vertices strictly below it are removed.
    #[arg(short, long, value_name = "TAU", conflicts_with = "percentile")]
    tau: Option<f64>,
    /// Derive tau from this percentile of the degree distribution (0 to 1).
    #[arg(short, long, value_name = "PCT")]
    percentile: Option<f64>,
}

/// Denoising flags.
#[derive(Args, Default)]
struct DenoiseOpts {
    /// Smoothness prior: tikhonov or tv.
    #[arg(short = 'r', long, value_name = "REG")]
    regularizer: Option<Regularizer>,
    /// Regularization strength: a number, or `default` for the
    /// regularizer-specific documented default.
    #[arg(short, long, value_name = "GAMMA")]
    gamma: Option<FloatOrDefault>,
    /// Solver tolerance: a number, or `default`.
    #[arg(long, value_name = "TOL")]
    solver_tol: Option<FloatOrDefault>,
    /// Iteration cap (CG iterations per component, outer ADMM iterations).
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
    /// Initial ADMM penalty parameter.
    #[arg(long, value_name = "RHO")]
    rho: Option<f64>,
    /// TV component coupling: anisotropic or isotropic.
    #[arg(long, value_name = "MODE")]
    coupling: Option<TvCoupling>,
    /// Denoising passes; each pass rebuilds the graph from the previous
    /// pass's output.
    #[arg(long, value_name = "N")]
    rounds: Option<usize>,
}

#[derive(Args)]
struct FilterCmd {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    graph: GraphOpts,
    #[command(flatten)]
    filter: FilterOpts,
    /// Output format: auto, ply, ply-ascii, ply-binary, or xyz.
    #[arg(long, value_name = "FMT")]
    output_format: Option<FormatChoice>,
}

#[derive(Args)]
struct DenoiseCmd {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    graph: GraphOpts,
    #[command(flatten)]
    filter: FilterOpts,
    #[command(flatten)]
    denoise: DenoiseOpts,
    /// Output format: auto, ply, ply-ascii, ply-binary, or xyz.
    #[arg(long, value_name = "FMT")]
    output_format: Option<FormatChoice>,
}

#[derive(Args)]
struct BenchCmd {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    graph: GraphOpts,
    #[command(flatten)]
    denoise: DenoiseOpts,
    /// Shape to sweep: plane, sphere, cube, or all.
    #[arg(short, long, value_name = "SHAPE")]
    shape: Option<ShapeChoice>,
    /// Points sampled per noise level.
    #[arg(short, long, value_name = "N")]
    n: Option<usize>,
    /// Number of noise levels, log-spaced over [sigma-min, sigma-max].
    #[arg(short, long, value_name = "N")]
    levels: Option<usize>,
    /// Smallest noise standard deviation.
    #[arg(long, value_name = "SIGMA")]
    sigma_min: Option<f64>,
    /// Largest noise standard deviation.
    #[arg(long, value_name = "SIGMA")]
    sigma_max: Option<f64>,
}

#[derive(Args)]
struct GraphStatsCmd {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    graph: GraphOpts,
    /// Also write the arc list to edges.txt in the output directory.
    #[arg(long)]
    export_edges: bool,
}

impl GraphOpts {
    fn apply(&self, o: &mut Overrides) {
        o.graph = self.graph;
        o.k = self.k;
        o.epsilon = self.epsilon;
        o.theta = self.theta;
        o.k1 = self.k1;
        o.k2 = self.k2;
    }
}

impl DenoiseOpts {
    fn apply(&self, o: &mut Overrides) {
        o.regularizer = self.regularizer;
        o.gamma = self.gamma;
        o.solver_tol = self.solver_tol;
        o.max_iter = self.max_iter;
        o.rho = self.rho;
        o.coupling = self.coupling;
        o.rounds = self.rounds;
    }
}

fn base_overrides(common: &CommonOpts, input: Option<&InputOpts>) -> Overrides {
    Overrides {
        output_dir: common.output_dir.clone(),
        seed: common.seed,
        input: input.and_then(|i| i.input.clone()),
        input_format: input.and_then(|i| i.input_format),
        ..Overrides::default()
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> pcdenoise::Result<i32> {
    match cli.command {
        Command::Filter(cmd) => {
            let mut o = base_overrides(&cmd.common, Some(&cmd.input));
            cmd.graph.apply(&mut o);
            o.tau = cmd.filter.tau;
            o.percentile = cmd.filter.percentile;
            o.output_format = cmd.output_format;
            let cfg = PipelineConfig::resolve(o, cmd.common.config.as_deref())?;
            commands::cmd_filter(&cfg)
        }
        Command::Denoise(cmd) => {
            let mut o = base_overrides(&cmd.common, Some(&cmd.input));
            cmd.graph.apply(&mut o);
            o.tau = cmd.filter.tau;
            o.percentile = cmd.filter.percentile;
            cmd.denoise.apply(&mut o);
            o.output_format = cmd.output_format;
            let cfg = PipelineConfig::resolve(o, cmd.common.config.as_deref())?;
            commands::cmd_denoise(&cfg)
        }
        Command::Bench(cmd) => {
            let mut o = base_overrides(&cmd.common, None);
            cmd.graph.apply(&mut o);
            cmd.denoise.apply(&mut o);
            o.shape = cmd.shape;
            o.n = cmd.n;
            o.levels = cmd.levels;
            o.sigma_min = cmd.sigma_min;
            o.sigma_max = cmd.sigma_max;
            let cfg = PipelineConfig::resolve(o, cmd.common.config.as_deref())?;
            commands::cmd_bench(&cfg)
        }
        Command::GraphStats(cmd) => {
            let mut o = base_overrides(&cmd.common, Some(&cmd.input));
            cmd.graph.apply(&mut o);
            let cfg = PipelineConfig::resolve(o, cmd.common.config.as_deref())?;
            commands::cmd_graph_stats(&cfg, cmd.export_edges)
        }
    }
}
