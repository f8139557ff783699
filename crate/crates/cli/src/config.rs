//! Pipeline configuration: built-in defaults, `key = value` config files,
//! and flag/file/default precedence.
//!
//! Resolution is layered: a value given on the command line wins, otherwise
//! a value from the `--config` file applies, otherwise the built-in default.
//! After resolution the full configuration is rendered back into the same
//! config-file syntax, printed, and written next to the outputs, so any run
//! can be reproduced exactly by passing that artifact back via `--config`.
//!
//! The file syntax is one `key = value` assignment per line; blank lines
//! and lines starting with `#` are ignored. Keys are spelled exactly like
//! the long command-line flags.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pcdenoise::bench::ManifoldSpec;
use pcdenoise::{
    CloudFormat, DenoiseConfig, Error, GraphBuildParams, GraphMode, Regularizer, Result, Theta,
    TvCoupling, WeightedGraph,
};

/// Default ball radius for epsilon graphs, including the outlier-filter
/// graph. Suits clouds with coordinates on a unit-ish scale.
pub const DEFAULT_EPSILON: f64 = 0.01;

/// Default neighbor count for k-NN graphs.
pub const DEFAULT_K: usize = 10;

/// Default weighted-degree threshold for the outlier filter.
pub const DEFAULT_TAU: f64 = 3.0;

/// Default seed for every randomized stage, chosen once so repeated runs
/// reproduce each other without any flags.
pub const DEFAULT_SEED: u64 = 42;

/// A strength or tolerance flag that may defer to its built-in default.
/// Appears on the command line and in config files as either the word
/// `default` or a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatOrDefault(pub Option<f64>);

impl FromStr for FloatOrDefault {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("default") {
            return Ok(FloatOrDefault(None));
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::invalid(format!("expected a number or 'default', got '{s}'")))?;
        Ok(FloatOrDefault(Some(v)))
    }
}

impl fmt::Display for FloatOrDefault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("default"),
            Some(v) => write!(f, "{v}"),
        }
    }
}

/// A cloud format that may be inferred from the file extension. Appears as
/// `auto` or one of the format names (`ply`, `ply-ascii`, `ply-binary`,
/// `xyz`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatChoice(pub Option<CloudFormat>);

impl FromStr for FormatChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(FormatChoice(None));
        }
        Ok(FormatChoice(Some(CloudFormat::from_name(s)?)))
    }
}

impl fmt::Display for FormatChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("auto"),
            Some(fmt_) => write!(f, "{fmt_}"),
        }
    }
}

/// Benchmark shape selection: a single shape or all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeChoice {
    All,
    One(ManifoldSpec),
}

impl ShapeChoice {
    /// The shapes a sweep will run, in canonical order.
    pub fn shapes(self) -> Vec<ManifoldSpec> {
        match self {
            ShapeChoice::All => ManifoldSpec::ALL.to_vec(),
            ShapeChoice::One(spec) => vec![spec],
        }
    }
}

impl FromStr for ShapeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(ShapeChoice::All);
        }
        ManifoldSpec::from_str(s)
            .map(ShapeChoice::One)
            .map_err(|_| {
                Error::invalid(format!(
                    "unknown shape '{s}' (expected plane, sphere, cube, or all)"
                ))
            })
    }
}

impl fmt::Display for ShapeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeChoice::All => f.write_str("all"),
            ShapeChoice::One(spec) => write!(f, "{spec}"),
        }
    }
}

/// How the outlier filter picks its threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    /// Remove vertices with weighted degree strictly below this value.
    Fixed(f64),
    /// Take the threshold at this percentile of the degree distribution.
    Percentile(f64),
}

/// Every knob a run can override, each optional. Command-line flags and
/// config files both collapse into this shape before resolution.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub input_format: Option<FormatChoice>,
    pub output_format: Option<FormatChoice>,
    pub graph: Option<GraphMode>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub theta: Option<Theta>,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub tau: Option<f64>,
    pub percentile: Option<f64>,
    pub regularizer: Option<Regularizer>,
    pub gamma: Option<FloatOrDefault>,
    pub solver_tol: Option<FloatOrDefault>,
    pub max_iter: Option<usize>,
    pub rho: Option<f64>,
    pub coupling: Option<TvCoupling>,
    pub rounds: Option<usize>,
    pub shape: Option<ShapeChoice>,
    pub n: Option<usize>,
    pub levels: Option<usize>,
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    /// Parses a config file. Unknown keys, duplicate keys, malformed lines,
    /// and unparseable values are all errors, reported with line numbers.
    pub fn from_config_file(path: &Path) -> Result<Overrides> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut over = Overrides::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let bad = |msg: String| Error::invalid(format!("{}:{lineno}: {msg}", path.display()));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(bad(format!("key '{key}' has no value")));
            }
            if !seen.insert(key.to_string()) {
                return Err(bad(format!("duplicate key '{key}'")));
            }
            over.set(key, value)
                .map_err(|e| bad(format!("key '{key}': {e}")))?;
        }
        if over.tau.is_some() && over.percentile.is_some() {
            return Err(Error::invalid(format!(
                "{}: sets both 'tau' and 'percentile'; pick one",
                path.display()
            )));
        }
        Ok(over)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "output-dir" => self.output_dir = Some(PathBuf::from(value)),
            "input-format" => self.input_format = Some(value.parse()?),
            "output-format" => self.output_format = Some(value.parse()?),
            "graph" => self.graph = Some(value.parse()?),
            "k" => self.k = Some(parse_num(value)?),
            "epsilon" => self.epsilon = Some(parse_num(value)?),
            "theta" => self.theta = Some(value.parse()?),
            "k1" => self.k1 = Some(parse_num(value)?),
            "k2" => self.k2 = Some(parse_num(value)?),
            "tau" => self.tau = Some(parse_num(value)?),
            "percentile" => self.percentile = Some(parse_num(value)?),
            "regularizer" => self.regularizer = Some(value.parse()?),
            "gamma" => self.gamma = Some(value.parse()?),
            "solver-tol" => self.solver_tol = Some(value.parse()?),
            "max-iter" => self.max_iter = Some(parse_num(value)?),
            "rho" => self.rho = Some(parse_num(value)?),
            "coupling" => self.coupling = Some(value.parse()?),
            "rounds" => self.rounds = Some(parse_num(value)?),
            "shape" => self.shape = Some(value.parse()?),
            "n" => self.n = Some(parse_num(value)?),
            "levels" => self.levels = Some(parse_num(value)?),
            "sigma-min" => self.sigma_min = Some(parse_num(value)?),
            "sigma-max" => self.sigma_max = Some(parse_num(value)?),
            "seed" => self.seed = Some(parse_num(value)?),
            other => {
                return Err(Error::invalid(format!(
                    "unknown configuration key '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// Layers `self` (the stronger source) over `weaker`, field by field.
    pub fn or(self, weaker: Overrides) -> Overrides {
        // tau and percentile are one logical knob: if the stronger source
        // sets either, the weaker source's pair is ignored entirely so a
        // flag like --percentile can override a config file's tau.
        let (tau, percentile) = if self.tau.is_some() || self.percentile.is_some() {
            (self.tau, self.percentile)
        } else {
            (weaker.tau, weaker.percentile)
        };
        Overrides {
            input: self.input.or(weaker.input),
            output_dir: self.output_dir.or(weaker.output_dir),
            input_format: self.input_format.or(weaker.input_format),
            output_format: self.output_format.or(weaker.output_format),
            graph: self.graph.or(weaker.graph),
            k: self.k.or(weaker.k),
            epsilon: self.epsilon.or(weaker.epsilon),
            theta: self.theta.or(weaker.theta),
            k1: self.k1.or(weaker.k1),
            k2: self.k2.or(weaker.k2),
            tau,
            percentile,
            regularizer: self.regularizer.or(weaker.regularizer),
            gamma: self.gamma.or(weaker.gamma),
            solver_tol: self.solver_tol.or(weaker.solver_tol),
            max_iter: self.max_iter.or(weaker.max_iter),
            rho: self.rho.or(weaker.rho),
            coupling: self.coupling.or(weaker.coupling),
            rounds: self.rounds.or(weaker.rounds),
            shape: self.shape.or(weaker.shape),
            n: self.n.or(weaker.n),
            levels: self.levels.or(weaker.levels),
            sigma_min: self.sigma_min.or(weaker.sigma_min),
            sigma_max: self.sigma_max.or(weaker.sigma_max),
            seed: self.seed.or(weaker.seed),
        }
    }
}

fn parse_num<T: FromStr>(value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse '{value}'")))
}

/// One fully resolved run. Covers every subcommand; fields a command does
/// not use are simply ignored by it, so a single rendered artifact can
/// reproduce any run.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Input cloud. Optional because `bench` synthesizes its own data.
    pub input: Option<PathBuf>,
    /// Directory receiving every output artifact.
    pub output_dir: PathBuf,
    /// `None` infers the format from the file extension.
    pub input_format: Option<CloudFormat>,
    pub output_format: Option<CloudFormat>,
    /// Construction rule for the denoising graph.
    pub graph: GraphMode,
    pub k: usize,
    /// Ball radius for the outlier-filter graph and epsilon-mode graphs.
    pub epsilon: f64,
    pub theta: Theta,
    pub k1: usize,
    pub k2: usize,
    pub tau: TauRule,
    pub regularizer: Regularizer,
    /// `None` applies the regularizer-specific documented default.
    pub gamma: Option<f64>,
    pub solver_tol: Option<f64>,
    pub max_iter: usize,
    pub rho: f64,
    pub coupling: TvCoupling,
    pub rounds: usize,
    pub shape: ShapeChoice,
    pub n: usize,
    pub levels: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub seed: u64,
}

impl PipelineConfig {
    /// Resolves flag overrides layered over an optional config file over
    /// the built-in defaults.
    pub fn resolve(flags: Overrides, config_file: Option<&Path>) -> Result<PipelineConfig> {
        let file = match config_file {
            Some(path) => Overrides::from_config_file(path)?,
            None => Overrides::default(),
        };
        let o = flags.or(file);
        let denoise_defaults = DenoiseConfig::default();
        let tau = match (o.tau, o.percentile) {
            (Some(t), None) => TauRule::Fixed(t),
            (None, Some(p)) => TauRule::Percentile(p),
            (None, None) => TauRule::Fixed(DEFAULT_TAU),
            // Flags conflict at the parser and files reject the pair, and
            // `or` keeps the pair from mixing across sources.
            (Some(_), Some(_)) => unreachable!("tau/percentile conflict"),
        };
        let cfg = PipelineConfig {
            input: o.input,
            output_dir: o.output_dir.unwrap_or_else(|| PathBuf::from("out")),
            input_format: o.input_format.unwrap_or(FormatChoice(None)).0,
            output_format: o.output_format.unwrap_or(FormatChoice(None)).0,
            graph: o.graph.unwrap_or(GraphMode::Knn),
            k: o.k.unwrap_or(DEFAULT_K),
            epsilon: o.epsilon.unwrap_or(DEFAULT_EPSILON),
            theta: o.theta.unwrap_or(Theta::Auto),
            k1: o.k1.unwrap_or(DEFAULT_K),
            k2: o.k2.unwrap_or(3),
            tau,
            regularizer: o.regularizer.unwrap_or(Regularizer::Tv),
            gamma: o.gamma.unwrap_or(FloatOrDefault(None)).0,
            solver_tol: o.solver_tol.unwrap_or(FloatOrDefault(None)).0,
            max_iter: o.max_iter.unwrap_or(denoise_defaults.max_iter),
            rho: o.rho.unwrap_or(denoise_defaults.rho),
            coupling: o.coupling.unwrap_or_default(),
            rounds: o.rounds.unwrap_or(1),
            shape: o.shape.unwrap_or(ShapeChoice::All),
            n: o.n.unwrap_or(10_000),
            levels: o.levels.unwrap_or(9),
            sigma_min: o.sigma_min.unwrap_or(1e-3),
            sigma_max: o.sigma_max.unwrap_or(1e-1),
            seed: o.seed.unwrap_or(DEFAULT_SEED),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if let TauRule::Percentile(p) = self.tau {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::invalid(format!(
                    "percentile must lie in [0, 1], got {p}"
                )));
            }
        }
        if let TauRule::Fixed(t) = self.tau {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::invalid(format!(
                    "tau must be finite and non-negative, got {t}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if self.rounds == 0 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        if self.levels == 0 {
            return Err(Error::invalid("levels must be at least 1"));
        }
        if !(self.sigma_min.is_finite() && self.sigma_min > 0.0) {
            return Err(Error::invalid(format!(
                "sigma-min must be positive and finite, got {}",
                self.sigma_min
            )));
        }
        if !(self.sigma_max.is_finite() && self.sigma_max >= self.sigma_min) {
            return Err(Error::invalid(format!(
                "sigma-max must be finite and at least sigma-min, got {}",
                self.sigma_max
            )));
        }
        // Denoising parameters share DenoiseConfig's own validation, run
        // here so a bad value fails before any expensive stage.
        self.denoise_config().validate()
    }

    /// The denoising parameters this run applies.
    pub fn denoise_config(&self) -> DenoiseConfig {
        DenoiseConfig {
            gamma: self.gamma,
            solver_tol: self.solver_tol,
            max_iter: self.max_iter,
            rho: self.rho,
            tv_coupling: self.coupling,
        }
    }

    /// The graph-construction parameters for the denoising stage.
    pub fn graph_build_params(&self) -> GraphBuildParams {
        GraphBuildParams {
            mode: self.graph,
            k: self.k,
            epsilon: self.epsilon,
            theta: self.theta,
            k1: self.k1,
            k2: self.k2,
        }
    }

    /// The input path, required by every command except `bench`.
    pub fn require_input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| {
            Error::invalid("no input cloud (pass a path or set 'input' in the config file)")
        })
    }

    /// Resolves the filter threshold against the degrees of `graph`.
    pub fn resolve_tau(&self, graph: &WeightedGraph) -> Result<f64> {
        match self.tau {
            TauRule::Fixed(t) => Ok(t),
            TauRule::Percentile(p) => pcdenoise::tau_from_percentile(graph.weighted_degrees(), p),
        }
    }

    /// File extension matching the output format (PLY unless XYZ is asked).
    pub fn output_extension(&self) -> &'static str {
        match self.output_format {
            Some(CloudFormat::Xyz) => "xyz",
            _ => "ply",
        }
    }

    /// The noise grid for `bench`: `levels` values spaced logarithmically
    /// from `sigma_min` to `sigma_max` inclusive (just `sigma_min` when a
    /// single level is asked). The defaults reproduce the benchmark's
    /// standard nine-level grid.
    pub fn sigma_grid(&self) -> Vec<f64> {
        if self.levels == 1 {
            return vec![self.sigma_min];
        }
        let lo = self.sigma_min.log10();
        let hi = self.sigma_max.log10();
        let step = (hi - lo) / (self.levels - 1) as f64;
        (0..self.levels)
            .map(|i| 10f64.powf(lo + step * i as f64))
            .collect()
    }

    /// Renders the configuration in config-file syntax. `command` only
    /// names the subcommand in a comment for provenance; every key is
    /// parseable back through `--config`.
    pub fn render(&self, command: &str) -> String {
        use fmt::Write;
        let mut s = String::new();
        // Writing to a String cannot fail, so the unwraps are formality.
        let w = &mut s;
        writeln!(w, "# pcdenoise run configuration (resolved)").unwrap();
        writeln!(w, "# command: {command}").unwrap();
        if let Some(input) = &self.input {
            writeln!(w, "input = {}", input.display()).unwrap();
        }
        writeln!(w, "output-dir = {}", self.output_dir.display()).unwrap();
        writeln!(w, "input-format = {}", FormatChoice(self.input_format)).unwrap();
        writeln!(w, "output-format = {}", FormatChoice(self.output_format)).unwrap();
        writeln!(w, "graph = {}", self.graph).unwrap();
        writeln!(w, "k = {}", self.k).unwrap();
        writeln!(w, "epsilon = {}", self.epsilon).unwrap();
        writeln!(w, "theta = {}", self.theta).unwrap();
        writeln!(w, "k1 = {}", self.k1).unwrap();
        writeln!(w, "k2 = {}", self.k2).unwrap();
        match self.tau {
            TauRule::Fixed(t) => writeln!(w, "tau = {t}").unwrap(),
            TauRule::Percentile(p) => writeln!(w, "percentile = {p}").unwrap(),
        }
        writeln!(w, "regularizer = {}", self.regularizer).unwrap();
        writeln!(w, "gamma = {}", FloatOrDefault(self.gamma)).unwrap();
        writeln!(w, "solver-tol = {}", FloatOrDefault(self.solver_tol)).unwrap();
        writeln!(w, "max-iter = {}", self.max_iter).unwrap();
        writeln!(w, "rho = {}", self.rho).unwrap();
        writeln!(w, "coupling = {}", self.coupling).unwrap();
        writeln!(w, "rounds = {}", self.rounds).unwrap();
        writeln!(w, "shape = {}", self.shape).unwrap();
        writeln!(w, "n = {}", self.n).unwrap();
        writeln!(w, "levels = {}", self.levels).unwrap();
        writeln!(w, "sigma-min = {}", self.sigma_min).unwrap();
        writeln!(w, "sigma-max = {}", self.sigma_max).unwrap();
        writeln!(w, "seed = {}", self.seed).unwrap();
        s
    }
}
