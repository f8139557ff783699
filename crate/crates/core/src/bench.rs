//! Synthetic benchmark: analytic test surfaces, Gaussian corruption, and
//! mean distance-to-surface error across a noise sweep.
//!
//! Three canonical unit-scale shapes are supported — the unit square in the
//! z = 0 plane, the unit sphere, and the surface of the cube `[-1,1]^3` —
//! so noise levels are always expressed in shape units. A sweep samples the
//! shape uniformly by area, corrupts it with isotropic Gaussian noise, runs
//! both denoisers on a fresh neighborhood graph built from the *noisy*
//! cloud, and records the mean exact distance to the surface before and
//! after. Everything is deterministic given the base seed.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cloud::PointCloud;
use crate::denoise::{tikhonov_denoise, tv_denoise, DenoiseConfig};
use crate::error::{Error, Result};
use crate::graph::GraphBuildParams;
use crate::signal::GraphSignal;

/// Decorrelates the noise stream from the sampling stream: both are keyed
/// per level, but never from the same value.
const NOISE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// An analytic ground-truth surface with a closed-form distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldSpec {
    /// The closed unit square `[0,1]^2` in the z = 0 plane.
    Plane,
    /// The unit sphere centered at the origin.
    Sphere,
    /// The surface of the cube `[-1,1]^3`.
    Cube,
}

impl ManifoldSpec {
    pub const ALL: [ManifoldSpec; 3] = [
        ManifoldSpec::Plane,
        ManifoldSpec::Sphere,
        ManifoldSpec::Cube,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ManifoldSpec::Plane => "plane",
            ManifoldSpec::Sphere => "sphere",
            ManifoldSpec::Cube => "cube",
        }
    }
}

impl fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ManifoldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plane" => Ok(ManifoldSpec::Plane),
            "sphere" => Ok(ManifoldSpec::Sphere),
            "cube" => Ok(ManifoldSpec::Cube),
            other => Err(Error::invalid(format!(
                "unknown shape '{other}' (expected plane, sphere, or cube)"
            ))),
        }
    }
}

/// Draws `n` points uniformly by area on the surface. The plane uses direct
/// uniform coordinates; the sphere normalizes standard Gaussian triples; the
/// cube picks one of the six equal-area faces uniformly, then a uniform
/// point on it.
pub fn sample_manifold(spec: ManifoldSpec, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::invalid("cannot sample zero points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    match spec {
        ManifoldSpec::Plane => {
            for _ in 0..n {
                points.push([rng.random::<f64>(), rng.random::<f64>(), 0.0]);
            }
        }
        ManifoldSpec::Sphere => {
            for _ in 0..n {
                loop {
                    let v: [f64; 3] = [
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                        rng.sample(StandardNormal),
                    ];
                    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if norm > 1e-12 {
                        points.push([v[0] / norm, v[1] / norm, v[2] / norm]);
                        break;
                    }
                }
            }
        }
        ManifoldSpec::Cube => {
            for _ in 0..n {
                let face = rng.random_range(0..6usize);
                let axis = face / 2;
                let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
                let u = 2.0 * rng.random::<f64>() - 1.0;
                let v = 2.0 * rng.random::<f64>() - 1.0;
                let mut p = [0.0; 3];
                p[axis] = sign;
                p[(axis + 1) % 3] = u;
                p[(axis + 2) % 3] = v;
                points.push(p);
            }
        }
    }
    PointCloud::new(points)
}

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation `sigma` to
/// every coordinate. `sigma = 0` returns the input unchanged.
pub fn add_noise(cloud: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(cloud.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = cloud
        .points()
        .iter()
        .map(|p| {
            let n: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            [
                p[0] + sigma * n[0],
                p[1] + sigma * n[1],
                p[2] + sigma * n[2],
            ]
        })
        .collect();
    cloud.with_points(points)
}

/// Exact Euclidean distance from `p` to the nearest point of the surface.
pub fn distance_to_manifold(p: &[f64; 3], spec: ManifoldSpec) -> f64 {
    match spec {
        ManifoldSpec::Plane => {
            let dx = p[0] - p[0].clamp(0.0, 1.0);
            let dy = p[1] - p[1].clamp(0.0, 1.0);
            (dx * dx + dy * dy + p[2] * p[2]).sqrt()
        }
        ManifoldSpec::Sphere => {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            (r - 1.0).abs()
        }
        ManifoldSpec::Cube => {
            let ax = [p[0].abs(), p[1].abs(), p[2].abs()];
            if ax.iter().any(|&a| a > 1.0) {
                // Outside the solid box: distance to the box is attained on
                // its surface.
                let mut d2 = 0.0;
                for a in ax {
                    let o = (a - 1.0).max(0.0);
                    d2 += o * o;
                }
                d2.sqrt()
            } else {
                // Inside: the nearest face is the one the largest coordinate
                // points at.
                1.0 - ax[0].max(ax[1]).max(ax[2])
            }
        }
    }
}

/// Mean distance-to-surface over a set of positions (0 for an empty set).
pub fn mean_distance(points: &[[f64; 3]], spec: ManifoldSpec) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let sum: f64 = points.iter().map(|p| distance_to_manifold(p, spec)).sum();
    sum / points.len() as f64
}

/// Nine noise levels logarithmically spaced over `[1e-3, 1e-1]`.
pub fn default_sigma_grid() -> Vec<f64> {
    (0..9).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect()
}

/// One noise level of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma: f64,
    /// Mean distance-to-surface of the noisy cloud.
    pub err_noisy: f64,
    /// Mean distance after Tikhonov denoising.
    pub err_tik: f64,
    /// Mean distance after TV denoising.
    pub err_tv: f64,
    /// Points sampled at this level.
    pub n: usize,
    /// Seed this level's sample was drawn with.
    pub seed: u64,
}

/// Results of a noise sweep, one row per level in input order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Writes rows as CSV under the header
    /// `sigma,err_noisy,err_tik,err_tv,n,seed`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "sigma,err_noisy,err_tik,err_tv,n,seed")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.sigma, r.err_noisy, r.err_tik, r.err_tv, r.n, r.seed
            )?;
        }
        Ok(())
    }

    /// Parses CSV produced by [`SweepResult::write_csv`]. Values round-trip
    /// exactly (floats are printed with shortest-round-trip formatting).
    pub fn read_csv<R: BufRead>(reader: R) -> Result<SweepResult> {
        let mut lines = reader.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim_end() == "sigma,err_noisy,err_tik,err_tv,n,seed" => {}
            Some((_, Ok(h))) => {
                return Err(Error::invalid(format!("unexpected sweep CSV header '{h}'")))
            }
            Some((_, Err(e))) => return Err(Error::invalid(format!("unreadable sweep CSV: {e}"))),
            None => return Err(Error::invalid("empty sweep CSV")),
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::invalid(format!("unreadable sweep CSV: {e}")))?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(Error::invalid(format!(
                    "sweep CSV line {}: expected 6 fields, got {}",
                    idx + 1,
                    fields.len()
                )));
            }
            let bad =
                |what: &str| Error::invalid(format!("sweep CSV line {}: bad {what}", idx + 1));
            rows.push(SweepRow {
                sigma: fields[0].parse().map_err(|_| bad("sigma"))?,
                err_noisy: fields[1].parse().map_err(|_| bad("err_noisy"))?,
                err_tik: fields[2].parse().map_err(|_| bad("err_tik"))?,
                err_tv: fields[3].parse().map_err(|_| bad("err_tv"))?,
                n: fields[4].parse().map_err(|_| bad("n"))?,
                seed: fields[5].parse().map_err(|_| bad("seed"))?,
            });
        }
        Ok(SweepResult { rows })
    }
}

/// Writes a sweep to a CSV file.
pub fn export_sweep(result: &SweepResult, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    result.write_csv(&mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a sweep back from a CSV file.
pub fn import_sweep(path: &Path) -> Result<SweepResult> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    SweepResult::read_csv(BufReader::new(file))
}

/// Runs the full pipeline once per noise level: sample, corrupt, build a
/// neighborhood graph of the noisy cloud, denoise with both regularizers
/// (sharing the graph, so the comparison is paired), and measure mean
/// distance-to-surface. Level `i` uses seed `base + i` for sampling and a
/// decorrelated stream for the noise.
pub fn run_sweep(
    spec: ManifoldSpec,
    n: usize,
    sigmas: &[f64],
    build: &GraphBuildParams,
    cfg: &DenoiseConfig,
    seed: u64,
) -> Result<SweepResult> {
    if sigmas.is_empty() {
        return Err(Error::invalid("sigma grid must be non-empty"));
    }
    let mut rows = Vec::with_capacity(sigmas.len());
    for (i, &sigma) in sigmas.iter().enumerate() {
        let level_seed = seed.wrapping_add(i as u64);
        let clean = sample_manifold(spec, n, level_seed)?;
        let noisy = add_noise(&clean, sigma, level_seed ^ NOISE_STREAM)?;
        let graph = build.build(&noisy)?;
        let f = GraphSignal::from_cloud(&noisy);
        let (x_tik, _) = tikhonov_denoise(&graph, &f, cfg)?;
        let (x_tv, _) = tv_denoise(&graph, &f, cfg)?;
        rows.push(SweepRow {
            sigma,
            err_noisy: mean_distance(noisy.points(), spec),
            err_tik: mean_distance(&x_tik.to_points()?, spec),
            err_tv: mean_distance(&x_tv.to_points()?, spec),
            n,
            seed: level_seed,
        });
    }
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_lie_on_the_surface() {
        for spec in ManifoldSpec::ALL {
            let cloud = sample_manifold(spec, 400, 7).unwrap();
            for p in cloud.points() {
                assert!(
                    distance_to_manifold(p, spec) <= 1e-12,
                    "{spec}: {p:?} is off-surface"
                );
            }
        }
        assert!(sample_manifold(ManifoldSpec::Plane, 0, 7).is_err());
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        for spec in ManifoldSpec::ALL {
            let a = sample_manifold(spec, 100, 42).unwrap();
            let b = sample_manifold(spec, 100, 42).unwrap();
            assert_eq!(a.points(), b.points());
            let c = sample_manifold(spec, 100, 43).unwrap();
            assert_ne!(a.points(), c.points());
        }
    }

    #[test]
    fn sphere_hemispheres_are_balanced() {
        let cloud = sample_manifold(ManifoldSpec::Sphere, 60_000, 11).unwrap();
        let upper = cloud.points().iter().filter(|p| p[2] > 0.0).count();
        let frac = upper as f64 / 60_000.0;
        assert!((frac - 0.5).abs() < 0.01, "upper fraction {frac}");
    }

    #[test]
    fn cube_faces_receive_equal_shares() {
        let n = 60_000usize;
        let cloud = sample_manifold(ManifoldSpec::Cube, n, 13).unwrap();
        let mut counts = [0usize; 6];
        for p in cloud.points() {
            // The face coordinate is set to exactly +/-1 during sampling.
            let axis = (0..3).find(|&a| p[a].abs() == 1.0).unwrap();
            counts[2 * axis + usize::from(p[axis] < 0.0)] += 1;
        }
        let expect = n as f64 / 6.0;
        let slack = 3.0 * (n as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for (face, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expect).abs() <= slack,
                "face {face}: {c} vs {expect} +/- {slack}"
            );
        }
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let cloud = sample_manifold(ManifoldSpec::Sphere, 50, 3).unwrap();
        let noisy = add_noise(&cloud, 0.0, 99).unwrap();
        assert_eq!(cloud.points(), noisy.points());
        assert!(add_noise(&cloud, -0.1, 99).is_err());
        assert!(add_noise(&cloud, f64::NAN, 99).is_err());
    }

    #[test]
    fn noise_variance_matches_sigma() {
        let n = 100_000;
        let sigma = 0.05;
        let clean = sample_manifold(ManifoldSpec::Plane, n, 17).unwrap();
        let noisy = add_noise(&clean, sigma, 18).unwrap();
        let offsets: Vec<f64> = clean
            .points()
            .iter()
            .zip(noisy.points())
            .map(|(a, b)| b[0] - a[0])
            .collect();
        let mean = offsets.iter().sum::<f64>() / n as f64;
        let var = offsets.iter().map(|o| (o - mean) * (o - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(
            (var - sigma * sigma).abs() <= 0.03 * sigma * sigma,
            "sample variance {var} vs {}",
            sigma * sigma
        );
    }

    #[test]
    fn noisy_plane_distance_matches_half_normal_mean() {
        // At small sigma the lateral overshoot past the square's edges is
        // negligible and the mean distance is E|z| = sigma * sqrt(2/pi). At
        // sigma = 0.1 the overshoot is *not* negligible and raises the mean
        // to about 0.085 (Monte-Carlo value); both regimes are pinned here.
        let n = 100_000;
        let clean = sample_manifold(ManifoldSpec::Plane, n, 21).unwrap();

        let half_normal = (2.0 / std::f64::consts::PI).sqrt();
        let noisy = add_noise(&clean, 0.01, 22).unwrap();
        let mean = mean_distance(noisy.points(), ManifoldSpec::Plane);
        assert!((mean - 0.01 * half_normal).abs() <= 2e-4, "mean {mean}");

        let noisy = add_noise(&clean, 0.1, 23).unwrap();
        let mean = mean_distance(noisy.points(), ManifoldSpec::Plane);
        assert!((mean - 0.085).abs() <= 2e-3, "mean {mean}");
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            distance_to_manifold(&[2.0, 0.0, 0.0], ManifoldSpec::Sphere),
            1.0
        );
        assert_eq!(
            distance_to_manifold(&[0.0, 0.0, 0.0], ManifoldSpec::Cube),
            1.0
        );
        assert_eq!(
            distance_to_manifold(&[2.0, 0.5, 0.0], ManifoldSpec::Plane),
            1.0
        );

        assert!((distance_to_manifold(&[0.5, 0.5, 0.3], ManifoldSpec::Plane) - 0.3).abs() < 1e-15);
        assert!((distance_to_manifold(&[0.9, 0.0, 0.0], ManifoldSpec::Cube) - 0.1).abs() < 1e-15);
        let corner = distance_to_manifold(&[2.0, 2.0, 2.0], ManifoldSpec::Cube);
        assert!((corner - 3f64.sqrt()).abs() < 1e-15);
        // Diagonal outside the square: both lateral clamps plus height.
        let d = distance_to_manifold(&[1.3, -0.4, 0.2], ManifoldSpec::Plane);
        assert!((d - (0.09f64 + 0.16 + 0.04).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn distance_is_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for spec in ManifoldSpec::ALL {
            for _ in 0..2000 {
                let draw = |rng: &mut ChaCha8Rng| {
                    [
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                    ]
                };
                let p = draw(&mut rng);
                let q = draw(&mut rng);
                let gap = (distance_to_manifold(&p, spec) - distance_to_manifold(&q, spec)).abs();
                let step =
                    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                assert!(gap <= step + 1e-12, "{spec}: {gap} > {step}");
            }
        }
    }

    #[test]
    fn default_grid_is_log_spaced() {
        let grid = default_sigma_grid();
        assert_eq!(grid.len(), 9);
        assert!((grid[0] - 1e-3).abs() < 1e-18);
        assert!((grid[4] - 1e-2).abs() < 1e-17);
        assert!((grid[8] - 1e-1).abs() < 1e-16);
        let ratio = 10f64.powf(0.25);
        for w in grid.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trips_exactly() {
        let result = SweepResult {
            rows: vec![
                SweepRow {
                    sigma: 1e-3,
                    err_noisy: 0.1234567890123,
                    err_tik: 1.0 / 3.0,
                    err_tv: 2.0_f64.sqrt() * 1e-5,
                    n: 10_000,
                    seed: 42,
                },
                SweepRow {
                    sigma: 0.1,
                    err_noisy: 0.085,
                    err_tik: f64::MIN_POSITIVE,
                    err_tv: 0.0,
                    n: 1,
                    seed: u64::MAX,
                },
            ],
        };
        let mut buf = Vec::new();
        result.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("sigma,err_noisy,err_tik,err_tv,n,seed\n"));
        assert_eq!(text.lines().count(), 1 + result.rows.len());

        let back = SweepResult::read_csv(&buf[..]).unwrap();
        assert_eq!(back, result);

        assert!(SweepResult::read_csv("nope\n1,2,3,4,5,6\n".as_bytes()).is_err());
        assert!(
            SweepResult::read_csv("sigma,err_noisy,err_tik,err_tv,n,seed\n1,2,3\n".as_bytes())
                .is_err()
        );
    }

    #[test]
    fn sweep_on_clean_plane_stays_clean() {
        let result = run_sweep(
            ManifoldSpec::Plane,
            300,
            &[0.0],
            &GraphBuildParams::default(),
            &DenoiseConfig::default(),
            42,
        )
        .unwrap();
        let row = &result.rows[0];
        assert!(row.err_noisy <= 1e-6, "noisy {}", row.err_noisy);
        assert!(row.err_tik <= 1e-6, "tik {}", row.err_tik);
        assert!(row.err_tv <= 1e-6, "tv {}", row.err_tv);
        assert_eq!(row.n, 300);
        assert_eq!(row.seed, 42);
    }

    #[test]
    fn noisy_error_grows_with_sigma() {
        let sigmas = [1e-3, 5e-3, 2e-2, 1e-1];
        let result = run_sweep(
            ManifoldSpec::Sphere,
            500,
            &sigmas,
            &GraphBuildParams::default(),
            &DenoiseConfig::default(),
            7,
        )
        .unwrap();
        assert_eq!(result.rows.len(), sigmas.len());
        for w in result.rows.windows(2) {
            assert!(w[0].err_noisy < w[1].err_noisy);
        }
        for row in &result.rows {
            assert!(row.err_noisy.is_finite() && row.err_noisy >= 0.0);
            assert!(row.err_tik.is_finite() && row.err_tik >= 0.0);
            assert!(row.err_tv.is_finite() && row.err_tv >= 0.0);
        }
        assert!(run_sweep(
            ManifoldSpec::Sphere,
            500,
            &[],
            &GraphBuildParams::default(),
            &DenoiseConfig::default(),
            7
        )
        .is_err());
    }
}
