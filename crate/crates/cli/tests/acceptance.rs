//! Acceptance suite: one test per shipped guarantee, each checked against
//! an oracle that is independent of the implementation under test (exhaustive
//! enumeration, dense eigendecomposition, closed forms, planted ground
//! truth) and against an explicit wall-clock budget.
//!
//! Every test prints `[acceptance N] <name>: PASS (<seconds>)` on success
//! (visible with `--nocapture`); a failure panics with the measured values.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pcdenoise::bench::{
    add_noise, default_sigma_grid, mean_distance, run_sweep, sample_manifold, ManifoldSpec,
};
use pcdenoise::{
    build_epsilon_graph, build_knn_graph, degree_filter, iterative_denoise, tikhonov_denoise,
    tv_denoise, DenoiseConfig, EdgeSignal, GraphBuildParams, GraphSignal, PointCloud, Regularizer,
    Theta, WeightedGraph,
};

/// Asserts the budget and prints the per-criterion verdict line.
fn finish(number: usize, name: &str, started: Instant, budget_secs: f64) {
    let secs = started.elapsed().as_secs_f64();
    assert!(
        secs < budget_secs,
        "[acceptance {number}] {name}: FAIL — took {secs:.1}s, budget {budget_secs}s"
    );
    println!("[acceptance {number}] {name}: PASS ({secs:.2}s)");
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
    (0..n)
        .map(|_| {
            [
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            ]
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 1. Graph construction vs exhaustive enumeration.
// ---------------------------------------------------------------------------

fn oracle_weight(d2: f64, theta: f64) -> f64 {
    (-d2 / (2.0 * theta * theta)).exp()
}

/// Exhaustive k-NN with OR symmetrization over all O(n^2) pairs.
fn oracle_knn(points: &[[f64; 3]], k: usize, theta: f64) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut picked = BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (dist2(points[i], points[j]), j))
            .collect();
        others.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(_, j) in others.iter().take(k) {
            picked.insert((i.min(j), i.max(j)));
        }
    }
    picked
        .into_iter()
        .map(|(i, j)| (i, j, oracle_weight(dist2(points[i], points[j]), theta)))
        .collect()
}

/// Exhaustive closed-ball epsilon graph over all O(n^2) pairs.
fn oracle_epsilon(points: &[[f64; 3]], eps: f64, theta: f64) -> Vec<(usize, usize, f64)> {
    let n = points.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = dist2(points[i], points[j]);
            if d2 <= eps * eps {
                edges.push((i, j, oracle_weight(d2, theta)));
            }
        }
    }
    edges
}

fn undirected_edges(graph: &WeightedGraph) -> Vec<(usize, usize, f64)> {
    graph.arcs().filter(|&(i, j, _)| i < j).collect()
}

fn assert_same_edges(got: &[(usize, usize, f64)], want: &[(usize, usize, f64)], what: &str) {
    assert_eq!(
        got.len(),
        want.len(),
        "{what}: {} edges, oracle has {}",
        got.len(),
        want.len()
    );
    for (g, w) in got.iter().zip(want) {
        assert_eq!((g.0, g.1), (w.0, w.1), "{what}: adjacency differs");
        assert!(
            (g.2 - w.2).abs() <= 1e-12,
            "{what}: weight {} vs oracle {} on edge ({}, {})",
            g.2,
            w.2,
            g.0,
            g.1
        );
    }
}

#[test]
fn criterion_01_graph_construction_matches_exhaustive_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..50 {
        let n = rng.random_range(2..=200);
        let points = random_cloud(&mut rng, n);
        let cloud = PointCloud::new(points.clone()).unwrap();
        let theta = rng.random_range(0.05..0.5);

        let k = rng.random_range(1..=8.min(n - 1).max(1));
        let knn = build_knn_graph(&cloud, k, Theta::Fixed(theta)).unwrap();
        assert_same_edges(
            &undirected_edges(&knn),
            &oracle_knn(&points, k, theta),
            &format!("round {round} knn k={k}"),
        );

        let eps = rng.random_range(0.05..0.35);
        let eps_graph = build_epsilon_graph(&cloud, eps, Theta::Fixed(theta)).unwrap();
        assert_same_edges(
            &undirected_edges(&eps_graph),
            &oracle_epsilon(&points, eps, theta),
            &format!("round {round} epsilon={eps:.3}"),
        );
    }
    finish(
        1,
        "graph construction matches exhaustive oracle",
        started,
        10.0,
    );
}

// ---------------------------------------------------------------------------
// 2. Tikhonov solution vs dense spectral filtering.
// ---------------------------------------------------------------------------

/// A connected random weighted graph: a ring backbone plus random chords.
fn random_graph_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize, f64)> {
    let mut edges = BTreeMap::new();
    for i in 0..n {
        let j = (i + 1) % n;
        edges.insert((i.min(j), i.max(j)), rng.random_range(0.05..1.0));
    }
    for _ in 0..rng.random_range(n..3 * n) {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            edges
                .entry((i.min(j), i.max(j)))
                .or_insert_with(|| rng.random_range(0.05..1.0));
        }
    }
    edges.into_iter().map(|((i, j), w)| (i, j, w)).collect()
}

fn dense_laplacian(n: usize, edges: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for &(i, j, w) in edges {
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    l
}

#[test]
fn criterion_02_tikhonov_matches_spectral_filter() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for round in 0..20 {
        let n = rng.random_range(10..=100);
        let edges = random_graph_edges(&mut rng, n);
        let graph = WeightedGraph::from_edges(n, &edges).unwrap();
        let gamma = rng.random_range(0.01..1.0);
        let dim = 1 + (round % 3);

        let data: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = GraphSignal::new(data.clone(), dim).unwrap();

        let cfg = DenoiseConfig {
            gamma: Some(gamma),
            solver_tol: Some(1e-12),
            max_iter: 10_000,
            ..DenoiseConfig::default()
        };
        let (x, diag) = tikhonov_denoise(&graph, &f, &cfg).unwrap();
        assert!(diag.converged, "round {round}: CG did not converge");

        // Oracle: eigendecompose the dense Laplacian and apply the filter
        // 1 / (1 + 2 gamma lambda) in the eigenbasis, per component.
        let eig = SymmetricEigen::new(dense_laplacian(n, &edges));
        let mut err2 = 0.0;
        let mut norm2 = 0.0;
        for c in 0..dim {
            let col = DVector::from_iterator(n, (0..n).map(|i| data[i * dim + c]));
            let coeffs = eig.eigenvectors.tr_mul(&col);
            let scaled = DVector::from_iterator(
                n,
                coeffs
                    .iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(&c, &lam)| c / (1.0 + 2.0 * gamma * lam)),
            );
            let oracle = &eig.eigenvectors * scaled;
            for i in 0..n {
                let diff = x.values()[i * dim + c] - oracle[i];
                err2 += diff * diff;
                norm2 += oracle[i] * oracle[i];
            }
        }
        let rel = (err2 / norm2).sqrt();
        assert!(
            rel <= 1e-8,
            "round {round}: relative error {rel:.2e} vs spectral filter (n={n}, gamma={gamma:.3})"
        );
    }
    finish(2, "tikhonov solve matches spectral filtering", started, 5.0);
}

// ---------------------------------------------------------------------------
// 3. TV closed form on the two-point graph.
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_tv_two_point_closed_form() {
    let started = Instant::now();
    let graph = WeightedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
    let f = GraphSignal::new(vec![0.0, 1.0], 1).unwrap();
    for gamma in [0.05, 0.1, 0.25, 0.4] {
        let cfg = DenoiseConfig {
            gamma: Some(gamma),
            solver_tol: Some(1e-10),
            max_iter: 50_000,
            ..DenoiseConfig::default()
        };
        let (x, diag) = tv_denoise(&graph, &f, &cfg).unwrap();
        assert!(diag.converged, "gamma {gamma}: ADMM did not converge");
        let expected = [gamma, 1.0 - gamma];
        for (i, &want) in expected.iter().enumerate() {
            assert!(
                (x.values()[i] - want).abs() <= 1e-6,
                "gamma {gamma}: x[{i}] = {}, expected {want}",
                x.values()[i]
            );
        }
    }
    finish(3, "tv two-point closed form", started, 1.0);
}

// ---------------------------------------------------------------------------
// 4. Adjoint and Laplacian identities.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_adjoint_and_laplacian_identities() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for round in 0..100 {
        let n = rng.random_range(5..=60);
        let edges = random_graph_edges(&mut rng, n);
        let graph = WeightedGraph::from_edges(n, &edges).unwrap();
        let dim = 1 + (round % 3);

        let x = GraphSignal::new(
            (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            dim,
        )
        .unwrap();
        let mut z = EdgeSignal::zeros(graph.arc_count(), dim);
        for v in z.values_mut() {
            *v = rng.random_range(-1.0..1.0);
        }

        // <grad x, z> == <x, -div z>
        let gx = graph.gradient(&x).unwrap();
        let div_z = graph.divergence(&z).unwrap();
        let lhs: f64 = gx.values().iter().zip(z.values()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x
            .values()
            .iter()
            .zip(div_z.values())
            .map(|(a, b)| -a * b)
            .sum();
        assert!(
            (lhs - rhs).abs() <= 1e-10,
            "round {round}: <grad x, z> = {lhs}, <x, -div z> = {rhs}"
        );

        // ||grad x||^2 == 2 x' L x
        let energy: f64 = gx.values().iter().map(|v| v * v).sum();
        let lx = graph.laplacian_apply(&x).unwrap();
        let quad: f64 = x.values().iter().zip(lx.values()).map(|(a, b)| a * b).sum();
        assert!(
            (energy - 2.0 * quad).abs() <= 1e-10,
            "round {round}: ||grad x||^2 = {energy}, 2 x'Lx = {}",
            2.0 * quad
        );
    }
    finish(4, "adjoint and laplacian identities", started, 2.0);
}

// ---------------------------------------------------------------------------
// 5. Planted-outlier removal.
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_planted_outliers_are_removed() {
    let started = Instant::now();
    const INLIERS: usize = 2000;
    const OUTLIERS: usize = 20;
    const EPS: f64 = 0.18;
    let mut outliers_removed = 0usize;
    let mut inliers_removed = 0usize;
    for seed in 0..10u64 {
        let inliers = sample_manifold(ManifoldSpec::Sphere, INLIERS, 1000 + seed).unwrap();
        let mut points = inliers.points().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
        while points.len() < INLIERS + OUTLIERS {
            let candidate = [
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ];
            let clear = inliers
                .points()
                .iter()
                .all(|&p| dist2(p, candidate) > EPS * EPS);
            if clear {
                points.push(candidate);
            }
        }
        let cloud = PointCloud::new(points).unwrap();
        let graph = build_epsilon_graph(&cloud, EPS, Theta::Auto).unwrap();
        let (_, report) = degree_filter(&cloud, &graph, 3.0).unwrap();
        outliers_removed += report.removed.iter().filter(|&&i| i >= INLIERS).count();
        inliers_removed += report.removed.iter().filter(|&&i| i < INLIERS).count();
    }
    assert_eq!(
        outliers_removed,
        10 * OUTLIERS,
        "every planted outlier must be removed"
    );
    let inlier_rate = inliers_removed as f64 / (10 * INLIERS) as f64;
    assert!(
        inlier_rate <= 0.02,
        "inlier loss {inlier_rate:.4} exceeds 2% ({inliers_removed} points)"
    );
    finish(5, "planted outliers removed, inliers kept", started, 10.0);
}

// ---------------------------------------------------------------------------
// 6. Plane trend: Tikhonov halves the error and beats TV.
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_plane_trend_tikhonov_halves_error() {
    let started = Instant::now();
    let mid_sigma = default_sigma_grid()[4];
    let result = run_sweep(
        ManifoldSpec::Plane,
        10_000,
        &[mid_sigma],
        &GraphBuildParams::default(),
        &DenoiseConfig::default(),
        42,
    )
    .unwrap();
    let row = &result.rows[0];
    assert!(
        row.err_tik <= 0.5 * row.err_noisy,
        "tikhonov error {} vs noisy {} (ratio {:.3})",
        row.err_tik,
        row.err_noisy,
        row.err_tik / row.err_noisy
    );
    assert!(
        row.err_tik < row.err_tv,
        "tikhonov {} should beat tv {} on the plane",
        row.err_tik,
        row.err_tv
    );
    finish(
        6,
        "plane trend: tikhonov halves error, beats tv",
        started,
        60.0,
    );
}

// ---------------------------------------------------------------------------
// 7. Cube/sphere trend: TV competitive, both reduce noise.
// ---------------------------------------------------------------------------

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

#[test]
fn criterion_07_cube_sphere_trend_tv_competitive() {
    let started = Instant::now();
    let mid_sigma = default_sigma_grid()[4];
    let build = GraphBuildParams::default();
    let cfg = DenoiseConfig::default();

    let mut errs = BTreeMap::new();
    for spec in [ManifoldSpec::Cube, ManifoldSpec::Sphere] {
        let mut noisy = Vec::new();
        let mut tik = Vec::new();
        let mut tv = Vec::new();
        for seed in 42..47u64 {
            let result = run_sweep(spec, 10_000, &[mid_sigma], &build, &cfg, seed).unwrap();
            let row = &result.rows[0];
            noisy.push(row.err_noisy);
            tik.push(row.err_tik);
            tv.push(row.err_tv);
        }
        errs.insert(
            spec.name(),
            (median(&mut noisy), median(&mut tik), median(&mut tv)),
        );
    }

    let (cube_noisy, cube_tik, cube_tv) = errs["cube"];
    let (sphere_noisy, sphere_tik, sphere_tv) = errs["sphere"];
    assert!(
        cube_tv <= cube_tik,
        "median tv {cube_tv} should not exceed median tikhonov {cube_tik} on the cube"
    );
    for (what, err, noisy) in [
        ("cube tikhonov", cube_tik, cube_noisy),
        ("cube tv", cube_tv, cube_noisy),
        ("sphere tikhonov", sphere_tik, sphere_noisy),
        ("sphere tv", sphere_tv, sphere_noisy),
    ] {
        assert!(
            err <= 0.8 * noisy,
            "{what}: median error {err} is not a 20% reduction of noisy {noisy}"
        );
    }
    finish(
        7,
        "cube/sphere trend: tv competitive, both reduce",
        started,
        300.0,
    );
}

// ---------------------------------------------------------------------------
// 8. High noise: the pipeline stays healthy at the top of the grid.
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_high_noise_pipeline_robust() {
    let started = Instant::now();
    let top_sigma = *default_sigma_grid().last().unwrap();
    let clean = sample_manifold(ManifoldSpec::Cube, 10_000, 42).unwrap();
    let noisy = add_noise(&clean, top_sigma, 77).unwrap();
    let graph = GraphBuildParams::default().build(&noisy).unwrap();
    let f = GraphSignal::from_cloud(&noisy);
    let cfg = DenoiseConfig::default();

    let (x_tik, diag_tik) = tikhonov_denoise(&graph, &f, &cfg).unwrap();
    let (x_tv, diag_tv) = tv_denoise(&graph, &f, &cfg).unwrap();
    assert!(
        diag_tik.converged,
        "tikhonov solver failed at sigma {top_sigma}"
    );
    assert!(diag_tv.converged, "tv solver failed at sigma {top_sigma}");

    // Errors are reported; no improvement is required at this noise level.
    let spec = ManifoldSpec::Cube;
    let report = [
        ("noisy", mean_distance(noisy.points(), spec)),
        ("tikhonov", mean_distance(&x_tik.to_points().unwrap(), spec)),
        ("tv", mean_distance(&x_tv.to_points().unwrap(), spec)),
    ];
    for (what, err) in report {
        assert!(err.is_finite(), "{what} error is not finite");
        println!("  sigma {top_sigma}: {what} mean error {err:.6}");
    }
    finish(
        8,
        "high-noise pipeline completes and reports",
        started,
        120.0,
    );
}

// ---------------------------------------------------------------------------
// 9. Million-point scale and memory budget.
// ---------------------------------------------------------------------------

fn peak_rss_gib() -> f64 {
    let status = std::fs::read_to_string("/proc/self/status")
        .expect("reading /proc/self/status for the peak-memory check");
    let line = status
        .lines()
        .find(|l| l.starts_with("VmHWM:"))
        .expect("VmHWM line in /proc/self/status");
    let kb: f64 = line
        .split_whitespace()
        .nth(1)
        .expect("VmHWM value")
        .parse()
        .expect("VmHWM number");
    kb / (1024.0 * 1024.0)
}

#[test]
fn criterion_09_million_point_scale_budget() {
    let started = Instant::now();
    const N: usize = 1_000_000;
    let clean = sample_manifold(ManifoldSpec::Sphere, N, 4242).unwrap();
    let noisy = add_noise(&clean, 0.01, 2424).unwrap();
    drop(clean);

    let filter_graph = build_epsilon_graph(&noisy, 0.01, Theta::Auto).unwrap();
    let (kept, report) = degree_filter(&noisy, &filter_graph, 3.0).unwrap();
    drop(filter_graph);
    drop(noisy);
    assert!(
        kept.len() > N / 2,
        "filter kept only {} of {N} points",
        kept.len()
    );
    println!(
        "  filter: kept {} of {N} ({} removed)",
        kept.len(),
        report.removed.len()
    );

    let (denoised, diags) = iterative_denoise(
        &kept,
        &GraphBuildParams::default(),
        &DenoiseConfig::default(),
        Regularizer::Tv,
        1,
    )
    .unwrap();
    assert_eq!(denoised.len(), kept.len());
    println!(
        "  tv: {} iterations, converged = {}",
        diags[0].iterations, diags[0].converged
    );

    let secs = started.elapsed().as_secs_f64();
    let peak = peak_rss_gib();
    println!("  elapsed {secs:.0}s, peak rss {peak:.2} GiB");
    assert!(
        peak < 8.0,
        "peak rss {peak:.2} GiB exceeds the 8 GiB budget"
    );
    finish(9, "million-point pipeline within budget", started, 1800.0);
}

// ---------------------------------------------------------------------------
// 10. Benchmark determinism through the shipped binary.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_bench_csv_determinism() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    for dir in ["a", "b"] {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_pcdenoise"))
            .args([
                "bench",
                "--shape",
                "all",
                "-n",
                "400",
                "--levels",
                "3",
                "--seed",
                "1234",
                "--output-dir",
                dir,
            ])
            .current_dir(tmp.path())
            .output()
            .expect("spawn pcdenoise bench");
        assert!(
            out.status.success(),
            "bench failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for shape in ["plane", "sphere", "cube"] {
        let a = std::fs::read(tmp.path().join(format!("a/sweep_{shape}.csv"))).unwrap();
        let b = std::fs::read(tmp.path().join(format!("b/sweep_{shape}.csv"))).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "sweep_{shape}.csv differs between identical runs");
    }
    finish(10, "bench csv byte-identical across runs", started, 120.0);
}
