//! Subcommand implementations.
//!
//! Each command resolves its configuration first, prints it, snapshots it
//! to `run-config.txt` in the output directory, and then runs its stages.
//! All file artifacts land in the output directory under fixed names so
//! runs are easy to script against. The returned exit code is 0 only when
//! every stage converged and every artifact was written; a completed run
//! whose solver hit the iteration cap returns [`EXIT_NOT_CONVERGED`].

use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pcdenoise::bench::{export_sweep, run_sweep, ManifoldSpec};
use pcdenoise::{
    build_epsilon_graph, degree_filter, iterative_denoise, read_cloud, write_cloud, Error,
    FilterReport, PointCloud, Result, SolveDiagnostics, WeightedGraph,
};

use crate::config::{PipelineConfig, TauRule};

/// Exit code for a run that finished and wrote outputs but whose solver
/// stopped at the iteration cap instead of the tolerance.
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Outlier removal only: build the epsilon graph, threshold weighted
/// degrees, write the surviving cloud and the per-point report.
pub fn cmd_filter(cfg: &PipelineConfig) -> Result<i32> {
    let input = cfg.require_input()?.to_path_buf();
    announce(cfg, "filter")?;

    let cloud = read_input(cfg, &input)?;
    let (kept, report) = filter_stage(cfg, &cloud)?;

    let cloud_path = cfg
        .output_dir
        .join(format!("filtered.{}", cfg.output_extension()));
    write_cloud(&kept, &cloud_path, cfg.output_format)?;
    let report_path = cfg.output_dir.join("filter-report.csv");
    write_with(&report_path, |w| report.write_csv(w))?;
    println!("wrote {}", cloud_path.display());
    println!("wrote {}", report_path.display());
    Ok(0)
}

/// The full pipeline: outlier filtering, then iterative position denoising
/// with graph rebuilds between rounds.
pub fn cmd_denoise(cfg: &PipelineConfig) -> Result<i32> {
    let input = cfg.require_input()?.to_path_buf();
    announce(cfg, "denoise")?;

    let cloud = read_input(cfg, &input)?;
    let (kept, report) = filter_stage(cfg, &cloud)?;
    let report_path = cfg.output_dir.join("filter-report.csv");
    write_with(&report_path, |w| report.write_csv(w))?;

    let started = Instant::now();
    let (denoised, diagnostics) = iterative_denoise(
        &kept,
        &cfg.graph_build_params(),
        &cfg.denoise_config(),
        cfg.regularizer,
        cfg.rounds,
    )?;
    let gamma = cfg.denoise_config().effective_gamma(cfg.regularizer);
    println!(
        "denoise: {} with gamma {gamma}{}, {} round(s), {:.2}s",
        cfg.regularizer,
        if cfg.gamma.is_none() {
            " (default)"
        } else {
            ""
        },
        cfg.rounds,
        started.elapsed().as_secs_f64()
    );
    let mut all_converged = true;
    for (round, diag) in diagnostics.iter().enumerate() {
        print_solve_summary(round + 1, diag);
        let path = if diagnostics.len() == 1 {
            cfg.output_dir.join("solve-diagnostics.csv")
        } else {
            cfg.output_dir
                .join(format!("solve-diagnostics-{}.csv", round + 1))
        };
        write_with(&path, |w| diag.write_csv(w))?;
        all_converged &= diag.converged;
    }

    let cloud_path = cfg
        .output_dir
        .join(format!("denoised.{}", cfg.output_extension()));
    write_cloud(&denoised, &cloud_path, cfg.output_format)?;
    println!("wrote {}", cloud_path.display());
    println!("wrote {}", report_path.display());

    if all_converged {
        Ok(0)
    } else {
        eprintln!("warning: solver stopped at the iteration cap; outputs were still written");
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// Noise sweep over synthetic shapes: one CSV per shape plus a gnuplot
/// script rendering them.
pub fn cmd_bench(cfg: &PipelineConfig) -> Result<i32> {
    announce(cfg, "bench")?;

    let sigmas = cfg.sigma_grid();
    let shapes = cfg.shape.shapes();
    let build = cfg.graph_build_params();
    let denoise = cfg.denoise_config();
    for &spec in &shapes {
        let started = Instant::now();
        let result = run_sweep(spec, cfg.n, &sigmas, &build, &denoise, cfg.seed)?;
        let path = cfg.output_dir.join(format!("sweep_{spec}.csv"));
        export_sweep(&result, &path)?;
        println!(
            "wrote {} ({} levels, n = {}, {:.1}s)",
            path.display(),
            result.rows.len(),
            cfg.n,
            started.elapsed().as_secs_f64()
        );
        for row in &result.rows {
            println!(
                "  sigma {:9.6}: noisy {:.6}, tikhonov {:.6}, tv {:.6}",
                row.sigma, row.err_noisy, row.err_tik, row.err_tv
            );
        }
    }

    let script_path = cfg.output_dir.join("sweep.gp");
    write_with(&script_path, |w| write_plot_script(w, &shapes))?;
    println!("wrote {}", script_path.display());
    Ok(0)
}

/// Prints structural statistics of the neighborhood graph a configuration
/// would build: size, components, and the degree distribution.
pub fn cmd_graph_stats(cfg: &PipelineConfig, export_edges: bool) -> Result<i32> {
    let input = cfg.require_input()?.to_path_buf();
    print!("{}", cfg.render("graph-stats"));

    let cloud = read_input(cfg, &input)?;
    let started = Instant::now();
    let graph = cfg.graph_build_params().build(&cloud)?;
    println!(
        "graph: {} vertices, {} edges ({} arcs), theta {:.6}, built in {:.2}s",
        graph.vertex_count(),
        graph.edge_count(),
        graph.arc_count(),
        graph.theta(),
        started.elapsed().as_secs_f64()
    );
    let (components, _) = graph.connected_components();
    println!("connected components: {components}");

    let neighbor_counts: Vec<usize> = (0..graph.vertex_count())
        .map(|i| graph.neighbors(i).count())
        .collect();
    print_count_stats("neighbors per vertex", &neighbor_counts);
    print_degree_stats("weighted degree", graph.weighted_degrees());
    print_histogram(&neighbor_counts);

    if export_edges {
        fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
        let path = cfg.output_dir.join("edges.txt");
        write_with(&path, |w| graph.export_edge_list(w))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

/// Prints the resolved configuration and snapshots it into the output
/// directory so the run can be reproduced from that one artifact.
fn announce(cfg: &PipelineConfig, command: &str) -> Result<()> {
    let text = cfg.render(command);
    print!("{text}");
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    let path = cfg.output_dir.join("run-config.txt");
    fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

fn read_input(cfg: &PipelineConfig, input: &Path) -> Result<PointCloud> {
    let cloud = read_cloud(input, cfg.input_format)?;
    println!("read {} points from {}", cloud.len(), input.display());
    Ok(cloud)
}

/// The shared outlier-removal stage: epsilon graph, threshold resolution,
/// degree filter, and a printed summary.
fn filter_stage(cfg: &PipelineConfig, cloud: &PointCloud) -> Result<(PointCloud, FilterReport)> {
    let started = Instant::now();
    let graph = build_epsilon_graph(cloud, cfg.epsilon, cfg.theta)?;
    let tau = cfg.resolve_tau(&graph)?;
    let (kept, report) = degree_filter(cloud, &graph, tau)?;
    print_filter_summary(cfg, &graph, &report, started.elapsed().as_secs_f64());
    Ok((kept, report))
}

fn print_filter_summary(
    cfg: &PipelineConfig,
    graph: &WeightedGraph,
    report: &FilterReport,
    secs: f64,
) {
    let n = report.degrees.len();
    let removed = report.removed.len();
    let rule = match cfg.tau {
        TauRule::Fixed(_) => String::from("fixed"),
        TauRule::Percentile(p) => format!("percentile {p}"),
    };
    println!(
        "filter: epsilon {} graph, {} edges; tau = {} ({rule}); removed {removed} of {n} \
         points ({:.2}%), {secs:.2}s",
        cfg.epsilon,
        graph.edge_count(),
        report.tau,
        100.0 * removed as f64 / n as f64,
    );
    print_degree_stats("weighted degree", &report.degrees);
}

fn print_solve_summary(round: usize, diag: &SolveDiagnostics) {
    let objective = diag.objective_trace.last().copied().unwrap_or(f64::NAN);
    println!(
        "round {round}: {} in {} iterations, residual {:.3e}, objective {:.6e}",
        if diag.converged {
            "converged"
        } else {
            "NOT converged"
        },
        diag.iterations,
        diag.final_residual,
        objective,
    );
}

fn print_degree_stats(label: &str, degrees: &[f64]) {
    let mut sorted = degrees.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted.first().copied().unwrap_or(f64::NAN);
    let max = sorted.last().copied().unwrap_or(f64::NAN);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(f64::NAN);
    let mean = degrees.iter().sum::<f64>() / degrees.len().max(1) as f64;
    println!("{label}: min {min:.4}, median {median:.4}, mean {mean:.4}, max {max:.4}");
}

fn print_count_stats(label: &str, counts: &[usize]) {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let min = sorted.first().copied().unwrap_or(0);
    let max = sorted.last().copied().unwrap_or(0);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0);
    println!("{label}: min {min}, median {median}, max {max}");
}

/// Degree histogram: exact counts when the degree spread is small, ten
/// equal-width buckets otherwise.
fn print_histogram(counts: &[usize]) {
    let max = counts.iter().copied().max().unwrap_or(0);
    let min = counts.iter().copied().min().unwrap_or(0);
    println!("degree histogram:");
    if max - min <= 16 {
        let mut freq = vec![0usize; max - min + 1];
        for &c in counts {
            freq[c - min] += 1;
        }
        for (offset, &count) in freq.iter().enumerate() {
            if count > 0 {
                println!("  {:>11}: {count}", min + offset);
            }
        }
    } else {
        let buckets = 10usize;
        let width = (max - min).div_ceil(buckets);
        let mut freq = vec![0usize; buckets];
        for &c in counts {
            freq[((c - min) / width).min(buckets - 1)] += 1;
        }
        for (b, &count) in freq.iter().enumerate() {
            let lo = min + b * width;
            let hi = (lo + width - 1).min(max);
            if count > 0 {
                println!("  {:>11}: {count}", format!("{lo}-{hi}"));
            }
        }
    }
}

/// Emits a gnuplot script plotting every swept CSV on log-log axes.
fn write_plot_script<W: Write>(mut w: W, shapes: &[ManifoldSpec]) -> std::io::Result<()> {
    writeln!(
        w,
        "# Mean surface error vs noise level. Render with: gnuplot sweep.gp"
    )?;
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set logscale xy")?;
    writeln!(w, "set xlabel 'noise sigma'")?;
    writeln!(w, "set ylabel 'mean distance to surface'")?;
    writeln!(w, "set key left top")?;
    writeln!(w, "set grid")?;
    writeln!(w, "set terminal pngcairo size 900,600")?;
    for spec in shapes {
        writeln!(w)?;
        writeln!(w, "set output 'sweep_{spec}.png'")?;
        writeln!(w, "set title '{spec}'")?;
        writeln!(
            w,
            "plot 'sweep_{spec}.csv' skip 1 using 1:2 with linespoints lw 2 title 'noisy', \\"
        )?;
        writeln!(
            w,
            "     'sweep_{spec}.csv' skip 1 using 1:3 with linespoints lw 2 title 'tikhonov', \\"
        )?;
        writeln!(
            w,
            "     'sweep_{spec}.csv' skip 1 using 1:4 with linespoints lw 2 title 'tv'"
        )?;
    }
    Ok(())
}

/// Creates `path` and streams `body` into it through a buffered writer,
/// annotating any failure with the path.
fn write_with<F>(path: &PathBuf, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path.clone(), e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|()| w.flush())
        .map_err(|e| Error::io(path.clone(), e))
}
