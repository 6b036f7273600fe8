//! Command implementations shared by the binary and the test suite.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;

use crp_core::engine;
use crp_core::model::{Scenario, SolutionReport, SolverParams};
use crp_core::rfleg::RfLegSolver;
use crp_core::scengen::{boundary_points, generate, GenConfig};

use crate::formats::{
    BatchSummaryFile, ParamsFile, ScenarioFile, SolutionFile, SummaryFile,
};

/// Exit code for a run that finished with unresolved conflicts.
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Args, Clone, Debug)]
pub struct GeneratorArgs {
    /// Number of flights to generate.
    #[arg(long, default_value_t = 320)]
    pub flights: usize,
    /// Number of flight levels.
    #[arg(long, default_value_t = 12)]
    pub levels: usize,
    /// Sector width (nmi).
    #[arg(long, default_value_t = 54.0)]
    pub width: f64,
    /// Sector height (nmi).
    #[arg(long, default_value_t = 64.8)]
    pub height: f64,
    /// Boundary point spacing (nmi); must divide both edges.
    #[arg(long, default_value_t = 5.4)]
    pub spacing: f64,
    /// Release horizon (hours); also the end of the checking window.
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    /// Release slot duration (hours).
    #[arg(long, default_value_t = 0.02)]
    pub slot: f64,
    /// Common ground speed (knots).
    #[arg(long, default_value_t = 533.0)]
    pub speed: f64,
}

impl GeneratorArgs {
    pub fn to_config(&self, seed: u64) -> GenConfig<f64> {
        GenConfig {
            width: self.width,
            height: self.height,
            spacing: self.spacing,
            flight_count: self.flights,
            horizon: self.horizon,
            slot: self.slot,
            speed: self.speed,
            level_count: self.levels,
            rng_seed: seed,
        }
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct SolverArgs {
    /// Cluster-and-disperse iteration cap (N).
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Sampling step in seconds.
    #[arg(long)]
    pub dt_seconds: Option<f64>,
    /// Minimum separation distance s (nmi).
    #[arg(long)]
    pub separation: Option<f64>,
    /// Score margin s0 (nmi).
    #[arg(long)]
    pub margin: Option<f64>,
    /// Symmetric arc half-angle bound (degrees).
    #[arg(long)]
    pub theta_bound_deg: Option<f64>,
    /// Per-cluster dispersal quota per sweep.
    #[arg(long)]
    pub r: Option<usize>,
    /// Per-level dispersal cap per iteration.
    #[arg(long)]
    pub big_r: Option<usize>,
    /// JSON file with parameter overrides (flags win over the file).
    #[arg(long)]
    pub params: Option<PathBuf>,
}

impl SolverArgs {
    /// Defaults, then the params file, then explicit flags; validated.
    pub fn build_params(&self, seed: u64) -> anyhow::Result<SolverParams<f64>> {
        let mut p = SolverParams::<f64>::defaults();
        if let Some(path) = &self.params {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading params file {}", path.display()))?;
            let file: ParamsFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing params file {}", path.display()))?;
            file.apply_to(&mut p);
        }
        if let Some(v) = self.iterations {
            p.max_iterations = v;
        }
        if let Some(v) = self.dt_seconds {
            p.dt = v / 3600.0;
        }
        if let Some(v) = self.separation {
            p.separation = v;
        }
        if let Some(v) = self.margin {
            p.score_margin = v;
        }
        if let Some(v) = self.theta_bound_deg {
            p.theta_low = -v.to_radians();
            p.theta_high = v.to_radians();
        }
        if let Some(v) = self.r {
            p.disperse_quota = v;
        }
        if let Some(v) = self.big_r {
            p.disperse_cap = v;
        }
        p.rng_seed = seed;
        p.validate().map_err(|e| anyhow::anyhow!("invalid parameters: {e}"))?;
        Ok(p)
    }
}

/// Write a file atomically (temp file + rename) so batch outputs never
/// appear half-written.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default()
    ));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, &text)
}

pub fn read_scenario(path: &Path) -> anyhow::Result<Scenario<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing scenario {}", path.display()))?;
    file.into_scenario()
}

/// Fixed-width histogram; out-of-range values clamp into the edge bins, so
/// counts always total the input length.
pub fn histogram(values: &[f64], lo: f64, bin_width: f64, bins: usize) -> Vec<(f64, usize)> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = ((v - lo) / bin_width).floor();
        let idx = (idx.max(0.0) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    (0..bins).map(|i| (lo + i as f64 * bin_width, counts[i])).collect()
}

fn histogram_csv(hist: &[(f64, usize)], header: &str) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (start, count) in hist {
        out.push_str(&format!("{start},{count}\n"));
    }
    out
}

fn iterations_csv(solution: &SolutionFile) -> String {
    let mut out = String::from("iteration,conflicting_flights,violating_pairs\n");
    for row in &solution.iterations {
        out.push_str(&format!("{},{},{}\n", row.i, row.conflicting_flights, row.violating_pairs));
    }
    out
}

/// Angle histogram bins: 5-degree buckets spanning the configured bound.
fn angle_histogram(report: &SolutionReport<f64>, params: &SolverParams<f64>) -> Vec<(f64, usize)> {
    let lo = params.theta_low.to_degrees();
    let hi = params.theta_high.to_degrees();
    let bins = (((hi - lo) / 5.0).ceil() as usize).max(1);
    let thetas: Vec<f64> = report.per_flight.iter().map(|f| f.theta.to_degrees()).collect();
    histogram(&thetas, lo, 5.0, bins)
}

/// Extension-ratio histogram: 0.1% buckets from 1.0 up to the analytic
/// bound at the configured angle limit.
fn extension_histogram(
    report: &SolutionReport<f64>,
    params: &SolverParams<f64>,
) -> Vec<(f64, usize)> {
    let max_ratio = crp_core::geom::arc_ratio(params.theta_low.abs().max(params.theta_high));
    let bins = (((max_ratio - 1.0) / 0.001).ceil() as usize).max(1) + 1;
    let exts: Vec<f64> = report.per_flight.iter().map(|f| f.extension_ratio).collect();
    histogram(&exts, 1.0, 0.001, bins)
}

fn summary_of(report: &SolutionReport<f64>) -> SummaryFile {
    let n = report.per_flight.len();
    let zero = report.per_flight.iter().filter(|f| f.theta == 0.0).count();
    let mean_ext = if n == 0 {
        1.0
    } else {
        report.per_flight.iter().map(|f| f.extension_ratio).sum::<f64>() / n as f64
    };
    SummaryFile {
        flights: n,
        iterations_used: report.per_iteration.len() - 1,
        converged: report.converged,
        unresolved: report.unresolved_flights.len(),
        peak_simultaneous: report.peak_simultaneous,
        theta_zero_share: if n == 0 { 1.0 } else { zero as f64 / n as f64 },
        mean_extension: mean_ext,
    }
}

/// `generate`: write a scenario file and print its shape.
pub fn cmd_generate(gen: &GeneratorArgs, seed: u64, out: &Path) -> anyhow::Result<()> {
    let cfg = gen.to_config(seed);
    let scenario = generate(&cfg)?;
    let points = boundary_points(&cfg)?;
    let slots = (cfg.horizon / cfg.slot).round() as usize;
    let path = out.join("scenario.json");
    write_json(&path, &ScenarioFile::from_scenario(&scenario))?;

    let params = SolverParams::<f64>::defaults();
    let peak = engine::peak_simultaneous(
        &scenario,
        &crp_core::model::Assignment::new(scenario.len()),
        &params,
    );
    println!(
        "wrote {}: {} flights, {} boundary points x {} slots (capacity {}), straight-line peak {}",
        path.display(),
        scenario.len(),
        points.len(),
        slots,
        points.len() * slots,
        peak
    );
    Ok(())
}

/// Everything `solve` produces for one instance.
pub struct SolveOutcome {
    pub report: SolutionReport<f64>,
    pub summary: SummaryFile,
}

/// Solve a scenario and write the solution, metrics CSVs, histograms, and
/// summary under `out`.
pub fn solve_to_dir(
    scenario: &Scenario<f64>,
    params: &SolverParams<f64>,
    seed: u64,
    out: &Path,
) -> anyhow::Result<SolveOutcome> {
    let report = engine::solve(scenario, params, &RfLegSolver, seed);
    let solution = SolutionFile::from_report(scenario, &report);
    let summary = summary_of(&report);

    write_json(&out.join("solution.json"), &solution)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_atomic(&out.join("iterations.csv"), &iterations_csv(&solution))?;
    write_atomic(
        &out.join("angle_histogram.csv"),
        &histogram_csv(&angle_histogram(&report, params), "bin_start_deg,count"),
    )?;
    write_atomic(
        &out.join("extension_histogram.csv"),
        &histogram_csv(&extension_histogram(&report, params), "bin_start,count"),
    )?;
    Ok(SolveOutcome { report, summary })
}

/// `solve`: returns the process exit code (0 resolved, 2 partial).
pub fn cmd_solve(
    scenario_path: &Path,
    solver: &SolverArgs,
    seed: u64,
    out: &Path,
) -> anyhow::Result<i32> {
    let scenario = read_scenario(scenario_path)?;
    let params = solver.build_params(seed)?;
    let started = Instant::now();
    let outcome = solve_to_dir(&scenario, &params, seed, out)?;
    let wall = started.elapsed();
    println!(
        "solved {}: {} iterations, {} unresolved, peak {}, straight share {:.3}, \
         mean extension {:.5}, wall time {:.2?} (outputs in {})",
        scenario_path.display(),
        outcome.summary.iterations_used,
        outcome.summary.unresolved,
        outcome.summary.peak_simultaneous,
        outcome.summary.theta_zero_share,
        outcome.summary.mean_extension,
        wall,
        out.display()
    );
    Ok(if outcome.report.converged { 0 } else { EXIT_PARTIAL })
}

/// One batch instance's row in `batch_instances.csv`.
struct InstanceRow {
    seed: u64,
    converged: bool,
    iterations_used: usize,
    resolved_at: Option<usize>,
    unresolved: usize,
    peak: usize,
    initial_conflict_fraction: f64,
    theta_zero_share: f64,
    mean_extension: f64,
    max_extension: f64,
}

/// `batch`: generate and solve `instances` seeded instances; write
/// per-instance rows and aggregate curves. Exit code 0 when every instance
/// resolves, 2 otherwise.
pub fn cmd_batch(
    gen: &GeneratorArgs,
    solver: &SolverArgs,
    base_seed: u64,
    instances: usize,
    out: &Path,
) -> anyhow::Result<i32> {
    if instances == 0 {
        bail!("need at least one instance");
    }
    let started = Instant::now();
    let mut rows: Vec<InstanceRow> = Vec::with_capacity(instances);
    let mut reports: Vec<SolutionReport<f64>> = Vec::with_capacity(instances);
    for i in 0..instances {
        let seed = base_seed.wrapping_add(i as u64);
        let cfg = gen.to_config(seed);
        let scenario = generate(&cfg)?;
        let params = solver.build_params(seed)?;
        let report = engine::solve(&scenario, &params, &RfLegSolver, seed);
        let summary = summary_of(&report);
        let resolved_at = report
            .per_iteration
            .iter()
            .find(|m| m.violating_pairs == 0)
            .map(|m| m.iteration);
        let n = scenario.len().max(1);
        rows.push(InstanceRow {
            seed,
            converged: report.converged,
            iterations_used: summary.iterations_used,
            resolved_at,
            unresolved: summary.unresolved,
            peak: summary.peak_simultaneous,
            initial_conflict_fraction: report.per_iteration[0].conflicting_flights as f64
                / n as f64,
            theta_zero_share: summary.theta_zero_share,
            mean_extension: summary.mean_extension,
            max_extension: report
                .per_flight
                .iter()
                .map(|f| f.extension_ratio)
                .fold(1.0, f64::max),
        });
        reports.push(report);
        log::info!("instance {i} (seed {seed}) done");
    }

    let max_iter = solver.build_params(base_seed)?.max_iterations;

    let mut instances_csv = String::from(
        "seed,converged,iterations_used,resolved_at,unresolved,peak,\
         initial_conflict_fraction,theta_zero_share,mean_extension,max_extension\n",
    );
    for r in &rows {
        instances_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.converged,
            r.iterations_used,
            r.resolved_at.map_or(String::new(), |v| v.to_string()),
            r.unresolved,
            r.peak,
            r.initial_conflict_fraction,
            r.theta_zero_share,
            r.mean_extension,
            r.max_extension,
        ));
    }
    write_atomic(&out.join("batch_instances.csv"), &instances_csv)?;

    // Instances still unresolved after each iteration count.
    let mut unresolved_csv = String::from("iteration,unresolved_instances\n");
    for i in 0..=max_iter {
        let count = rows
            .iter()
            .filter(|r| r.resolved_at.is_none_or(|at| at > i))
            .count();
        unresolved_csv.push_str(&format!("{i},{count}\n"));
    }
    write_atomic(&out.join("batch_unresolved.csv"), &unresolved_csv)?;

    // Mean conflicting flights per iteration (0 after convergence).
    let mut conflicts_csv = String::from("iteration,mean_conflicting_flights\n");
    for i in 0..=max_iter {
        let sum: f64 = reports
            .iter()
            .map(|r| {
                r.per_iteration
                    .get(i)
                    .map_or(0.0, |m| m.conflicting_flights as f64)
            })
            .sum();
        conflicts_csv.push_str(&format!("{},{}\n", i, sum / reports.len() as f64));
    }
    write_atomic(&out.join("batch_conflicts.csv"), &conflicts_csv)?;

    let summary = BatchSummaryFile {
        instances,
        resolved_instances: rows.iter().filter(|r| r.converged).count(),
        resolved_by_iteration_5: rows
            .iter()
            .filter(|r| r.resolved_at.is_some_and(|at| at <= 5))
            .count(),
        mean_initial_conflict_fraction: rows
            .iter()
            .map(|r| r.initial_conflict_fraction)
            .sum::<f64>()
            / rows.len() as f64,
        mean_peak_simultaneous: rows.iter().map(|r| r.peak as f64).sum::<f64>()
            / rows.len() as f64,
        theta_zero_share: rows.iter().map(|r| r.theta_zero_share).sum::<f64>()
            / rows.len() as f64,
        mean_extension: rows.iter().map(|r| r.mean_extension).sum::<f64>() / rows.len() as f64,
        max_extension: rows.iter().map(|r| r.max_extension).fold(1.0, f64::max),
    };
    write_json(&out.join("batch_summary.json"), &summary)?;

    println!(
        "batch of {} instances: {} resolved ({} by iteration 5), mean peak {:.1}, \
         wall time {:.2?} (outputs in {})",
        summary.instances,
        summary.resolved_instances,
        summary.resolved_by_iteration_5,
        summary.mean_peak_simultaneous,
        started.elapsed(),
        out.display()
    );
    Ok(if summary.resolved_instances == instances { 0 } else { EXIT_PARTIAL })
}

/// `report`: print the summary of an existing solution file and optionally
/// regenerate its histogram CSVs.
pub fn cmd_report(solution_path: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let text = fs::read_to_string(solution_path)
        .with_context(|| format!("reading solution {}", solution_path.display()))?;
    let solution: SolutionFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing solution {}", solution_path.display()))?;

    let n = solution.flights.len();
    let zero = solution.flights.iter().filter(|f| f.theta_deg == 0.0).count();
    let mean_ext = if n == 0 {
        1.0
    } else {
        solution.flights.iter().map(|f| f.extension).sum::<f64>() / n as f64
    };
    println!("solution {}:", solution_path.display());
    println!("  flights:        {n}");
    println!("  iterations:     {}", solution.iterations.len().saturating_sub(1));
    println!("  unresolved:     {} ({:?})", solution.unresolved.len(), solution.unresolved);
    println!("  straight share: {:.3}", if n == 0 { 1.0 } else { zero as f64 / n as f64 });
    println!("  mean extension: {mean_ext:.5}");
    for row in &solution.iterations {
        println!(
            "  iter {:2}: conflicting {:3}, violating pairs {:3}",
            row.i, row.conflicting_flights, row.violating_pairs
        );
    }

    if let Some(out) = out {
        let thetas: Vec<f64> = solution.flights.iter().map(|f| f.theta_deg).collect();
        let lo = thetas.iter().cloned().fold(-25.0, f64::min);
        let hi = thetas.iter().cloned().fold(25.0, f64::max);
        let bins = (((hi - lo) / 5.0).ceil() as usize).max(1);
        write_atomic(
            &out.join("angle_histogram.csv"),
            &histogram_csv(&histogram(&thetas, lo, 5.0, bins), "bin_start_deg,count"),
        )?;
        let exts: Vec<f64> = solution.flights.iter().map(|f| f.extension).collect();
        let max_ext = exts.iter().cloned().fold(1.033, f64::max);
        let ext_bins = (((max_ext - 1.0) / 0.001).ceil() as usize).max(1) + 1;
        write_atomic(
            &out.join("extension_histogram.csv"),
            &histogram_csv(&histogram(&exts, 1.0, 0.001, ext_bins), "bin_start,count"),
        )?;
        println!("histograms written to {}", out.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_clamps_and_totals() {
        let values = [-30.0, -25.0, -0.1, 0.0, 4.9, 24.9, 25.0, 40.0];
        let hist = histogram(&values, -25.0, 5.0, 10);
        let total: usize = hist.iter().map(|&(_, c)| c).sum();
        assert_eq!(total, values.len());
        assert_eq!(hist[0], (-25.0, 2)); // -30 clamps into the first bin
        assert_eq!(hist[4].1, 1); // [-5, 0) holds -0.1
        assert_eq!(hist[5].1, 2); // [0, 5) holds 0.0 and 4.9
        assert_eq!(hist[9].1, 3); // top bin catches 24.9, 25, 40
    }
}
