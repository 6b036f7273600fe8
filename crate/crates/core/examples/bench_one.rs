//! Quick benchmark: generate and solve one benchmark-scale instance.
//!
//! ```bash
//! cargo run --example bench_one [seed]
//! ```

use crp_core::engine;
use crp_core::rfleg::RfLegSolver;
use crp_core::scengen::{generate, GenConfig};
use crp_core::SolverParams64;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let mut cfg = GenConfig::<f64>::defaults();
    cfg.rng_seed = seed;
    let scenario = generate(&cfg).expect("generate");
    let mut params = SolverParams64::defaults();
    params.rng_seed = seed;

    let t0 = std::time::Instant::now();
    let init = engine::initial_state(&scenario, &params, seed);
    println!(
        "post-init: {} conflicting flights, {} violating pairs ({:.2?})",
        init.metrics.conflicting_flights,
        init.metrics.violating_pairs,
        t0.elapsed()
    );

    let t1 = std::time::Instant::now();
    let report = engine::solve(&scenario, &params, &RfLegSolver, seed);
    println!("solve took {:.2?}", t1.elapsed());
    for m in &report.per_iteration {
        println!(
            "  iter {:2}: conflicting {:3}, pairs {:3}",
            m.iteration, m.conflicting_flights, m.violating_pairs
        );
    }
    let n = report.per_flight.len().max(1) as f64;
    let straight = report.per_flight.iter().filter(|f| f.theta == 0.0).count() as f64 / n;
    let mean_ext: f64 = report.per_flight.iter().map(|f| f.extension_ratio).sum::<f64>() / n;
    println!(
        "converged {}; unresolved {}; peak {}; straight share {:.3}; mean extension {:.5}",
        report.converged,
        report.unresolved_flights.len(),
        report.peak_simultaneous,
        straight,
        mean_ext
    );
}
