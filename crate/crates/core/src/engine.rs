//! The cluster-and-disperse outer loop.
//!
//! Initialization spreads the level-0 conflict clusters across flight
//! levels round-robin. Each iteration then re-clusters every level's
//! violating events, hands each level to a planar solver, and, while
//! conflicts remain and another iteration will follow, moves the top
//! conflict contributors of each cluster to random other levels.
//!
//! The engine owns the [`Assignment`]; per-level solver calls receive
//! independent derived seeds, so their results do not depend on execution
//! order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::{cluster_level_events, EventCluster};
use crate::conflict::{detect_conflicts, flight_score, ConflictSummary};
use crate::geom::{arc_ratio, path_length, Trajectory};
use crate::model::{
    Assignment, FlightIdx, FlightOutcome, IterationMetrics, MinDistanceEvent, Scenario,
    SolutionReport, SolverParams,
};
use crate::sampling::SampleGrid;
use crate::scalar::Real;
use crate::seeds::{self, salt};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("planar solver failed: {0}")]
    Failed(String),
}

/// Result of solving one flight level: the trajectory parameter per flight
/// plus whatever violations the solver could not remove.
#[derive(Clone, Debug)]
pub struct LevelSolution<R> {
    pub thetas: Vec<(FlightIdx, R)>,
    pub residual: Vec<MinDistanceEvent<R>>,
}

/// A single-level conflict resolution algorithm.
///
/// Implementations must return a best-effort partial solution (with
/// `residual` listing what remains) rather than failing when full
/// resolution is impossible, and returned parameters must respect the
/// solver's own constraints (for the arc-leg solver, the theta bounds).
pub trait PlanarSolver<R: Real> {
    fn solve_level(
        &self,
        scenario: &Scenario<R>,
        level: usize,
        flights: &[FlightIdx],
        params: &SolverParams<R>,
        seed: u64,
    ) -> Result<LevelSolution<R>, SolverError>;
}

/// State carried between iterations. `conflicts` always describes
/// `assignment`; `metrics` holds the post-solve counts of the iteration
/// that produced this state.
#[derive(Clone, Debug)]
pub struct IterationState<R> {
    pub iteration: usize,
    pub assignment: Assignment<R>,
    pub conflicts: ConflictSummary<R>,
    /// Per-level clusters computed at the start of this iteration (empty
    /// for the initial state).
    pub clusters: Vec<Vec<EventCluster<R>>>,
    pub metrics: IterationMetrics,
    pub converged: bool,
    pub seed: u64,
}

fn metrics_of<R: Real>(iteration: usize, conflicts: &ConflictSummary<R>) -> IterationMetrics {
    IterationMetrics {
        iteration,
        conflicting_flights: conflicts.violating_flights().len(),
        violating_pairs: conflicts.violating_pairs(),
    }
}

/// Cyclic assignment of cluster flight lists to levels: flights are taken
/// in cluster order, list order, and receive levels 0, 1, 2, ... modulo the
/// level count.
pub fn round_robin_levels(
    cluster_flights: &[Vec<FlightIdx>],
    level_count: usize,
) -> Vec<(FlightIdx, usize)> {
    let mut out = Vec::new();
    let mut counter = 0usize;
    for list in cluster_flights {
        for &f in list {
            out.push((f, counter % level_count));
            counter += 1;
        }
    }
    out
}

/// Initial level assignment: everyone starts on level 0 with straight
/// trajectories; the level-0 conflict clusters are then spread round-robin
/// across all levels. Flights in no violating event stay on level 0.
pub fn initialize_levels<R: Real>(
    scenario: &Scenario<R>,
    params: &SolverParams<R>,
    seed: u64,
) -> Assignment<R> {
    let mut assignment = Assignment::new(scenario.len());
    if scenario.is_empty() {
        return assignment;
    }
    let conflicts = detect_conflicts(scenario, &assignment, params);
    let lvl0 = &conflicts.levels[0];
    if lvl0.events.is_empty() {
        return assignment;
    }
    let clusters = cluster_level_events(lvl0, params, seeds::derive(seed, salt::INIT, 0, 0));
    let lists: Vec<Vec<FlightIdx>> = clusters.iter().map(|c| c.flights.clone()).collect();
    for (f, lvl) in round_robin_levels(&lists, scenario.sector().level_count) {
        assignment.set_level(f, lvl);
    }
    assignment
}

/// Initialization packaged as an iteration-0 state.
pub fn initial_state<R: Real>(
    scenario: &Scenario<R>,
    params: &SolverParams<R>,
    seed: u64,
) -> IterationState<R> {
    let assignment = initialize_levels(scenario, params, seed);
    let conflicts = detect_conflicts(scenario, &assignment, params);
    let metrics = metrics_of(0, &conflicts);
    let converged = conflicts.is_resolved();
    IterationState {
        iteration: 0,
        assignment,
        conflicts,
        clusters: Vec::new(),
        metrics,
        converged,
        seed,
    }
}

/// Sweep selection over per-cluster candidate lists (already sorted by
/// descending score): each sweep takes up to `quota` not-yet-taken flights
/// from every cluster in order, until `cap` flights are selected or the
/// candidates run out.
pub fn select_for_dispersal<R: Real>(
    clusters: &[Vec<(FlightIdx, R)>],
    quota: usize,
    cap: usize,
) -> Vec<FlightIdx> {
    let mut out = Vec::new();
    if quota == 0 || cap == 0 {
        return out;
    }
    let mut taken = vec![0usize; clusters.len()];
    loop {
        let mut progressed = false;
        for (ci, cands) in clusters.iter().enumerate() {
            let mut q = 0;
            while q < quota && taken[ci] < cands.len() {
                out.push(cands[taken[ci]].0);
                taken[ci] += 1;
                q += 1;
                progressed = true;
                if out.len() == cap {
                    return out;
                }
            }
        }
        if !progressed {
            return out;
        }
    }
}

/// Move the worst conflict contributors of each level to random other
/// levels, resetting their trajectories to straight.
///
/// Candidates come from this iteration's pre-solve clusters; scores come
/// from the post-solve events in `conflicts`. Per level at most
/// `disperse_cap` flights move, `disperse_quota` per cluster per sweep.
/// Returns the moved flights with their new levels. No-op with one level.
pub fn disperse<R: Real>(
    assignment: &mut Assignment<R>,
    clusters: &[Vec<EventCluster<R>>],
    conflicts: &ConflictSummary<R>,
    params: &SolverParams<R>,
    rng: &mut ChaCha8Rng,
) -> Vec<(FlightIdx, usize)> {
    let level_count = conflicts.levels.len();
    let mut moved = Vec::new();
    if level_count <= 1 {
        return moved;
    }
    for (lc, level_clusters) in conflicts.levels.iter().zip(clusters) {
        if lc.events.is_empty() {
            continue;
        }
        let min_dist = |a: FlightIdx, b: FlightIdx| lc.min_dist(a, b);
        let candidates: Vec<Vec<(FlightIdx, R)>> = level_clusters
            .iter()
            .map(|c| {
                let mut v: Vec<(FlightIdx, R)> = c
                    .flights
                    .iter()
                    .filter_map(|&f| {
                        flight_score(f, &lc.points, &min_dist, params).map(|s| (f, s))
                    })
                    .collect();
                v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                v
            })
            .collect();
        for f in select_for_dispersal(&candidates, params.disperse_quota, params.disperse_cap) {
            let current = assignment.level(f);
            let mut target = rng.gen_range(0..level_count - 1);
            if target >= current {
                target += 1;
            }
            assignment.set_level(f, target);
            assignment.set_theta(f, R::zero());
            moved.push((f, target));
        }
    }
    moved
}

/// One cluster-solve-disperse iteration.
///
/// Clusters each level's current violating events, re-solves every level
/// through the planar solver (a failed level keeps its previous
/// trajectories), records post-solve metrics, and — unless the instance is
/// now conflict-free or the iteration budget is exhausted — disperses.
pub fn run_iteration<R: Real>(
    scenario: &Scenario<R>,
    state: IterationState<R>,
    solver: &dyn PlanarSolver<R>,
    params: &SolverParams<R>,
) -> IterationState<R> {
    let seed = state.seed;
    let h = state.iteration + 1;
    let level_count = scenario.sector().level_count;

    let clusters: Vec<Vec<EventCluster<R>>> = (0..level_count)
        .map(|lvl| {
            cluster_level_events(
                &state.conflicts.levels[lvl],
                params,
                seeds::derive(seed, salt::ENGINE_CLUSTER, h as u64, lvl as u64),
            )
        })
        .collect();

    let mut assignment = state.assignment;
    let level_sets = assignment.level_sets(level_count);
    for (lvl, flights) in level_sets.iter().enumerate() {
        let solver_seed = seeds::derive(seed, salt::SOLVER, h as u64, lvl as u64);
        match solver.solve_level(scenario, lvl, flights, params, solver_seed) {
            Ok(solution) => {
                for (f, theta) in solution.thetas {
                    debug_assert_eq!(assignment.level(f), lvl);
                    assignment.set_theta(f, theta);
                }
            }
            Err(err) => {
                log::warn!(
                    "planar solver failed on level {lvl} (iteration {h}): {err}; keeping previous trajectories"
                );
            }
        }
    }

    let post_solve = detect_conflicts(scenario, &assignment, params);
    let metrics = metrics_of(h, &post_solve);
    let converged = post_solve.is_resolved();

    let conflicts = if !converged && h < params.max_iterations {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seeds::derive(seed, salt::DISPERSE, h as u64, 0));
        disperse(&mut assignment, &clusters, &post_solve, params, &mut rng);
        // Refresh so the state's conflicts always describe its assignment.
        detect_conflicts(scenario, &assignment, params)
    } else {
        post_solve
    };

    IterationState { iteration: h, assignment, conflicts, clusters, metrics, converged, seed }
}

/// Peak number of simultaneously airborne flights over the sample grid.
pub fn peak_simultaneous<R: Real>(
    scenario: &Scenario<R>,
    assignment: &Assignment<R>,
    params: &SolverParams<R>,
) -> usize {
    let grid = SampleGrid::from_params(scenario.sector(), params);
    let intervals: Vec<(R, R)> = scenario
        .flights()
        .iter()
        .enumerate()
        .map(|(f, spec)| {
            let traj = Trajectory::new(spec, assignment.theta(f));
            (traj.release(), traj.exit_time())
        })
        .collect();
    let mut peak = 0usize;
    for k in 0..grid.index_bound() {
        let t = grid.time(k);
        if t > grid.t_end {
            break;
        }
        let count = intervals.iter().filter(|&&(lo, hi)| t >= lo && t <= hi).count();
        peak = peak.max(count);
    }
    peak
}

/// Run the full heuristic: initialize, iterate up to the configured cap
/// with early exit on convergence, and report.
///
/// `per_iteration[0]` is the post-initialization state; each further entry
/// records one executed iteration's post-solve counts. All randomness
/// derives from `seed`, so equal inputs give identical reports.
pub fn solve<R: Real>(
    scenario: &Scenario<R>,
    params: &SolverParams<R>,
    solver: &dyn PlanarSolver<R>,
    seed: u64,
) -> SolutionReport<R> {
    let mut state = initial_state(scenario, params, seed);
    let mut per_iteration = vec![state.metrics];
    while !state.converged && state.iteration < params.max_iterations {
        state = run_iteration(scenario, state, solver, params);
        per_iteration.push(state.metrics);
    }

    let unresolved_flights = state.conflicts.violating_flights();
    let per_flight: Vec<FlightOutcome<R>> = scenario
        .flights()
        .iter()
        .enumerate()
        .map(|(f, spec)| {
            let theta = state.assignment.theta(f);
            FlightOutcome {
                level: state.assignment.level(f),
                theta,
                path_length: path_length(spec.entry, spec.exit, theta),
                extension_ratio: arc_ratio(theta),
            }
        })
        .collect();
    let peak = peak_simultaneous(scenario, &state.assignment, params);
    SolutionReport {
        final_assignment: state.assignment,
        per_iteration,
        unresolved_flights,
        per_flight,
        peak_simultaneous: peak,
        converged: state.converged,
    }
}
