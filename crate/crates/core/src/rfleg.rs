//! Planar solver that bends flights onto arc legs.
//!
//! Violating events of the level are clustered; each cluster's arc
//! half-angles are then optimized by normalized gradient descent on the
//! cluster's total conflict score, with an adaptive step size: slow
//! improvement grows it, a worsening step is reverted and shrinks it, and
//! a near-zero improvement terminates. Angles clamp to the configured
//! bounds after every step.
//!
//! A flight claimed by an earlier (higher-scoring) cluster is frozen for
//! later clusters: its events stay in their score as constants and its
//! angle is not touched again.
//!
//! Gradients come from central finite differences (one-sided against a
//! bound): the score is built from grid-sampled minima, so no analytic
//! derivative exists.

use std::collections::HashMap;

use crate::cluster::{cluster_level_events, EventCluster};
use crate::conflict::{scan_level, scan_pair, total_conflict_score, EventPoint};
use crate::engine::{LevelSolution, PlanarSolver, SolverError};
use crate::geom::{Trajectory, Vec2};
use crate::model::{FlightIdx, PosTime, Scenario, SolverParams};
use crate::sampling::{sample_trajectory, Polyline, SampleGrid};
use crate::scalar::{real, Real};
use crate::seeds::{self, salt};

/// Why a cluster's descent stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Improvement fell to the stop threshold, the gradient vanished, or
    /// the step size underflowed.
    Converged,
    /// Trial-step budget exhausted.
    StepCap,
    /// Every generating pair of the cluster reached separation.
    AllResolved,
}

/// One trial step of the descent.
#[derive(Clone, Debug)]
pub struct DescentStep<R> {
    pub theta: Vec<R>,
    pub tcs: R,
    pub eta: R,
    pub accepted: bool,
}

#[derive(Clone, Debug)]
pub struct DescentTrace<R> {
    pub initial_tcs: R,
    pub steps: Vec<DescentStep<R>>,
    pub stop_reason: StopReason,
}

/// Outcome of evaluating one trial step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepAction {
    /// Score worsened: revert and shrink the step size.
    Backtrack,
    /// Improvement within the stop threshold: keep the step, then stop.
    AcceptTerminate,
    /// Positive but slow improvement: keep the step, grow the step size.
    AcceptSpeedUp,
    /// Fast improvement: keep the step, step size unchanged.
    AcceptHold,
}

/// The four-step rule table, keyed on the improvement (previous score minus
/// trial score).
pub fn descent_step_rules<R: Real>(improvement: R, params: &SolverParams<R>) -> StepAction {
    if improvement < R::zero() {
        StepAction::Backtrack
    } else if improvement <= params.gd_stop_threshold {
        StepAction::AcceptTerminate
    } else if improvement <= params.gd_speedup_threshold {
        StepAction::AcceptSpeedUp
    } else {
        StepAction::AcceptHold
    }
}

/// Clamp every component to `[theta_low, theta_high]` (the range is linear,
/// no wraparound).
pub fn clip_theta<R: Real>(theta: &mut [R], params: &SolverParams<R>) {
    for t in theta.iter_mut() {
        *t = (*t).max(params.theta_low).min(params.theta_high);
    }
}

/// Central finite-difference gradient of `f`, falling back to one-sided
/// differences where a probe would cross a theta bound.
pub fn numerical_gradient<R: Real, F: FnMut(&[R]) -> R>(
    theta: &[R],
    mut f: F,
    params: &SolverParams<R>,
) -> Vec<R> {
    let h = params.fd_step;
    let two_h = h + h;
    let mut grad = vec![R::zero(); theta.len()];
    let mut probe = theta.to_vec();
    let mut base: Option<R> = None;
    for i in 0..theta.len() {
        let up_ok = theta[i] + h <= params.theta_high;
        let down_ok = theta[i] - h >= params.theta_low;
        grad[i] = match (up_ok, down_ok) {
            (true, true) => {
                probe[i] = theta[i] + h;
                let fu = f(&probe);
                probe[i] = theta[i] - h;
                let fd = f(&probe);
                (fu - fd) / two_h
            }
            (true, false) => {
                let f0 = *base.get_or_insert_with(|| {
                    probe[i] = theta[i];
                    f(&probe)
                });
                probe[i] = theta[i] + h;
                let fu = f(&probe);
                (fu - f0) / h
            }
            (false, true) => {
                let f0 = *base.get_or_insert_with(|| {
                    probe[i] = theta[i];
                    f(&probe)
                });
                probe[i] = theta[i] - h;
                let fd = f(&probe);
                (f0 - fd) / h
            }
            (false, false) => R::zero(),
        };
        probe[i] = theta[i];
    }
    grad
}

/// Min-distance event of one context pair under the current angles.
#[derive(Clone, Copy, Debug)]
struct PairEvent<R> {
    time: R,
    pos_a: Vec2<R>,
    pos_b: Vec2<R>,
    dist: R,
}

/// Re-evaluates one cluster's total conflict score as its free flights'
/// angles move.
///
/// The pair set is frozen at construction: the cluster's generating pairs
/// plus every pair of member owners (whose minimum distance gates the
/// score). Events and distances are recomputed from current angles at each
/// evaluation; only trajectories whose angle changed are resampled.
struct ClusterEvaluator<'a, R: Real> {
    scenario: &'a Scenario<R>,
    params: &'a SolverParams<R>,
    grid: SampleGrid<R>,
    level: usize,
    /// Flights optimized by this cluster; defines the descent vector order.
    free: Vec<FlightIdx>,
    /// Working angles for every scenario flight (only involved ones used).
    theta_all: Vec<R>,
    polylines: HashMap<FlightIdx, Option<Polyline<R>>>,
    dirty: Vec<FlightIdx>,
    /// Canonical (low, high) context pairs.
    pairs: Vec<(FlightIdx, FlightIdx)>,
    pair_slot: HashMap<(FlightIdx, FlightIdx), usize>,
    pair_events: Vec<Option<PairEvent<R>>>,
    /// Member records as (owner, pair slot).
    members: Vec<(FlightIdx, usize)>,
    /// Pair slots whose violation defines the cluster's resolution.
    generating: Vec<usize>,
}

fn canon(a: FlightIdx, b: FlightIdx) -> (FlightIdx, FlightIdx) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<'a, R: Real> ClusterEvaluator<'a, R> {
    fn new(
        scenario: &'a Scenario<R>,
        params: &'a SolverParams<R>,
        grid: SampleGrid<R>,
        level: usize,
        cluster: &EventCluster<R>,
        theta_all: &[R],
    ) -> Self {
        let free = cluster.flights.clone();

        let mut owners: Vec<FlightIdx> =
            cluster.members.iter().map(|m| m.point.owner).collect();
        owners.sort_unstable();
        owners.dedup();

        let mut pairs: Vec<(FlightIdx, FlightIdx)> = cluster
            .members
            .iter()
            .map(|m| canon(m.point.owner, m.point.partner))
            .collect();
        for i in 1..owners.len() {
            for j in 0..i {
                pairs.push((owners[j], owners[i]));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let pair_slot: HashMap<_, _> =
            pairs.iter().enumerate().map(|(s, &p)| (p, s)).collect();

        let members: Vec<(FlightIdx, usize)> = cluster
            .members
            .iter()
            .map(|m| (m.point.owner, pair_slot[&canon(m.point.owner, m.point.partner)]))
            .collect();
        let mut generating: Vec<usize> = cluster
            .members
            .iter()
            .map(|m| pair_slot[&canon(m.point.owner, m.point.partner)])
            .collect();
        generating.sort_unstable();
        generating.dedup();

        let mut involved: Vec<FlightIdx> =
            pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        involved.sort_unstable();
        involved.dedup();

        let pair_count = pairs.len();
        ClusterEvaluator {
            scenario,
            params,
            grid,
            level,
            free,
            theta_all: theta_all.to_vec(),
            polylines: HashMap::new(),
            dirty: involved,
            pairs,
            pair_slot,
            pair_events: vec![None; pair_count],
            members,
            generating,
        }
    }

    fn free_thetas(&self) -> Vec<R> {
        self.free.iter().map(|&f| self.theta_all[f]).collect()
    }

    fn set_free_thetas(&mut self, theta: &[R]) {
        debug_assert_eq!(theta.len(), self.free.len());
        for (i, &f) in self.free.iter().enumerate() {
            if self.theta_all[f] != theta[i] {
                self.theta_all[f] = theta[i];
                self.dirty.push(f);
            }
        }
    }

    /// Current total conflict score and whether every generating pair is
    /// separated.
    fn evaluate(&mut self) -> (R, bool) {
        if !self.dirty.is_empty() {
            self.dirty.sort_unstable();
            self.dirty.dedup();
            for &f in &self.dirty {
                let traj = Trajectory::new(self.scenario.flight(f), self.theta_all[f]);
                self.polylines.insert(f, sample_trajectory(&traj, &self.grid));
            }
            for (slot, &(a, b)) in self.pairs.iter().enumerate() {
                if !(self.dirty.binary_search(&a).is_ok()
                    || self.dirty.binary_search(&b).is_ok())
                {
                    continue;
                }
                let grid = &self.grid;
                let event = match (&self.polylines[&a], &self.polylines[&b]) {
                    (Some(pa), Some(pb)) => scan_pair(pa, pb).map(|(k, d2)| PairEvent {
                        time: grid.time(k),
                        pos_a: pa.at(k),
                        pos_b: pb.at(k),
                        dist: d2.sqrt(),
                    }),
                    _ => None,
                };
                self.pair_events[slot] = event;
            }
            self.dirty.clear();
        }

        let mut points: Vec<EventPoint<R>> = Vec::with_capacity(self.members.len());
        for &(owner, slot) in &self.members {
            let (a, b) = self.pairs[slot];
            if let Some(ev) = &self.pair_events[slot] {
                let (pos, partner) = if owner == a { (ev.pos_a, b) } else { (ev.pos_b, a) };
                points.push(EventPoint {
                    owner,
                    partner,
                    pos: PosTime { x: pos.x, y: pos.y, level: self.level, t: ev.time },
                });
            }
        }
        let min_dist = |a: FlightIdx, b: FlightIdx| {
            self.pair_slot
                .get(&canon(a, b))
                .and_then(|&s| self.pair_events[s].as_ref().map(|e| e.dist))
        };
        let tcs = total_conflict_score(&points, &min_dist, self.params);
        let resolved = self
            .generating
            .iter()
            .all(|&s| self.pair_events[s].as_ref().is_none_or(|e| e.dist >= self.params.separation));
        (tcs, resolved)
    }
}

/// Gradient descent on one cluster's angles.
///
/// `theta_all` holds the working angle of every scenario flight and is
/// updated in place for the cluster's free flights; other entries (frozen
/// or outside flights) are read but never written.
pub fn optimize_cluster<R: Real>(
    scenario: &Scenario<R>,
    level: usize,
    cluster: &EventCluster<R>,
    theta_all: &mut [R],
    params: &SolverParams<R>,
) -> DescentTrace<R> {
    let grid = SampleGrid::from_params(scenario.sector(), params);
    let mut eval = ClusterEvaluator::new(scenario, params, grid, level, cluster, theta_all);
    let trace = run_descent(&mut eval, params);
    for &f in &eval.free {
        theta_all[f] = eval.theta_all[f];
    }
    trace
}

fn norm<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |acc, &x| acc + x * x).sqrt()
}

fn run_descent<R: Real>(eval: &mut ClusterEvaluator<'_, R>, params: &SolverParams<R>) -> DescentTrace<R> {
    let mut theta = eval.free_thetas();
    let (mut current_tcs, resolved) = eval.evaluate();
    let initial_tcs = current_tcs;
    let mut steps: Vec<DescentStep<R>> = Vec::new();

    if resolved || current_tcs.is_zero() {
        let stop_reason = if resolved { StopReason::AllResolved } else { StopReason::Converged };
        return DescentTrace { initial_tcs, steps, stop_reason };
    }

    let eta_floor = real::<R>(1e-12);
    let mut eta = params.eta0;
    let mut trials = 0usize;
    let mut stop_reason = StopReason::StepCap;

    'outer: while trials < params.gd_max_steps {
        let grad = numerical_gradient(&theta, |t| {
            eval.set_free_thetas(t);
            eval.evaluate().0
        }, params);
        let grad_norm = norm(&grad);
        if grad_norm.is_zero() {
            // Flat region; nothing to follow.
            stop_reason = StopReason::Converged;
            break;
        }

        // Try this direction, shrinking eta on worsening steps.
        loop {
            if trials >= params.gd_max_steps {
                break 'outer;
            }
            trials += 1;
            let mut trial: Vec<R> = theta
                .iter()
                .zip(&grad)
                .map(|(&t, &g)| t - eta * g / grad_norm)
                .collect();
            clip_theta(&mut trial, params);
            eval.set_free_thetas(&trial);
            let (trial_tcs, resolved) = eval.evaluate();
            let improvement = current_tcs - trial_tcs;
            let action = descent_step_rules(improvement, params);
            steps.push(DescentStep {
                theta: trial.clone(),
                tcs: trial_tcs,
                eta,
                accepted: action != StepAction::Backtrack,
            });
            match action {
                StepAction::Backtrack => {
                    eta *= params.eta_down;
                    if eta < eta_floor {
                        stop_reason = StopReason::Converged;
                        break 'outer;
                    }
                    continue;
                }
                StepAction::AcceptTerminate => {
                    theta = trial;
                    stop_reason =
                        if resolved { StopReason::AllResolved } else { StopReason::Converged };
                    break 'outer;
                }
                StepAction::AcceptSpeedUp => {
                    theta = trial;
                    current_tcs = trial_tcs;
                    eta *= params.eta_up;
                }
                StepAction::AcceptHold => {
                    theta = trial;
                    current_tcs = trial_tcs;
                }
            }
            if resolved {
                stop_reason = StopReason::AllResolved;
                break 'outer;
            }
            break; // accepted: recompute the gradient
        }
    }

    // Leave the evaluator on the accepted angles (the last trial may have
    // been rejected or a gradient probe).
    eval.set_free_thetas(&theta);
    DescentTrace { initial_tcs, steps, stop_reason }
}

/// Solve one flight level with arc legs.
///
/// All angles start at zero; the level's violating events are clustered and
/// each cluster optimized in descending score order (flights claimed by an
/// earlier cluster stay frozen). Returns the final angles and whatever
/// violations remain.
pub fn solve_level<R: Real>(
    scenario: &Scenario<R>,
    level: usize,
    flights: &[FlightIdx],
    params: &SolverParams<R>,
    seed: u64,
) -> (LevelSolution<R>, Vec<DescentTrace<R>>) {
    let grid = SampleGrid::from_params(scenario.sector(), params);
    let mut theta_all = vec![R::zero(); scenario.len()];

    let zero_conf = scan_level(scenario, &grid, level, flights, &|_| R::zero(), params.separation);
    let mut traces = Vec::new();
    if !zero_conf.events.is_empty() {
        let clusters = cluster_level_events(
            &zero_conf,
            params,
            seeds::derive(seed, salt::RF_CLUSTER, level as u64, 0),
        );
        for cluster in &clusters {
            if cluster.flights.is_empty() {
                // All owners already claimed by higher-scoring clusters.
                continue;
            }
            traces.push(optimize_cluster(scenario, level, cluster, &mut theta_all, params));
        }
    }

    let final_conf =
        scan_level(scenario, &grid, level, flights, &|f| theta_all[f], params.separation);
    let solution = LevelSolution {
        thetas: flights.iter().map(|&f| (f, theta_all[f])).collect(),
        residual: final_conf.events,
    };
    (solution, traces)
}

/// The arc-leg planar solver, pluggable into the engine.
#[derive(Clone, Copy, Debug, Default)]
pub struct RfLegSolver;

impl<R: Real> PlanarSolver<R> for RfLegSolver {
    fn solve_level(
        &self,
        scenario: &Scenario<R>,
        level: usize,
        flights: &[FlightIdx],
        params: &SolverParams<R>,
        seed: u64,
    ) -> Result<LevelSolution<R>, SolverError> {
        Ok(solve_level(scenario, level, flights, params, seed).0)
    }
}
