//! Closest-approach extraction on the sample grid and the conflict scoring
//! functions built on it.
//!
//! For every same-level flight pair the minimum planar distance over the
//! shared sample window defines a min-distance event (one position-time
//! record per flight). A pair violates separation when that distance is
//! below `s`; scoring uses the soft radius `s' = s + s0` and the
//! position-time metric, and an event-pair score decays linearly from `s'`
//! to zero as the two records separate, so pushing events apart always
//! lowers the total score.
//!
//! Comparisons happen on squared distances; ties in the per-pair argmin go
//! to the earliest sample.

use crate::geom::Trajectory;
use crate::model::{
    Assignment, FlightIdx, MinDistanceEvent, PosTime, Scenario, SolverParams,
};
use crate::sampling::{sample_trajectory, Polyline, SampleGrid};
use crate::scalar::Real;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConflictError {
    #[error("flights {a} and {b} are assigned to different levels")]
    DifferentLevels { a: FlightIdx, b: FlightIdx },
}

/// One side of a min-distance event: the owning flight's position-time
/// record, tagged with the partner that generated it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventPoint<R> {
    pub owner: FlightIdx,
    pub partner: FlightIdx,
    pub pos: PosTime<R>,
}

/// Position-time distance: the Euclidean norm of `(dx, dy, V0*dt)` for
/// records on the same level, infinite across levels.
pub fn pos_time_distance<R: Real>(p: &PosTime<R>, q: &PosTime<R>, v0: R) -> R {
    if p.level != q.level {
        return R::infinity();
    }
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    let dt = v0 * (p.t - q.t);
    (dx * dx + dy * dy + dt * dt).sqrt()
}

/// Minimum squared distance between two sampled trajectories over their
/// common sample window, with the earliest minimizing index.
pub(crate) fn scan_pair<R: Real>(pa: &Polyline<R>, pb: &Polyline<R>) -> Option<(usize, R)> {
    let k_lo = pa.k_lo.max(pb.k_lo);
    let k_hi = pa.k_hi().min(pb.k_hi());
    if k_hi < k_lo {
        return None;
    }
    let mut best_k = k_lo;
    let mut best = pa.at(k_lo).dist_sq(pb.at(k_lo));
    for k in (k_lo + 1)..=k_hi {
        let d = pa.at(k).dist_sq(pb.at(k));
        // Strict comparison keeps the earliest sample on ties.
        if d < best {
            best = d;
            best_k = k;
        }
    }
    Some((best_k, best))
}

/// Conflict state of one flight level under a fixed set of trajectories:
/// the violating events, their flattened per-flight records, and the full
/// pairwise min-distance table used by the scoring gates.
#[derive(Clone, Debug)]
pub struct LevelConflicts<R> {
    pub level: usize,
    /// Flights on this level, ascending.
    pub flights: Vec<FlightIdx>,
    /// Events of pairs violating separation, in pair-scan order.
    pub events: Vec<MinDistanceEvent<R>>,
    /// Two records per violating event, owner `a` then owner `b`.
    pub points: Vec<EventPoint<R>>,
    /// Triangular all-pairs min distances; `None` when the pair shares no
    /// sample.
    pair_dist: Vec<Option<R>>,
}

impl<R: Real> LevelConflicts<R> {
    fn local(&self, f: FlightIdx) -> Option<usize> {
        self.flights.binary_search(&f).ok()
    }

    /// Minimum planar distance between two flights on this level, `None`
    /// when they are never simultaneously airborne (or not on the level).
    pub fn min_dist(&self, a: FlightIdx, b: FlightIdx) -> Option<R> {
        if a == b {
            return Some(R::zero());
        }
        let ia = self.local(a)?;
        let ib = self.local(b)?;
        let (i, j) = if ia < ib { (ia, ib) } else { (ib, ia) };
        self.pair_dist[j * (j - 1) / 2 + i]
    }

    /// Flights involved in at least one violating event, sorted.
    pub fn conflicting_flights(&self) -> Vec<FlightIdx> {
        let mut out: Vec<FlightIdx> = self
            .events
            .iter()
            .flat_map(|e| [e.flight_a, e.flight_b])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Scan one level: sample every flight, take pairwise minima, and record
/// the violating events. `flights` must be sorted ascending.
pub(crate) fn scan_level<R: Real>(
    scenario: &Scenario<R>,
    grid: &SampleGrid<R>,
    level: usize,
    flights: &[FlightIdx],
    theta_of: &dyn Fn(FlightIdx) -> R,
    separation: R,
) -> LevelConflicts<R> {
    debug_assert!(flights.windows(2).all(|w| w[0] < w[1]));
    let n = flights.len();
    let polys: Vec<Option<Polyline<R>>> = flights
        .iter()
        .map(|&f| {
            let traj = Trajectory::new(scenario.flight(f), theta_of(f));
            sample_trajectory(&traj, grid)
        })
        .collect();

    let mut pair_dist = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    let mut events = Vec::new();
    for j in 1..n {
        for i in 0..j {
            let hit = match (&polys[i], &polys[j]) {
                (Some(pi), Some(pj)) => scan_pair(pi, pj),
                _ => None,
            };
            let dist = hit.map(|(_, d2)| d2.sqrt());
            if let (Some((k, _)), Some(d)) = (hit, dist) {
                if d < separation {
                    let t = grid.time(k);
                    let pa = polys[i].as_ref().unwrap().at(k);
                    let pb = polys[j].as_ref().unwrap().at(k);
                    events.push(MinDistanceEvent {
                        flight_a: flights[i],
                        flight_b: flights[j],
                        distance: d,
                        time: t,
                        event_a: PosTime { x: pa.x, y: pa.y, level, t },
                        event_b: PosTime { x: pb.x, y: pb.y, level, t },
                    });
                }
            }
            pair_dist.push(dist);
        }
    }
    let points = events
        .iter()
        .flat_map(|e| {
            [
                EventPoint { owner: e.flight_a, partner: e.flight_b, pos: e.event_a },
                EventPoint { owner: e.flight_b, partner: e.flight_a, pos: e.event_b },
            ]
        })
        .collect();
    LevelConflicts { level, flights: flights.to_vec(), events, points, pair_dist }
}

/// Per-level conflict state for a whole assignment.
#[derive(Clone, Debug)]
pub struct ConflictSummary<R> {
    pub levels: Vec<LevelConflicts<R>>,
}

impl<R: Real> ConflictSummary<R> {
    /// Union of flights in violating events, sorted.
    pub fn violating_flights(&self) -> Vec<FlightIdx> {
        let mut out: Vec<FlightIdx> = self
            .levels
            .iter()
            .flat_map(|l| l.conflicting_flights())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn violating_pairs(&self) -> usize {
        self.levels.iter().map(|l| l.events.len()).sum()
    }

    pub fn is_resolved(&self) -> bool {
        self.levels.iter().all(|l| l.events.is_empty())
    }
}

/// Compute min-distance events for every same-level pair and collect the
/// separation violations per level.
pub fn detect_conflicts<R: Real>(
    scenario: &Scenario<R>,
    assignment: &Assignment<R>,
    params: &SolverParams<R>,
) -> ConflictSummary<R> {
    debug_assert_eq!(assignment.len(), scenario.len());
    let grid = SampleGrid::from_params(scenario.sector(), params);
    let levels = assignment
        .level_sets(scenario.sector().level_count)
        .into_iter()
        .enumerate()
        .map(|(level, flights)| {
            scan_level(scenario, &grid, level, &flights, &|f| assignment.theta(f), params.separation)
        })
        .collect();
    ConflictSummary { levels }
}

/// Min-distance event of one flight pair under the current assignment.
///
/// Returns `None` when the flights share no grid sample; errors when they
/// sit on different levels (a caller bug, since events are only defined
/// within a level).
pub fn min_distance_event<R: Real>(
    scenario: &Scenario<R>,
    assignment: &Assignment<R>,
    a: FlightIdx,
    b: FlightIdx,
    params: &SolverParams<R>,
) -> Result<Option<MinDistanceEvent<R>>, ConflictError> {
    let level = assignment.level(a);
    if level != assignment.level(b) {
        return Err(ConflictError::DifferentLevels { a, b });
    }
    let grid = SampleGrid::from_params(scenario.sector(), params);
    let ta = Trajectory::new(scenario.flight(a), assignment.theta(a));
    let tb = Trajectory::new(scenario.flight(b), assignment.theta(b));
    let (pa, pb) = match (sample_trajectory(&ta, &grid), sample_trajectory(&tb, &grid)) {
        (Some(pa), Some(pb)) => (pa, pb),
        _ => return Ok(None),
    };
    Ok(scan_pair(&pa, &pb).map(|(k, d2)| {
        let t = grid.time(k);
        let qa = pa.at(k);
        let qb = pb.at(k);
        MinDistanceEvent {
            flight_a: a,
            flight_b: b,
            distance: d2.sqrt(),
            time: t,
            event_a: PosTime { x: qa.x, y: qa.y, level, t },
            event_b: PosTime { x: qb.x, y: qb.y, level, t },
        }
    }))
}

/// Pairwise contribution of two event records.
///
/// Zero when the records share an owner, when the owners' trajectories stay
/// apart beyond the soft radius, or when the records themselves are farther
/// than the soft radius in the position-time metric; otherwise the linear
/// ramp `s' - ptd`.
pub fn event_pair_score<R: Real>(
    p: &EventPoint<R>,
    q: &EventPoint<R>,
    owners_min_dist: Option<R>,
    params: &SolverParams<R>,
) -> R {
    if p.owner == q.owner {
        return R::zero();
    }
    let soft = params.soft_radius();
    match owners_min_dist {
        Some(d) if d <= soft => {
            (soft - pos_time_distance(&p.pos, &q.pos, params.time_scale_speed)).max(R::zero())
        }
        _ => R::zero(),
    }
}

/// Contribution of record `idx` against every other record in `points`.
pub fn event_score<R: Real, F>(
    idx: usize,
    points: &[EventPoint<R>],
    min_dist: &F,
    params: &SolverParams<R>,
) -> R
where
    F: Fn(FlightIdx, FlightIdx) -> Option<R>,
{
    let p = &points[idx];
    let mut sum = R::zero();
    for (j, q) in points.iter().enumerate() {
        if j != idx {
            sum += event_pair_score(p, q, min_dist(p.owner, q.owner), params);
        }
    }
    sum
}

/// Total conflict score of an event set: the sum of every record's score,
/// i.e. twice the sum over unordered record pairs.
pub fn total_conflict_score<R: Real, F>(
    points: &[EventPoint<R>],
    min_dist: &F,
    params: &SolverParams<R>,
) -> R
where
    F: Fn(FlightIdx, FlightIdx) -> Option<R>,
{
    let mut sum = R::zero();
    for j in 1..points.len() {
        for i in 0..j {
            sum += event_pair_score(&points[i], &points[j], min_dist(points[i].owner, points[j].owner), params);
        }
    }
    sum + sum
}

/// Most dangerous contribution of a flight: the max score among its own
/// records. `None` when the flight owns no record in `points`.
pub fn flight_score<R: Real, F>(
    flight: FlightIdx,
    points: &[EventPoint<R>],
    min_dist: &F,
    params: &SolverParams<R>,
) -> Option<R>
where
    F: Fn(FlightIdx, FlightIdx) -> Option<R>,
{
    let mut best: Option<R> = None;
    for (i, p) in points.iter().enumerate() {
        if p.owner == flight {
            let s = event_score(i, points, min_dist, params);
            best = Some(match best {
                Some(b) if b >= s => b,
                _ => s,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::model::{FlightSpec, Sector};
    use approx::assert_abs_diff_eq;

    fn sector(levels: usize) -> Sector<f64> {
        Sector { width: 100.0, height: 100.0, level_count: levels, t_start: 0.0, t_end: 1.0 }
    }

    fn params() -> SolverParams<f64> {
        let mut p = SolverParams::defaults();
        p.dt = 0.01;
        p
    }

    fn flight(id: &str, entry: (f64, f64), exit: (f64, f64), release: f64, speed: f64) -> FlightSpec<f64> {
        FlightSpec {
            id: id.into(),
            entry: Vec2::new(entry.0, entry.1),
            exit: Vec2::new(exit.0, exit.1),
            release_time: release,
            speed,
        }
    }

    fn scenario(flights: Vec<FlightSpec<f64>>, levels: usize) -> Scenario<f64> {
        Scenario::new(sector(levels), flights).unwrap()
    }

    fn pt(x: f64, y: f64, level: usize, t: f64) -> PosTime<f64> {
        PosTime { x, y, level, t }
    }

    #[test]
    fn ptd_planar_345() {
        let p = pt(0.0, 0.0, 0, 0.0);
        let q = pt(3.0, 4.0, 0, 0.0);
        assert_eq!(pos_time_distance(&p, &q, 533.0), 5.0);
    }

    #[test]
    fn ptd_infinite_across_levels() {
        let p = pt(0.0, 0.0, 0, 0.0);
        let q = pt(0.0, 0.0, 1, 0.0);
        assert!(pos_time_distance(&p, &q, 533.0).is_infinite());
    }

    #[test]
    fn ptd_time_scaling() {
        let p = pt(0.0, 0.0, 0, 0.0);
        let q = pt(0.0, 0.0, 0, 0.01);
        assert_abs_diff_eq!(pos_time_distance(&p, &q, 533.0), 5.33, epsilon = 1e-12);
    }

    #[test]
    fn perpendicular_crossing_hits_zero_distance() {
        // Both reach the sector center at t = 0.1, which is a grid sample.
        let sc = scenario(
            vec![
                flight("A", (0.0, 50.0), (100.0, 50.0), 0.0, 500.0),
                flight("B", (50.0, 0.0), (50.0, 100.0), 0.0, 500.0),
            ],
            1,
        );
        let a = Assignment::new(2);
        let e = min_distance_event(&sc, &a, 0, 1, &params()).unwrap().unwrap();
        assert!(e.distance < 1e-9, "distance {}", e.distance);
        assert_eq!(e.event_a.level, 0);
        assert_eq!(e.event_a.t, e.time);
        assert_eq!(e.event_b.t, e.time);
    }

    #[test]
    fn parallel_offset_pair_keeps_gap_and_earliest_tie() {
        let sc = scenario(
            vec![
                flight("A", (0.0, 40.0), (100.0, 40.0), 0.0, 500.0),
                flight("B", (0.0, 46.0), (100.0, 46.0), 0.0, 500.0),
            ],
            1,
        );
        let a = Assignment::new(2);
        let e = min_distance_event(&sc, &a, 0, 1, &params()).unwrap().unwrap();
        assert_abs_diff_eq!(e.distance, 6.0, epsilon = 1e-12);
        // Constant gap: the tie breaks to the first common sample, t = 0.
        assert_eq!(e.time, 0.0);
    }

    #[test]
    fn disjoint_airborne_intervals_yield_none() {
        // A is airborne on [0, 0.2], B on [0.5, 0.7]: no shared sample.
        let sc = scenario(
            vec![
                flight("A", (0.0, 50.0), (100.0, 50.0), 0.0, 500.0),
                flight("B", (0.0, 50.0), (100.0, 50.0), 0.5, 500.0),
            ],
            1,
        );
        let a = Assignment::new(2);
        assert_eq!(min_distance_event(&sc, &a, 0, 1, &params()).unwrap(), None);
    }

    #[test]
    fn different_levels_is_a_caller_error() {
        let sc = scenario(
            vec![
                flight("A", (0.0, 50.0), (100.0, 50.0), 0.0, 500.0),
                flight("B", (50.0, 0.0), (50.0, 100.0), 0.0, 500.0),
            ],
            2,
        );
        let mut a = Assignment::new(2);
        a.set_level(1, 1);
        assert_eq!(
            min_distance_event(&sc, &a, 0, 1, &params()),
            Err(ConflictError::DifferentLevels { a: 0, b: 1 })
        );
    }

    fn event_point(owner: usize, partner: usize, pos: PosTime<f64>) -> EventPoint<f64> {
        EventPoint { owner, partner, pos }
    }

    #[test]
    fn pair_score_gates_on_owner_distance() {
        let p = event_point(0, 1, pt(0.0, 0.0, 0, 0.0));
        let q = event_point(2, 3, pt(0.0, 0.0, 0, 0.0));
        let pr = params();
        // Owners separated beyond s' = 5.625: no contribution.
        assert_eq!(event_pair_score(&p, &q, Some(6.0), &pr), 0.0);
        // No shared samples at all: no contribution.
        assert_eq!(event_pair_score(&p, &q, None, &pr), 0.0);
        // Coincident records with owners in contact: full soft radius.
        assert_abs_diff_eq!(event_pair_score(&p, &q, Some(0.0), &pr), 5.625, epsilon = 1e-12);
    }

    #[test]
    fn pair_score_clamps_at_soft_radius() {
        let p = event_point(0, 1, pt(0.0, 0.0, 0, 0.0));
        let q = event_point(2, 3, pt(10.0, 0.0, 0, 0.0));
        assert_eq!(event_pair_score(&p, &q, Some(0.0), &params()), 0.0);
    }

    #[test]
    fn same_owner_records_do_not_score() {
        let p = event_point(0, 1, pt(0.0, 0.0, 0, 0.0));
        let q = event_point(0, 2, pt(0.0, 0.0, 0, 0.0));
        assert_eq!(event_pair_score(&p, &q, Some(0.0), &params()), 0.0);
    }

    #[test]
    fn event_score_sums_pairwise_terms() {
        let pr = params();
        let pts = vec![event_point(0, 1, pt(0.0, 0.0, 0, 0.0))];
        let close = |_: FlightIdx, _: FlightIdx| Some(0.0);
        assert_eq!(event_score(0, &pts, &close, &pr), 0.0); // singleton: empty sum

        let pts = vec![
            event_point(0, 1, pt(0.0, 0.0, 0, 0.0)),
            event_point(2, 3, pt(3.125, 0.0, 0, 0.0)),
        ];
        // Single term: 5.625 - 3.125 = 2.5.
        assert_abs_diff_eq!(event_score(0, &pts, &close, &pr), 2.5, epsilon = 1e-12);
        // Three mutually near records match brute-force enumeration.
        let pts3 = vec![
            event_point(0, 1, pt(0.0, 0.0, 0, 0.0)),
            event_point(2, 3, pt(1.0, 0.5, 0, 0.001)),
            event_point(4, 5, pt(2.0, -0.5, 0, 0.002)),
        ];
        let mut brute = 0.0;
        for j in 0..pts3.len() {
            if j != 0 {
                brute += event_pair_score(&pts3[0], &pts3[j], Some(0.0), &pr);
            }
        }
        assert_abs_diff_eq!(event_score(0, &pts3, &close, &pr), brute, epsilon = 1e-12);
        assert!(brute > 0.0);
    }

    #[test]
    fn total_score_doubles_unordered_sum() {
        let pr = params();
        let close = |_: FlightIdx, _: FlightIdx| Some(0.0);
        let pts = vec![
            event_point(0, 1, pt(0.0, 0.0, 0, 0.0)),
            event_point(2, 3, pt(3.125, 0.0, 0, 0.0)),
        ];
        assert_abs_diff_eq!(total_conflict_score(&pts, &close, &pr), 5.0, epsilon = 1e-12);

        let far = |_: FlightIdx, _: FlightIdx| Some(100.0);
        assert_eq!(total_conflict_score(&pts, &far, &pr), 0.0);
    }

    #[test]
    fn flight_score_takes_max_over_own_records() {
        let pr = params();
        let close = |_: FlightIdx, _: FlightIdx| Some(0.0);
        // Flight 0 owns two records at different distances from flight 9's.
        let pts = vec![
            event_point(0, 1, pt(0.0, 0.0, 0, 0.0)),
            event_point(0, 2, pt(4.0, 0.0, 0, 0.0)),
            event_point(9, 1, pt(1.0, 0.0, 0, 0.0)),
        ];
        let s0 = event_score(0, &pts, &close, &pr);
        let s1 = event_score(1, &pts, &close, &pr);
        let expected = s0.max(s1);
        assert_abs_diff_eq!(flight_score(0, &pts, &close, &pr).unwrap(), expected, epsilon = 1e-12);
        assert_eq!(flight_score(7, &pts, &close, &pr), None);
    }

    #[test]
    fn detect_conflicts_single_flight_is_empty() {
        let sc = scenario(vec![flight("A", (0.0, 50.0), (100.0, 50.0), 0.0, 500.0)], 2);
        let summary = detect_conflicts(&sc, &Assignment::new(1), &params());
        assert!(summary.is_resolved());
        assert!(summary.violating_flights().is_empty());
    }

    #[test]
    fn detect_conflicts_flags_crossing_pair_on_same_level_only() {
        let flights = vec![
            flight("A", (0.0, 50.0), (100.0, 50.0), 0.0, 500.0),
            flight("B", (50.0, 0.0), (50.0, 100.0), 0.0, 500.0),
        ];
        let sc = scenario(flights, 2);

        let same = detect_conflicts(&sc, &Assignment::new(2), &params());
        assert_eq!(same.violating_pairs(), 1);
        assert_eq!(same.violating_flights(), vec![0, 1]);
        assert_eq!(same.levels[0].points.len(), 2);
        assert_eq!(same.levels[0].points[0].owner, 0);
        assert_eq!(same.levels[0].points[0].partner, 1);

        let mut split = Assignment::new(2);
        split.set_level(1, 1);
        let apart = detect_conflicts(&sc, &split, &params());
        assert!(apart.is_resolved());
    }

    #[test]
    fn min_dist_table_covers_all_pairs() {
        let sc = scenario(
            vec![
                flight("A", (0.0, 40.0), (100.0, 40.0), 0.0, 100.0), // airborne the whole hour
                flight("B", (0.0, 46.0), (100.0, 46.0), 0.0, 100.0),
                flight("C", (0.0, 90.0), (100.0, 90.0), 0.9, 500.0),
                flight("D", (0.0, 20.0), (100.0, 20.0), 0.9, 500.0),
            ],
            1,
        );
        let summary = detect_conflicts(&sc, &Assignment::new(4), &params());
        let lvl = &summary.levels[0];
        assert_abs_diff_eq!(lvl.min_dist(0, 1).unwrap(), 6.0, epsilon = 1e-12);
        assert_eq!(lvl.min_dist(0, 1), lvl.min_dist(1, 0));
        // C overlaps A in time on [0.9, 1.0] but stays 50 nmi away.
        assert!(lvl.min_dist(0, 2).unwrap() >= 50.0);
        // C and D fly the same window on far edges of the sector.
        assert!(lvl.min_dist(2, 3).unwrap() >= 70.0 - 1e-9);
        assert_eq!(lvl.min_dist(0, 0), Some(0.0));
    }
}
