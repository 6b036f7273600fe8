//! Domain types shared by every stage: flights, the sector, closest-approach
//! events, the mutable per-flight solution state, and solver parameters.
//!
//! Units are fixed globally: nautical miles for distance, knots for speed,
//! hours for time. Flight ids are strings at the file boundary; everywhere
//! else flights are addressed by their dense index into the scenario.

use crate::geom::Vec2;
use crate::scalar::{real, Real};

/// Dense index of a flight within its scenario.
pub type FlightIdx = usize;

/// Immutable description of one flight crossing the sector.
#[derive(Clone, Debug, PartialEq)]
pub struct FlightSpec<R> {
    pub id: String,
    /// Entry point on the sector boundary (nmi).
    pub entry: Vec2<R>,
    /// Exit point on the sector boundary (nmi).
    pub exit: Vec2<R>,
    /// Release time (hours); the flight occupies airspace only from here
    /// until it reaches the exit at its constant ground speed.
    pub release_time: R,
    /// Ground speed (knots).
    pub speed: R,
}

/// Rectangular sector with discrete flight levels and a checking window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector<R> {
    pub width: R,
    pub height: R,
    pub level_count: usize,
    pub t_start: R,
    pub t_end: R,
}

impl<R: Real> Sector<R> {
    /// Whether a point lies on the rectangle's perimeter (within 1e-9 nmi).
    pub fn on_boundary(&self, p: Vec2<R>) -> bool {
        let tol = real::<R>(1e-9);
        let zero = R::zero();
        let x_in = p.x >= zero - tol && p.x <= self.width + tol;
        let y_in = p.y >= zero - tol && p.y <= self.height + tol;
        let on_vertical = (p.x.abs() <= tol || (p.x - self.width).abs() <= tol) && y_in;
        let on_horizontal = (p.y.abs() <= tol || (p.y - self.height).abs() <= tol) && x_in;
        on_vertical || on_horizontal
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("invalid sector: {0}")]
    InvalidSector(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("degenerate flight {0:?}: entry and exit coincide")]
    DegenerateFlight(String),
    #[error("flight {0:?}: speed must be positive")]
    NonPositiveSpeed(String),
    #[error("flight {0:?}: release time must be nonnegative")]
    NegativeRelease(String),
    #[error("flight {id:?}: {which} point is off the sector boundary")]
    OffBoundary { id: String, which: &'static str },
}

/// A validated sector-plus-flights instance. Construction checks every
/// flight invariant, so downstream code can index freely.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<R> {
    sector: Sector<R>,
    flights: Vec<FlightSpec<R>>,
}

impl<R: Real> Scenario<R> {
    pub fn new(sector: Sector<R>, flights: Vec<FlightSpec<R>>) -> Result<Self, ScenarioError> {
        if !(sector.width > R::zero()) || !(sector.height > R::zero()) {
            return Err(ScenarioError::InvalidSector("width and height must be positive".into()));
        }
        if sector.level_count < 1 {
            return Err(ScenarioError::InvalidSector("need at least one flight level".into()));
        }
        if !(sector.t_start < sector.t_end) {
            return Err(ScenarioError::InvalidSector("time window must be nonempty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for f in &flights {
            if !seen.insert(f.id.clone()) {
                return Err(ScenarioError::DuplicateId(f.id.clone()));
            }
            if f.entry == f.exit {
                return Err(ScenarioError::DegenerateFlight(f.id.clone()));
            }
            if !(f.speed > R::zero()) {
                return Err(ScenarioError::NonPositiveSpeed(f.id.clone()));
            }
            if f.release_time < R::zero() {
                return Err(ScenarioError::NegativeRelease(f.id.clone()));
            }
            if !sector.on_boundary(f.entry) {
                return Err(ScenarioError::OffBoundary { id: f.id.clone(), which: "entry" });
            }
            if !sector.on_boundary(f.exit) {
                return Err(ScenarioError::OffBoundary { id: f.id.clone(), which: "exit" });
            }
        }
        Ok(Scenario { sector, flights })
    }

    pub fn sector(&self) -> &Sector<R> {
        &self.sector
    }

    pub fn flights(&self) -> &[FlightSpec<R>] {
        &self.flights
    }

    pub fn flight(&self, idx: FlightIdx) -> &FlightSpec<R> {
        &self.flights[idx]
    }

    pub fn len(&self) -> usize {
        self.flights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flights.is_empty()
    }
}

/// Validate a sector and flight list into a [`Scenario`].
pub fn validate_scenario<R: Real>(
    sector: Sector<R>,
    flights: Vec<FlightSpec<R>>,
) -> Result<Scenario<R>, ScenarioError> {
    Scenario::new(sector, flights)
}

/// A 4D position-time coordinate `(x, y, level, t)`; the clustering data
/// point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosTime<R> {
    pub x: R,
    pub y: R,
    pub level: usize,
    pub t: R,
}

/// Closest planar approach of a same-level flight pair on the sample grid:
/// the minimizing distance and time, plus one position-time record per
/// flight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinDistanceEvent<R> {
    pub flight_a: FlightIdx,
    pub flight_b: FlightIdx,
    pub distance: R,
    pub time: R,
    pub event_a: PosTime<R>,
    pub event_b: PosTime<R>,
}

/// Mutable solution state: one flight level and one arc half-angle per
/// flight. Owned by the engine; everything else reads it.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<R> {
    level: Vec<usize>,
    theta: Vec<R>,
}

impl<R: Real> Assignment<R> {
    /// Everyone on level 0 with straight trajectories.
    pub fn new(flight_count: usize) -> Self {
        Assignment {
            level: vec![0; flight_count],
            theta: vec![R::zero(); flight_count],
        }
    }

    pub fn len(&self) -> usize {
        self.level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_empty()
    }

    pub fn level(&self, f: FlightIdx) -> usize {
        self.level[f]
    }

    pub fn theta(&self, f: FlightIdx) -> R {
        self.theta[f]
    }

    pub fn levels(&self) -> &[usize] {
        &self.level
    }

    pub fn thetas(&self) -> &[R] {
        &self.theta
    }

    pub fn set_level(&mut self, f: FlightIdx, level: usize) {
        self.level[f] = level;
    }

    pub fn set_theta(&mut self, f: FlightIdx, theta: R) {
        self.theta[f] = theta;
    }

    /// Flights grouped by level, each group sorted by flight index.
    pub fn level_sets(&self, level_count: usize) -> Vec<Vec<FlightIdx>> {
        let mut sets = vec![Vec::new(); level_count];
        for (f, &lvl) in self.level.iter().enumerate() {
            sets[lvl].push(f);
        }
        sets
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParamsError {
    #[error("parameter constraint violated: {0}")]
    Invalid(&'static str),
}

/// All tunables for conflict detection, clustering, dispersal, and the
/// per-level descent solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams<R> {
    /// Minimum separation distance s (nmi); a same-level pair closer than
    /// this at any sample is a conflict.
    pub separation: R,
    /// Score margin s0 (nmi); scoring uses the soft radius s + s0.
    pub score_margin: R,
    /// Speed used to convert time gaps into distance units in the
    /// position-time metric (knots).
    pub time_scale_speed: R,
    /// Sampling step (hours).
    pub dt: R,
    /// Cap on cluster-and-disperse iterations.
    pub max_iterations: usize,
    /// Max flights dispersed from one level per iteration.
    pub disperse_cap: usize,
    /// Per-cluster quota per dispersal sweep.
    pub disperse_quota: usize,
    /// Arc half-angle bounds (radians), negative low and positive high.
    pub theta_low: R,
    pub theta_high: R,
    /// Initial descent step size (radians).
    pub eta0: R,
    /// Improvement at or below this terminates the descent.
    pub gd_stop_threshold: R,
    /// Improvement at or below this (but above the stop threshold) grows
    /// the learning rate.
    pub gd_speedup_threshold: R,
    /// Learning-rate multipliers: growth factor (> 1) and backtracking
    /// shrink factor (< 1).
    pub eta_up: R,
    pub eta_down: R,
    /// Cap on descent trial steps per cluster.
    pub gd_max_steps: usize,
    /// Finite-difference step for the descent gradient (radians).
    pub fd_step: R,
    /// Base seed for every random choice (clustering init, dispersal
    /// targets).
    pub rng_seed: u64,
}

impl<R: Real> SolverParams<R> {
    pub fn defaults() -> Self {
        SolverParams {
            separation: real(5.0),
            score_margin: real(0.625),
            time_scale_speed: real(533.0),
            dt: real(2.5 / 3600.0),
            max_iterations: 10,
            disperse_cap: 2,
            disperse_quota: 1,
            theta_low: real(-25.0_f64.to_radians()),
            theta_high: real(25.0_f64.to_radians()),
            eta0: real(2.0_f64.to_radians()),
            gd_stop_threshold: real(1e-7),
            gd_speedup_threshold: real(1e-3),
            eta_up: real(1.5),
            eta_down: real(0.5),
            gd_max_steps: 500,
            fd_step: real(0.25_f64.to_radians()),
            rng_seed: 0,
        }
    }

    /// Soft scoring radius s' = s + s0.
    pub fn soft_radius(&self) -> R {
        self.separation + self.score_margin
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let zero = R::zero();
        if !(self.separation > zero) {
            return Err(ParamsError::Invalid("separation must be positive"));
        }
        if self.score_margin < zero {
            return Err(ParamsError::Invalid("score margin must be nonnegative"));
        }
        if !(self.time_scale_speed > zero) {
            return Err(ParamsError::Invalid("time-scale speed must be positive"));
        }
        if !(self.dt > zero) {
            return Err(ParamsError::Invalid("dt must be positive"));
        }
        if !(self.gd_stop_threshold > zero && self.gd_stop_threshold < self.gd_speedup_threshold) {
            return Err(ParamsError::Invalid("need 0 < stop threshold < speedup threshold"));
        }
        if !(self.eta_down > zero && self.eta_down < R::one() && self.eta_up > R::one()) {
            return Err(ParamsError::Invalid("need 0 < eta_down < 1 < eta_up"));
        }
        if !(self.theta_low < zero && zero < self.theta_high) {
            return Err(ParamsError::Invalid("theta bounds must straddle zero"));
        }
        if self.theta_low < -R::FRAC_PI_2() || self.theta_high > R::FRAC_PI_2() {
            return Err(ParamsError::Invalid("theta bounds must lie within [-pi/2, pi/2]"));
        }
        if !(self.eta0 > zero) {
            return Err(ParamsError::Invalid("eta0 must be positive"));
        }
        if !(self.fd_step > zero) {
            return Err(ParamsError::Invalid("finite-difference step must be positive"));
        }
        if self.gd_max_steps == 0 {
            return Err(ParamsError::Invalid("descent step cap must be at least 1"));
        }
        Ok(())
    }
}

/// Conflict counts recorded once per engine iteration (entry 0 is the
/// post-initialization state).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub conflicting_flights: usize,
    pub violating_pairs: usize,
}

/// Final per-flight outcome.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlightOutcome<R> {
    pub level: usize,
    pub theta: R,
    pub path_length: R,
    /// Path length over chord length; 1 for a straight leg.
    pub extension_ratio: R,
}

/// Everything the engine reports for one solved instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionReport<R> {
    pub final_assignment: Assignment<R>,
    pub per_iteration: Vec<IterationMetrics>,
    /// Flights still in a separation violation under the final assignment,
    /// sorted by index.
    pub unresolved_flights: Vec<FlightIdx>,
    pub per_flight: Vec<FlightOutcome<R>>,
    /// Peak number of simultaneously airborne flights on the sample grid.
    pub peak_simultaneous: usize,
    pub converged: bool,
}
