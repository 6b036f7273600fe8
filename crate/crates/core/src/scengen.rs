//! Seeded random scenario generator.
//!
//! Flights enter and leave through a lattice of designated boundary points
//! (uniformly spaced along each edge, corners excluded) and are released on
//! fixed time slots; at most one flight leaves a given point in a given
//! slot, and a flight's exit must sit on a different edge than its entry.
//! Generation is rejection sampling on a seeded stream, so a seed fully
//! determines the scenario.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec2;
use crate::model::{FlightSpec, Scenario, Sector};
use crate::scalar::{real, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenConfig<R> {
    pub width: R,
    pub height: R,
    /// Boundary point spacing; must evenly divide both edge lengths.
    pub spacing: R,
    pub flight_count: usize,
    /// Releases happen in `[0, horizon)`; the checking window is
    /// `[0, horizon]`.
    pub horizon: R,
    /// Release slot duration; release times are slot multiples.
    pub slot: R,
    /// Common ground speed for every flight (knots).
    pub speed: R,
    pub level_count: usize,
    pub rng_seed: u64,
}

impl<R: Real> GenConfig<R> {
    /// The benchmark sector: 54 x 64.8 nmi, points every 5.4 nmi, 320
    /// flights over one hour on 0.02 h slots at 533 kn, 12 levels.
    pub fn defaults() -> Self {
        GenConfig {
            width: real(54.0),
            height: real(64.8),
            spacing: real(5.4),
            flight_count: 320,
            horizon: real(1.0),
            slot: real(0.02),
            speed: real(533.0),
            level_count: 12,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Invalid(&'static str),
    #[error("spacing {spacing} does not evenly divide the {edge} edge length {length}")]
    SpacingMismatch { edge: &'static str, length: f64, spacing: f64 },
    #[error("spacing leaves no interior points on the {edge} edge")]
    NoInteriorPoints { edge: &'static str },
    #[error(
        "could not place flight {flight} after {attempts} attempts \
         ({placed} placed, point-slot capacity {capacity})"
    )]
    CapacityExhausted { flight: usize, attempts: usize, placed: usize, capacity: usize },
}

/// Which sector edge a boundary point sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Bottom,
    Top,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint<R> {
    pub pos: Vec2<R>,
    pub edge: Edge,
}

/// Number of spacing steps along an edge, or an error when the spacing does
/// not divide the length (within 1e-9 relative).
fn edge_steps<R: Real>(length: R, spacing: R, edge: &'static str) -> Result<usize, GenError> {
    let ratio = (length / spacing).to_f64().unwrap_or(f64::NAN);
    let steps = ratio.round();
    if !(ratio.is_finite() && (ratio - steps).abs() <= 1e-9 * ratio.max(1.0)) {
        return Err(GenError::SpacingMismatch {
            edge,
            length: length.to_f64().unwrap_or(f64::NAN),
            spacing: spacing.to_f64().unwrap_or(f64::NAN),
        });
    }
    if steps < 2.0 {
        return Err(GenError::NoInteriorPoints { edge });
    }
    Ok(steps as usize)
}

/// The designated boundary points: spacing multiples along each edge,
/// corners excluded. Order: bottom, top, left, right, each by ascending
/// coordinate.
pub fn boundary_points<R: Real>(config: &GenConfig<R>) -> Result<Vec<BoundaryPoint<R>>, GenError> {
    if !(config.width > R::zero() && config.height > R::zero() && config.spacing > R::zero()) {
        return Err(GenError::Invalid("width, height, and spacing must be positive"));
    }
    let nx = edge_steps(config.width, config.spacing, "width")?;
    let ny = edge_steps(config.height, config.spacing, "height")?;

    let mut points = Vec::with_capacity(2 * (nx - 1) + 2 * (ny - 1));
    let coord = |i: usize| R::from_usize(i).unwrap() * config.spacing;
    for i in 1..nx {
        points.push(BoundaryPoint { pos: Vec2::new(coord(i), R::zero()), edge: Edge::Bottom });
    }
    for i in 1..nx {
        points.push(BoundaryPoint { pos: Vec2::new(coord(i), config.height), edge: Edge::Top });
    }
    for j in 1..ny {
        points.push(BoundaryPoint { pos: Vec2::new(R::zero(), coord(j)), edge: Edge::Left });
    }
    for j in 1..ny {
        points.push(BoundaryPoint { pos: Vec2::new(config.width, coord(j)), edge: Edge::Right });
    }
    Ok(points)
}

const MAX_ATTEMPTS: usize = 1000;

/// Generate a scenario: per flight, draw an entry point, an exit point
/// uniformly over the other edges' points, and a release slot, rejecting
/// draws whose (entry point, slot) is already taken.
pub fn generate<R: Real>(config: &GenConfig<R>) -> Result<Scenario<R>, GenError> {
    let points = boundary_points(config)?;
    if !(config.horizon > R::zero() && config.slot > R::zero() && config.slot <= config.horizon) {
        return Err(GenError::Invalid("need 0 < slot <= horizon"));
    }
    if !(config.speed > R::zero()) {
        return Err(GenError::Invalid("speed must be positive"));
    }
    if config.level_count < 1 {
        return Err(GenError::Invalid("need at least one flight level"));
    }
    let slots = ((config.horizon / config.slot).to_f64().unwrap() + 1e-9).floor() as usize;
    let slots = slots.max(1);
    let capacity = points.len() * slots;

    // Exit candidates per entry edge.
    let exits_for = |edge: Edge| -> Vec<usize> {
        points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.edge != edge)
            .map(|(i, _)| i)
            .collect()
    };
    let exit_candidates =
        [exits_for(Edge::Bottom), exits_for(Edge::Top), exits_for(Edge::Left), exits_for(Edge::Right)];
    let edge_index = |e: Edge| match e {
        Edge::Bottom => 0,
        Edge::Top => 1,
        Edge::Left => 2,
        Edge::Right => 3,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let mut flights = Vec::with_capacity(config.flight_count);
    for n in 0..config.flight_count {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let entry = rng.gen_range(0..points.len());
            let candidates = &exit_candidates[edge_index(points[entry].edge)];
            let exit = candidates[rng.gen_range(0..candidates.len())];
            let slot = rng.gen_range(0..slots);
            if used.contains(&(entry, slot)) {
                continue;
            }
            used.insert((entry, slot));
            flights.push(FlightSpec {
                id: format!("F{n:04}"),
                entry: points[entry].pos,
                exit: points[exit].pos,
                release_time: R::from_usize(slot).unwrap() * config.slot,
                speed: config.speed,
            });
            placed = true;
            break;
        }
        if !placed {
            return Err(GenError::CapacityExhausted {
                flight: n,
                attempts: MAX_ATTEMPTS,
                placed: flights.len(),
                capacity,
            });
        }
    }

    let sector = Sector {
        width: config.width,
        height: config.height,
        level_count: config.level_count,
        t_start: R::zero(),
        t_end: config.horizon,
    };
    Ok(Scenario::new(sector, flights).expect("generated flights satisfy scenario invariants"))
}
