//! Conflict resolution for sector traffic by clustering and dispersal.
//!
//! Flights cross a rectangular sector on one of several flight levels. Two
//! flights on the same level conflict when they come within the separation
//! distance. This crate resolves such instances with a two-tier heuristic:
//!
//! * per level, a planar solver bends flights onto constant-radius arc
//!   legs, driving a conflict score down by gradient descent
//!   ([`rfleg`]);
//! * across levels, closest-approach events are clustered and the worst
//!   conflict contributors are moved to other levels until every level is
//!   clean or the iteration budget runs out ([`engine`]).
//!
//! [`scengen`] generates reproducible benchmark scenarios, and everything
//! randomized is driven by explicit seeds, so a seed fully determines a
//! solution.
//!
//! All math is generic over the scalar type via the [`Real`] trait
//! (`f32` or `f64`); the `*64` aliases below fix the common
//! double-precision configuration.

pub mod cluster;
pub mod conflict;
pub mod engine;
pub mod geom;
pub mod model;
pub mod rfleg;
pub mod sampling;
pub mod scengen;
pub mod seeds;

mod scalar;

pub use scalar::Real;

pub type Point64 = geom::Vec2<f64>;
pub type FlightSpec64 = model::FlightSpec<f64>;
pub type Sector64 = model::Sector<f64>;
pub type Scenario64 = model::Scenario<f64>;
pub type Assignment64 = model::Assignment<f64>;
pub type SolverParams64 = model::SolverParams<f64>;
pub type SolutionReport64 = model::SolutionReport<f64>;
pub type GenConfig64 = scengen::GenConfig<f64>;
