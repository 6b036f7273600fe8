//! Uniform time grid and cached trajectory samples.
//!
//! Every conflict check in the library evaluates positions on the same grid
//! `t_k = t_start + k * dt`. Sample `k` counts for a flight exactly when the
//! plain floating-point comparisons `release <= t_k`, `t_k <= exit_time`,
//! and `t_k <= t_end` hold; index windows are only a conservative
//! enumeration bound. Keeping membership comparison-based (rather than
//! baked into index arithmetic) makes independent rescans of the grid agree
//! bit for bit.

use crate::geom::{Trajectory, Vec2};
use crate::model::{Sector, SolverParams};
use crate::scalar::Real;

/// The shared sample grid over the sector's checking window.
#[derive(Clone, Copy, Debug)]
pub struct SampleGrid<R> {
    pub t_start: R,
    pub t_end: R,
    pub dt: R,
}

impl<R: Real> SampleGrid<R> {
    pub fn new(t_start: R, t_end: R, dt: R) -> Self {
        debug_assert!(dt > R::zero() && t_start < t_end);
        SampleGrid { t_start, t_end, dt }
    }

    pub fn from_params(sector: &Sector<R>, params: &SolverParams<R>) -> Self {
        SampleGrid::new(sector.t_start, sector.t_end, params.dt)
    }

    /// Time of sample `k`, always computed as `t_start + k * dt`.
    #[inline]
    pub fn time(&self, k: usize) -> R {
        self.t_start + R::from_usize(k).unwrap() * self.dt
    }

    /// Exclusive upper bound on sample indices that can lie in the window.
    pub fn index_bound(&self) -> usize {
        let span = (self.t_end - self.t_start) / self.dt;
        span.to_f64().map_or(0, |s| s.floor() as usize) + 2
    }

    /// Inclusive index range of samples with `lo <= t_k <= min(hi, t_end)`,
    /// or `None` if no sample qualifies.
    pub fn index_window(&self, lo: R, hi: R) -> Option<(usize, usize)> {
        let lo = lo.max(self.t_start);
        let hi = hi.min(self.t_end);
        if hi < lo {
            return None;
        }
        let approx = |t: R| ((t - self.t_start) / self.dt).to_f64().unwrap_or(0.0);

        // Estimate, then settle with the authoritative comparisons.
        let mut k_lo = (approx(lo).floor() as i64 - 2).max(0) as usize;
        while self.time(k_lo) < lo {
            k_lo += 1;
        }
        let mut k_hi = (approx(hi).ceil() as i64 + 2).max(0) as usize;
        while k_hi > 0 && self.time(k_hi) > hi {
            k_hi -= 1;
        }
        if self.time(k_hi) > hi || k_hi < k_lo {
            return None;
        }
        Some((k_lo, k_hi))
    }
}

/// Grid samples of one trajectory over its airborne window.
#[derive(Clone, Debug)]
pub struct Polyline<R> {
    pub k_lo: usize,
    pub points: Vec<Vec2<R>>,
}

impl<R: Real> Polyline<R> {
    pub fn k_hi(&self) -> usize {
        self.k_lo + self.points.len() - 1
    }

    #[inline]
    pub fn at(&self, k: usize) -> Vec2<R> {
        self.points[k - self.k_lo]
    }
}

/// Sample a trajectory on the grid; `None` when no grid sample falls inside
/// the airborne interval.
pub fn sample_trajectory<R: Real>(
    traj: &Trajectory<R>,
    grid: &SampleGrid<R>,
) -> Option<Polyline<R>> {
    let (k_lo, k_hi) = grid.index_window(traj.release(), traj.exit_time())?;
    let points = (k_lo..=k_hi).map(|k| traj.position(grid.time(k))).collect();
    Some(Polyline { k_lo, points })
}
