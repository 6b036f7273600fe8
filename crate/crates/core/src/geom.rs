//! Planar trajectory geometry: straight legs and constant-radius arc legs
//! between a flight's entry and exit points.
//!
//! An arc leg is parameterized by the signed half arc angle `theta`: the arc
//! through entry and exit whose total turn is `2*theta`, bulging to the left
//! of the entry->exit direction for positive `theta` and to the right for
//! negative. `theta = 0` is the straight path. The radius follows from the
//! chord, `radius = chord / (2 sin |theta|)`, and the arc length is
//! `chord * |theta| / sin |theta|`.
//!
//! Positions along an arc are computed in a chord-anchored frame,
//! `entry + chord * sin(theta*s)/sin(theta) * rotate(u, theta*(1-s))`
//! with `u` the unit chord direction and `s` the traveled fraction of the
//! arc length. Both endpoints are reproduced to machine precision for any
//! `theta`, including tiny angles where the circle's center is far away.

use std::ops::{Add, Mul, Neg, Sub};

use crate::model::FlightSpec;
use crate::scalar::{real, Real};

/// A point or displacement in the sector plane (nautical miles).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2<R> {
    pub x: R,
    pub y: R,
}

impl<R: Real> Vec2<R> {
    pub fn new(x: R, y: R) -> Self {
        Vec2 { x, y }
    }

    pub fn zero() -> Self {
        Vec2 { x: R::zero(), y: R::zero() }
    }

    pub fn dot(self, other: Self) -> R {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> R {
        self.dot(self)
    }

    pub fn norm(self) -> R {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Self) -> R {
        (self - other).norm()
    }

    pub fn dist_sq(self, other: Self) -> R {
        (self - other).norm_sq()
    }

    /// Unit vector in the same direction; the input must be nonzero.
    pub fn unit(self) -> Self {
        let n = self.norm();
        debug_assert!(n > R::zero(), "unit() of zero vector");
        Vec2::new(self.x / n, self.y / n)
    }

    /// Left-hand perpendicular (counterclockwise quarter turn).
    pub fn perp_left(self) -> Self {
        Vec2::new(-self.y, self.x)
    }

    /// Rotated counterclockwise by `angle` radians.
    pub fn rotated(self, angle: R) -> Self {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl<R: Real> Add for Vec2<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<R: Real> Sub for Vec2<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<R: Real> Mul<R> for Vec2<R> {
    type Output = Self;
    fn mul(self, rhs: R) -> Self {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl<R: Real> Neg for Vec2<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Vec2::new(-self.x, -self.y)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeomError {
    #[error("theta = 0 specifies no arc; use the straight path")]
    ZeroTheta,
    #[error("|theta| = {0} exceeds pi/2")]
    ThetaOutOfRange(f64),
    #[error("entry and exit coincide")]
    DegenerateChord,
    #[error("time {t} outside airborne interval [{start}, {end}]")]
    TimeOutsideAirborne { t: f64, start: f64, end: f64 },
}

/// Circle-frame description of an arc leg, mainly for reporting and
/// validation; position sampling goes through [`Trajectory`] instead.
///
/// Traversal runs from `start_angle` with the central angle *decreasing* by
/// `sweep` (so a positive sweep, i.e. a left bulge, is a clockwise sweep
/// around the center).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcSpec<R> {
    pub center: Vec2<R>,
    pub radius: R,
    pub start_angle: R,
    /// Signed total turn, `2 * theta`.
    pub sweep: R,
    pub chord: R,
}

impl<R: Real> ArcSpec<R> {
    /// Endpoints reconstructed from the circle frame.
    pub fn endpoints(&self) -> (Vec2<R>, Vec2<R>) {
        let at = |angle: R| {
            let (s, c) = angle.sin_cos();
            self.center + Vec2::new(c, s) * self.radius
        };
        (at(self.start_angle), at(self.start_angle - self.sweep))
    }
}

/// The unique arc through `entry` and `exit` with half arc angle `|theta|`,
/// bulging left of the entry->exit direction for `theta > 0` and right for
/// `theta < 0`. Requires `0 < |theta| <= pi/2`.
pub fn arc_spec<R: Real>(entry: Vec2<R>, exit: Vec2<R>, theta: R) -> Result<ArcSpec<R>, GeomError> {
    if theta.is_zero() {
        return Err(GeomError::ZeroTheta);
    }
    if theta.abs() > R::FRAC_PI_2() {
        return Err(GeomError::ThetaOutOfRange(theta.abs().to_f64().unwrap_or(f64::NAN)));
    }
    let chord_vec = exit - entry;
    let chord = chord_vec.norm();
    if chord.is_zero() {
        return Err(GeomError::DegenerateChord);
    }
    let u = chord_vec * (R::one() / chord);
    let half = real::<R>(0.5);
    let mid = (entry + exit) * half;
    let radius = chord / (real::<R>(2.0) * theta.abs().sin());
    // The center sits on the perpendicular bisector, on the side opposite
    // the bulge, at the apothem distance radius*cos|theta| from the chord.
    let center = mid - u.perp_left() * (theta.signum() * radius * theta.abs().cos());
    let start_angle = (entry.y - center.y).atan2(entry.x - center.x);
    Ok(ArcSpec {
        center,
        radius,
        start_angle,
        sweep: real::<R>(2.0) * theta,
        chord,
    })
}

/// Arc-length to chord-length ratio `|theta| / sin |theta|`, with a series
/// expansion near zero where the direct quotient loses accuracy.
pub fn arc_ratio<R: Real>(theta: R) -> R {
    let a = theta.abs();
    if a < real::<R>(1e-4) {
        // theta/sin(theta) = 1 + theta^2/6 + 7 theta^4/360 + O(theta^6)
        let a2 = a * a;
        R::one() + a2 / real::<R>(6.0) + real::<R>(7.0 / 360.0) * a2 * a2
    } else {
        a / a.sin()
    }
}

/// Path length of the leg with half arc angle `theta`; the chord length for
/// `theta = 0`, continuous there.
pub fn path_length<R: Real>(entry: Vec2<R>, exit: Vec2<R>, theta: R) -> R {
    debug_assert!(theta.abs() <= R::FRAC_PI_2() + real::<R>(1e-12));
    entry.dist(exit) * arc_ratio(theta)
}

/// Sector exit time for the leg: release time plus path length over speed.
pub fn exit_time<R: Real>(flight: &FlightSpec<R>, theta: R) -> R {
    flight.release_time + path_length(flight.entry, flight.exit, theta) / flight.speed
}

/// Constant-speed position evaluator for one flight and one `theta`.
///
/// Cheap to construct and `Copy`; build one per (flight, theta) and sample
/// it at many times.
#[derive(Clone, Copy, Debug)]
pub struct Trajectory<R> {
    entry: Vec2<R>,
    chord_dir: Vec2<R>,
    chord: R,
    theta: R,
    release: R,
    speed: R,
    length: R,
}

impl<R: Real> Trajectory<R> {
    /// Requires a validated flight (entry != exit, speed > 0) and
    /// `|theta| <= pi/2`.
    pub fn new(flight: &FlightSpec<R>, theta: R) -> Self {
        debug_assert!(theta.abs() <= R::FRAC_PI_2() + real::<R>(1e-12));
        let chord_vec = flight.exit - flight.entry;
        let chord = chord_vec.norm();
        Trajectory {
            entry: flight.entry,
            chord_dir: chord_vec * (R::one() / chord),
            chord,
            theta,
            release: flight.release_time,
            speed: flight.speed,
            length: chord * arc_ratio(theta),
        }
    }

    pub fn theta(&self) -> R {
        self.theta
    }

    pub fn length(&self) -> R {
        self.length
    }

    pub fn release(&self) -> R {
        self.release
    }

    pub fn exit_time(&self) -> R {
        self.release + self.length / self.speed
    }

    pub fn is_airborne(&self, t: R) -> bool {
        t >= self.release && t <= self.exit_time()
    }

    /// Position after traveling `(t - release) * speed` along the leg.
    ///
    /// Meaningful for `t` in the airborne interval; extrapolates smoothly
    /// outside it.
    pub fn position(&self, t: R) -> Vec2<R> {
        let frac = (t - self.release) * self.speed / self.length;
        if self.theta.is_zero() {
            self.entry + self.chord_dir * (self.chord * frac)
        } else {
            let scale = self.chord * (self.theta * frac).sin() / self.theta.sin();
            self.entry + self.chord_dir.rotated(self.theta * (R::one() - frac)) * scale
        }
    }
}

/// Position on the straight leg at time `t` (errors outside the airborne
/// interval).
pub fn straight_position<R: Real>(flight: &FlightSpec<R>, t: R) -> Result<Vec2<R>, GeomError> {
    position_on_leg(flight, R::zero(), t)
}

/// Position on the arc leg with half arc angle `theta` at time `t` (errors
/// outside the airborne interval).
pub fn arc_position<R: Real>(flight: &FlightSpec<R>, theta: R, t: R) -> Result<Vec2<R>, GeomError> {
    position_on_leg(flight, theta, t)
}

fn position_on_leg<R: Real>(flight: &FlightSpec<R>, theta: R, t: R) -> Result<Vec2<R>, GeomError> {
    let traj = Trajectory::new(flight, theta);
    if !traj.is_airborne(t) {
        return Err(GeomError::TimeOutsideAirborne {
            t: t.to_f64().unwrap_or(f64::NAN),
            start: traj.release().to_f64().unwrap_or(f64::NAN),
            end: traj.exit_time().to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(traj.position(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    fn flight(entry: (f64, f64), exit: (f64, f64), release: f64, speed: f64) -> FlightSpec<f64> {
        FlightSpec {
            id: "T".to_string(),
            entry: Vec2::new(entry.0, entry.1),
            exit: Vec2::new(exit.0, exit.1),
            release_time: release,
            speed,
        }
    }

    #[test]
    fn straight_position_at_release_and_exit() {
        let f = flight((0.0, 0.0), (10.0, 0.0), 0.0, 533.0);
        let p0 = straight_position(&f, 0.0).unwrap();
        assert_eq!(p0, Vec2::new(0.0, 0.0));
        let p1 = straight_position(&f, 10.0 / 533.0).unwrap();
        assert_abs_diff_eq!(p1.x, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p1.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn straight_position_along_unit_vector() {
        // Unit direction (0.6, 0.8); 2.5 nmi traveled after half an hour at 5 kn.
        let f = flight((0.0, 0.0), (3.0, 4.0), 0.0, 5.0);
        let p = straight_position(&f, 0.5).unwrap();
        assert_abs_diff_eq!(p.x, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn straight_position_rejects_out_of_interval() {
        let f = flight((0.0, 0.0), (10.0, 0.0), 0.5, 100.0);
        assert!(matches!(
            straight_position(&f, 0.4),
            Err(GeomError::TimeOutsideAirborne { .. })
        ));
        assert!(straight_position(&f, 0.7).is_err());
    }

    #[test]
    fn arc_spec_semicircle_is_diameter_chord() {
        let spec = arc_spec(Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(spec.center.x, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.center.y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(spec.radius, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.sweep, PI, epsilon = 1e-12);
    }

    #[test]
    fn arc_spec_negative_theta_bulges_right() {
        // radius = chord / (2 sin 30 deg) = 10; sagitta = radius (1 - cos 30 deg).
        let spec = arc_spec(Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), -FRAC_PI_6).unwrap();
        assert_abs_diff_eq!(spec.radius, 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.center.x, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spec.center.y, 10.0 * (FRAC_PI_6).cos(), epsilon = 1e-12);

        let f = flight((0.0, 0.0), (10.0, 0.0), 0.0, 100.0);
        let traj = Trajectory::new(&f, -FRAC_PI_6);
        let mid = traj.position((traj.release() + traj.exit_time()) / 2.0);
        assert_abs_diff_eq!(mid.x, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(mid.y, -10.0 * (1.0 - FRAC_PI_6.cos()), epsilon = 1e-9);
    }

    #[test]
    fn arc_spec_rejects_invalid_inputs() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(10.0, 0.0);
        assert_eq!(arc_spec(a, b, 0.0).unwrap_err(), GeomError::ZeroTheta);
        assert!(matches!(
            arc_spec(a, b, 1.8),
            Err(GeomError::ThetaOutOfRange(_))
        ));
        assert_eq!(arc_spec(a, a, 0.3).unwrap_err(), GeomError::DegenerateChord);
    }

    #[test]
    fn arc_spec_endpoints_match_inputs() {
        for &theta in &[0.05, -0.3, 0.43, FRAC_PI_2, -FRAC_PI_2] {
            let entry = Vec2::new(3.0, -2.0);
            let exit = Vec2::new(40.0, 25.0);
            let spec = arc_spec(entry, exit, theta).unwrap();
            let (e, x) = spec.endpoints();
            assert!(e.dist(entry) < 1e-9, "entry residual at theta {theta}");
            assert!(x.dist(exit) < 1e-9, "exit residual at theta {theta}");
        }
    }

    #[test]
    fn arc_position_semicircle_midpoint() {
        let f = flight((0.0, 0.0), (10.0, 0.0), 0.0, 100.0);
        let traj = Trajectory::new(&f, FRAC_PI_2);
        let halfway = (traj.release() + traj.exit_time()) / 2.0;
        let p = traj.position(halfway);
        assert_abs_diff_eq!(p.x, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn arc_position_starts_at_entry() {
        for &theta in &[0.0, 0.2, -0.4, FRAC_PI_2] {
            let f = flight((2.0, 7.0), (30.0, -4.0), 0.25, 410.0);
            let p = arc_position(&f, theta, 0.25).unwrap();
            assert!(p.dist(f.entry) < 1e-12);
        }
    }

    #[test]
    fn arc_position_quarter_arclength_matches_polyline_oracle() {
        let f = flight((0.0, 0.0), (10.0, 0.0), 0.0, 100.0);
        let theta = FRAC_PI_6;
        let traj = Trajectory::new(&f, theta);
        let quarter_t = traj.release() + (traj.exit_time() - traj.release()) / 4.0;
        let p = traj.position(quarter_t);

        // Accumulate polyline length from entry exactly up to p.
        let steps = 100_000;
        let mut got = 0.0;
        let mut prev = traj.position(0.0);
        for k in 1..=steps {
            let t = quarter_t * k as f64 / steps as f64;
            let q = traj.position(t);
            got += prev.dist(q);
            prev = q;
        }
        let expected = traj.length() / 4.0;
        assert!((got - expected).abs() / expected < 1e-6, "got {got}, expected {expected}");
        // And the sampled point is on the arc's circle.
        let spec = arc_spec(f.entry, f.exit, theta).unwrap();
        assert_abs_diff_eq!(p.dist(spec.center), spec.radius, epsilon = 1e-9);
    }

    #[test]
    fn path_length_straight_is_chord() {
        assert_eq!(
            path_length(Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), 0.0),
            10.0
        );
    }

    #[test]
    fn path_length_at_25_degrees() {
        let theta = 25.0_f64.to_radians();
        let len = path_length(Vec2::new(0.0, 0.0), Vec2::new(10.0, 0.0), theta);
        assert_abs_diff_eq!(len, 10.0 * theta / theta.sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(len, 10.3245, epsilon = 1e-4);
        // The 25-degree extension ratio stays within 3.3%.
        assert!(arc_ratio(theta) > 1.032 && arc_ratio(theta) < 1.033);
    }

    #[test]
    fn path_length_small_angle_series() {
        let chord = 10.0;
        let len: f64 = path_length(Vec2::new(0.0, 0.0), Vec2::new(chord, 0.0), 1e-6);
        assert!((len - chord).abs() / chord < 1e-10);
    }

    #[test]
    fn path_length_matches_polyline_integration() {
        let f = flight((0.0, 0.0), (37.0, 21.0), 0.0, 250.0);
        for &theta in &[0.1, 0.43633, -0.9, FRAC_PI_2] {
            let traj = Trajectory::new(&f, theta);
            let steps = 100_000;
            let mut sum = 0.0;
            let mut prev = traj.position(0.0);
            for k in 1..=steps {
                let t = traj.exit_time() * k as f64 / steps as f64;
                let q = traj.position(t);
                sum += prev.dist(q);
                prev = q;
            }
            let closed = path_length(f.entry, f.exit, theta);
            assert!((sum - closed).abs() / closed < 1e-6);
        }
    }

    #[test]
    fn exit_time_examples() {
        let f = flight((0.0, 0.0), (533.0, 0.0), 0.0, 533.0);
        assert_abs_diff_eq!(exit_time(&f, 0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(exit_time(&f, 25.0_f64.to_radians()), 1.03245, epsilon = 1e-4);
        let shifted = flight((0.0, 0.0), (533.0, 0.0), 0.5, 533.0);
        assert_abs_diff_eq!(exit_time(&shifted, 0.0), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn works_in_single_precision() {
        let f = FlightSpec::<f32> {
            id: "T".to_string(),
            entry: Vec2::new(0.0, 0.0),
            exit: Vec2::new(10.0, 0.0),
            release_time: 0.0,
            speed: 100.0,
        };
        let traj = Trajectory::new(&f, std::f32::consts::FRAC_PI_2);
        let mid = traj.position((traj.release() + traj.exit_time()) / 2.0);
        assert!((mid.x - 5.0).abs() < 1e-4 && (mid.y - 5.0).abs() < 1e-4);
    }
}
