//! K-means over min-distance events.
//!
//! Within one level the position-time metric is exactly the Euclidean
//! distance on the embedding `(x, y, V0*t)`, so events are clustered with
//! plain k-means in three dimensions. Seeding is greedy
//! distance-weighted (k-means++ style) from an explicit seed, which keeps
//! every run reproducible; sampling decisions are made in `f64` so the
//! random stream does not depend on the working scalar type.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conflict::{event_score, EventPoint, LevelConflicts};
use crate::model::{FlightIdx, PosTime, SolverParams};
use crate::scalar::Real;

/// Embed a position-time record for clustering: `(x, y, V0*t)`.
pub fn embed<R: Real>(p: &PosTime<R>, v0: R) -> [R; 3] {
    [p.x, p.y, v0 * p.t]
}

/// Cluster count rule: one cluster per five events, at least one for a
/// nonempty set. Zero only for zero events.
pub fn choose_k(event_count: usize) -> usize {
    if event_count == 0 {
        0
    } else {
        (event_count / 5).max(1)
    }
}

fn dist_sq<R: Real>(a: &[R; 3], b: &[R; 3]) -> R {
    let mut s = R::zero();
    for i in 0..3 {
        let d = a[i] - b[i];
        s += d * d;
    }
    s
}

/// K-means output: per-point cluster index and the final centroids. At
/// termination every point is assigned to its nearest centroid (ties to
/// the lower index).
#[derive(Clone, Debug)]
pub struct KMeans<R> {
    pub assignment: Vec<usize>,
    pub centroids: Vec<[R; 3]>,
}

fn nearest<R: Real>(p: &[R; 3], centroids: &[[R; 3]]) -> usize {
    let mut best = 0;
    let mut best_d = dist_sq(p, &centroids[0]);
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = dist_sq(p, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn seed_centroids<R: Real>(points: &[[R; 3]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[R; 3]> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)]);
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| dist_sq(p, &centroids[0]).to_f64().unwrap_or(0.0))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc >= target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // All remaining mass sits on existing centroids; any point does.
            rng.gen_range(0..n)
        };
        let c = points[next];
        for (i, p) in points.iter().enumerate() {
            let d = dist_sq(p, &c).to_f64().unwrap_or(0.0);
            if d < d2[i] {
                d2[i] = d;
            }
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm with distance-weighted seeding, capped at 100 update
/// rounds. `k` is clamped to the point count; deterministic for a fixed
/// seed.
pub fn kmeans<R: Real>(points: &[[R; 3]], k: usize, seed: u64) -> KMeans<R> {
    if points.is_empty() || k == 0 {
        return KMeans { assignment: Vec::new(), centroids: Vec::new() };
    }
    let k = k.min(points.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();

    for _ in 0..100 {
        // Means of the current assignment.
        let mut sums = vec![[R::zero(); 3]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            for i in 0..3 {
                sums[a][i] += p[i];
            }
            counts[a] += 1;
        }
        let mut repaired: Vec<usize> = Vec::new();
        for j in 0..k {
            if counts[j] > 0 {
                let m = R::from_usize(counts[j]).unwrap();
                centroids[j] = [sums[j][0] / m, sums[j][1] / m, sums[j][2] / m];
            } else {
                // Degenerate cluster: reseed on the point farthest from the
                // stale centroid, skipping points already used for repair.
                let mut far = None;
                let mut far_d = R::neg_infinity();
                for (i, p) in points.iter().enumerate() {
                    if repaired.contains(&i) {
                        continue;
                    }
                    let d = dist_sq(p, &centroids[j]);
                    if d > far_d {
                        far_d = d;
                        far = Some(i);
                    }
                }
                if let Some(i) = far {
                    centroids[j] = points[i];
                    repaired.push(i);
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
    }
    KMeans { assignment, centroids }
}

/// Within-cluster sum of squared distances.
pub fn within_cluster_ss<R: Real>(points: &[[R; 3]], km: &KMeans<R>) -> R {
    points
        .iter()
        .zip(&km.assignment)
        .fold(R::zero(), |acc, (p, &a)| acc + dist_sq(p, &km.centroids[a]))
}

/// An event record with its score against the level's full violating set.
#[derive(Clone, Copy, Debug)]
pub struct ScoredEvent<R> {
    pub point: EventPoint<R>,
    pub score: R,
}

/// One cluster of a level's violating event records.
#[derive(Clone, Debug)]
pub struct EventCluster<R> {
    /// Member records, sorted by descending score.
    pub members: Vec<ScoredEvent<R>>,
    pub centroid: [R; 3],
    /// Owning flights in member order, first occurrence only, excluding
    /// flights already listed by an earlier cluster of the same level.
    pub flights: Vec<FlightIdx>,
    pub total_score: R,
}

/// Cluster a level's violating events.
///
/// Records are embedded and k-means-clustered with `choose_k`; each member
/// is scored against the level's entire violating set; members sort by
/// descending score, clusters by descending total member score; flight
/// lists deduplicate across clusters in that order.
pub fn cluster_level_events<R: Real>(
    level: &LevelConflicts<R>,
    params: &SolverParams<R>,
    seed: u64,
) -> Vec<EventCluster<R>> {
    let points = &level.points;
    if points.is_empty() {
        return Vec::new();
    }
    let embeds: Vec<[R; 3]> = points
        .iter()
        .map(|p| embed(&p.pos, params.time_scale_speed))
        .collect();
    let km = kmeans(&embeds, choose_k(points.len()), seed);

    let min_dist = |a: FlightIdx, b: FlightIdx| level.min_dist(a, b);
    let scores: Vec<R> = (0..points.len())
        .map(|i| event_score(i, points, &min_dist, params))
        .collect();

    let k = km.centroids.len();
    let mut member_idx: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in km.assignment.iter().enumerate() {
        member_idx[c].push(i);
    }

    struct Raw<R> {
        members: Vec<usize>,
        centroid: [R; 3],
        total: R,
    }
    let mut raw: Vec<Raw<R>> = Vec::new();
    for (c, mut members) in member_idx.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        members.sort_by(|&a, &b| {
            scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b))
        });
        let total = members.iter().fold(R::zero(), |acc, &i| acc + scores[i]);
        raw.push(Raw { members, centroid: km.centroids[c], total });
    }
    // Highest-scoring cluster first; ties keep the original cluster order.
    raw.sort_by(|a, b| b.total.partial_cmp(&a.total).unwrap());

    let mut seen: Vec<bool> = vec![false; level.flights.last().map_or(0, |&f| f + 1)];
    let seen_flight = |f: FlightIdx, seen: &mut Vec<bool>| {
        if f >= seen.len() {
            seen.resize(f + 1, false);
        }
        let was = seen[f];
        seen[f] = true;
        was
    };
    raw.into_iter()
        .map(|r| {
            let members: Vec<ScoredEvent<R>> = r
                .members
                .iter()
                .map(|&i| ScoredEvent { point: points[i], score: scores[i] })
                .collect();
            let mut flights = Vec::new();
            for m in &members {
                if !seen_flight(m.point.owner, &mut seen) {
                    flights.push(m.point.owner);
                }
            }
            EventCluster { members, centroid: r.centroid, flights, total_score: r.total }
        })
        .collect()
}
