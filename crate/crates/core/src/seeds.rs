//! Deterministic seed derivation.
//!
//! Every randomized stage (clustering init, dispersal targets) draws from
//! its own stream, derived from the base seed plus a purpose salt and the
//! (iteration, level) coordinates. Streams therefore do not depend on the
//! order stages run in, which keeps results stable if per-level work is
//! ever parallelized.

/// Purpose salts for derived streams.
pub mod salt {
    /// Clustering during initial level assignment.
    pub const INIT: u64 = 1;
    /// Per-iteration, per-level clustering feeding the disperse step.
    pub const ENGINE_CLUSTER: u64 = 2;
    /// Per-iteration, per-level planar solver invocation.
    pub const SOLVER: u64 = 3;
    /// Per-iteration dispersal target draws.
    pub const DISPERSE: u64 = 4;
    /// Clustering inside the arc-leg planar solver.
    pub const RF_CLUSTER: u64 = 5;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a base seed with a purpose salt and two coordinates.
pub fn derive(seed: u64, salt: u64, a: u64, b: u64) -> u64 {
    let mut z = splitmix64(seed ^ splitmix64(salt));
    z = splitmix64(z ^ splitmix64(a));
    splitmix64(z ^ splitmix64(b))
}
