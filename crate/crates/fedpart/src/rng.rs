//! Derived RNG streams.
//!
//! Every random decision in a run is drawn from its own ChaCha8 stream keyed
//! by `(master_seed, purpose, ids...)`. Streams are derived, never shared, so
//! clients and layers can be processed in any order (or in parallel) without
//! changing a single drawn value.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purposes. Keeping these in one place avoids accidental collisions
/// between, say, cohort sampling and batch shuffling for round 0.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const COHORT: u64 = 2;
    pub const CLIENT_BATCH: u64 = 3;
    pub const EXTRACT: u64 = 4;
    pub const DATA: u64 = 5;
    pub const PARTITION: u64 = 6;
    pub const CAPACITY: u64 = 7;
    pub const COVERAGE: u64 = 8;
    pub const MONTE_CARLO: u64 = 9;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a deterministic stream from a master seed and a key path.
///
/// The key path is folded into the seed with splitmix64 so that nearby
/// `(seed, key)` combinations still produce unrelated streams.
pub fn stream(master_seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(master_seed ^ 0x6a09_e667_f3bc_c908);
    for &part in path {
        state = splitmix64(state ^ splitmix64(part));
    }
    ChaCha8Rng::seed_from_u64(state)
}
