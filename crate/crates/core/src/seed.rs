//! Seed derivation for reproducible, schedule-independent randomness.
//!
//! Every worker (client, replication, coordinator) consumes its own stream
//! seeded from `(root_seed, stream_id)`, so parallel and serial schedules
//! produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id reserved for the coordinator's own draws.
pub const COORDINATOR_STREAM: u64 = u64::MAX;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a root seed with a stream id into an independent child seed.
pub fn derive(root_seed: u64, stream_id: u64) -> u64 {
    splitmix64(root_seed ^ splitmix64(stream_id))
}

/// The RNG used throughout; seeded deterministically, portable across platforms.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
