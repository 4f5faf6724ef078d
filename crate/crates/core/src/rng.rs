//! Deterministic derivation of independent RNG streams.
//!
//! Every stochastic stage owns a stream keyed by (base seed, stage tag,
//! per-item index), so parallel execution and re-ordering never change results.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// Stage tags; keep values stable, they are part of the reproducibility contract.
pub mod stream {
    pub const VOXEL_SHAPE: u64 = 1;
    pub const RADIUS_SAMPLE: u64 = 2;
    pub const PATCH_SUBSAMPLE: u64 = 3;
    pub const RANSAC: u64 = 4;
    pub const SCENE: u64 = 5;
    pub const BENCH_PAIR: u64 = 6;
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a base seed with an arbitrary list of stream labels.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    let mut state = splitmix64(base);
    for &label in labels {
        state = splitmix64(state ^ splitmix64(label));
    }
    state
}

/// Convenience constructor for a derived ChaCha stream.
pub fn derived_rng(base: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, labels))
}
