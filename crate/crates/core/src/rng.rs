//! Seeded, portable random number generation with per-task substreams.
//!
//! Every stochastic routine in the crate takes an explicit `u64` seed and
//! derives independent substreams from it, so results are reproducible
//! bit-for-bit regardless of thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; good avalanche for seed derivation.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for substream `stream` of a master seed.
pub fn substream_seed(master: u64, stream: u64) -> u64 {
    mix(master ^ mix(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// Deterministic RNG for substream `stream` of `master`.
pub fn substream_rng(master: u64, stream: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(substream_seed(master, stream))
}
