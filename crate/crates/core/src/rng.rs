//! Seeded random-number streams.
//!
//! Every stochastic routine in the crate draws from a counter-based stream
//! cipher generator keyed by a master seed plus a stream index. Distinct
//! stream indices give statistically independent sequences, and a given
//! (seed, stream) pair always reproduces the same sequence no matter how
//! many other streams were consumed, which is what makes ensemble runs
//! safe to parallelize.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for the given master seed and stream index.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Derive a child seed from a master seed and a tag (realization index,
/// command id, ...). SplitMix64 finalizer; stable across platforms.
pub fn derive_seed(master_seed: u64, tag: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
