//! Deterministic RNG streams keyed by (seed, index).
//!
//! Every randomized routine draws from a stream derived from a user seed and
//! a stable set of indices (individual index, bootstrap replicate, grid cell
//! coordinates). Streams are independent of thread count and scheduling, so
//! parallel runs reproduce serial runs bit for bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer; full-period mixer over u64.
#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Folds `parts` into `seed`, one mixing round per part.
#[inline]
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut s = splitmix64(seed);
    for &p in parts {
        s = splitmix64(s ^ splitmix64(p.wrapping_add(0xa076_1d64_78bd_642f)));
    }
    s
}

/// RNG stream for the given seed and index path.
#[inline]
pub fn stream(seed: u64, parts: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(mix(seed, parts))
}
