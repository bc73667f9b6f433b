//! Seed derivation for deterministic, order-independent random streams.
//!
//! Every randomized step in the crate draws from a ChaCha stream derived
//! from a 64-bit seed. Per-user streams are derived by mixing the global
//! seed with the user's internal index, so obfuscating users in parallel
//! (or in any order) yields the same draws as a sequential pass.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; a cheap, well-distributed 64-bit mixer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Combine a seed with a subordinate index into a fresh 64-bit seed.
pub fn derive(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed) ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// RNG stream for a global seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed))
}

/// Dedicated RNG stream for one user under a global seed.
pub fn user_stream(seed: u64, user: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, user as u64))
}
