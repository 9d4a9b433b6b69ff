//! Deterministic random-stream derivation.
//!
//! Every volume, object, and analysis realization owns an independent RNG
//! stream derived by hashing (root seed, tag) with splitmix64. Streams are
//! therefore insensitive to scheduling: volume i draws the same values no
//! matter how many threads run or in which order volumes complete.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer (Steele, Lea, Flood 2014). Public-domain constants.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed from a root seed and a stream tag.
///
/// Tags are namespaced by callers (volume index, object index, realization
/// index, ...). Two distinct (root, tag) pairs collide only with the ~2^-64
/// probability inherent to a 64-bit hash.
#[inline]
pub fn derive_seed(root: u64, tag: u64) -> u64 {
    mix64(root ^ mix64(tag))
}

/// Seedable, portable RNG used for all sampling.
///
/// ChaCha8 is explicitly reproducible across platforms and rand_chacha
/// versions, which the byte-identical-output contract depends on.
pub type Stream = ChaCha8Rng;

/// Opens the RNG stream for a derived seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}
