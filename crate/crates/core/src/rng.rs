//! Deterministic RNG stream derivation.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` whose seed is a
//! mix of the user seed and a tuple of stream identifiers (tree index, fold,
//! family, replicate...). Streams are independent of scheduling order, so
//! parallel and serial runs agree bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: &[u64]) -> u64 {
    stream
        .iter()
        .fold(splitmix64(seed), |acc, &s| splitmix64(acc ^ splitmix64(s)))
}

pub fn stream(seed: u64, ids: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, ids))
}

/// Stable 64-bit key for a text identifier (FNV-1a, then mixed).
pub fn text_key(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(h)
}

// Stream tags. Arbitrary but fixed.
pub const TAG_FOLDS: u64 = 0xF01D;
pub const TAG_MODEL: u64 = 0x30DE;
pub const TAG_INNER_CV: u64 = 0x1C5;
pub const TAG_BOOTSTRAP: u64 = 0xB007;
pub const TAG_SYNTH: u64 = 0x5EED;
