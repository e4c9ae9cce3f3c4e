//! Seeded randomness.
//!
//! Every stochastic operation in the crate draws from [`SeededRng`], a
//! ChaCha8 stream generator whose output is fixed for a given seed across
//! platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Creates the generator for `seed`.
pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 output function (Steele, Lea & Flood).
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of instance `index` from a master seed.
///
/// `mix(master, index) = splitmix64(master + (index + 1) * 0x9e3779b97f4a7c15)`
/// with wrapping arithmetic, i.e. the `(index + 1)`-th output of a SplitMix64
/// stream started at `master`. The result depends only on the pair, so
/// instances can be evaluated in any order.
pub fn mix(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}
