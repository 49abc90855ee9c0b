//! Seed derivation. Every trial, and every per-node substream inside a trial,
//! gets its own ChaCha8 stream derived from one master seed, so trials can
//! run on any number of workers and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of substream `index` of `seed`:
/// `splitmix64(splitmix64(seed) ^ splitmix64(index + 0x5851f42d4c957f2d))`.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Stream for trial `trial` under master seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> SimRng {
    SimRng::seed_from_u64(split_seed(seed, trial))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
