//! Seed derivation.
//!
//! Every random decision in a run is drawn from a ChaCha8 stream whose seed is
//! derived from the master seed plus a small key (replicate, step, channel).
//! Streams are therefore independent of how many draws earlier decisions
//! consumed, which keeps engine-on and engine-off runs aligned.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a seed with a sequence of keys into a new seed.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(mix64(seed), |acc, &k| mix64(acc ^ mix64(k)))
}

pub fn stream(seed: u64, keys: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, keys))
}

/// Seed used by replicate `index` of an experiment with master seed `seed`.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, &[0x5245_504c, index])
}
