//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit RNG. Independent trials derive
//! their own stream from `(master_seed, trial, snr_index, mode)` so that they
//! can run in any order, or in parallel, and still produce identical bytes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Folds a list of words into one well-mixed seed.
pub fn derive_seed(master_seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(master_seed), |acc, &p| mix64(acc ^ mix64(p)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stream for one trial of one sweep point.
pub fn trial_rng(master_seed: u64, trial: u64, snr_index: u64, mode: u64) -> SimRng {
    rng_from_seed(derive_seed(master_seed, &[trial, snr_index, mode]))
}
