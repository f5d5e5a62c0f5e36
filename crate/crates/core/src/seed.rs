//! Seed derivation. Every random draw in an experiment comes from a ChaCha8
//! stream keyed by a SplitMix64 mix of (master seed, input index, trial).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `trial` (1-based) of input `input`.
pub fn trial_seed(master: u64, input: u64, trial: u64) -> u64 {
    let a = splitmix64(master);
    let b = splitmix64(a ^ input.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ trial.wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn trial_rng(master: u64, input: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, input, trial))
}
