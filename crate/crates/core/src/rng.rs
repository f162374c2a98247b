//! Deterministic seed derivation for Monte Carlo trials.
//!
//! Every random stream is keyed by a `(master_seed, index..)` tuple and
//! mixed through SplitMix64, so a trial draws the same numbers whether it
//! runs first, last, or on another thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type TrafficRng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and a path of indices.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &k| splitmix64(acc ^ splitmix64(k.wrapping_add(GOLDEN))))
}

/// Purpose lanes, so the path generator and the sensing channel never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    Path = 0,
    Sensing = 1,
}

/// Seeds for one Monte Carlo trial.
pub fn trial_seed(master: u64, point: u64, trial: u64, lane: Lane) -> u64 {
    derive_seed(master, &[point, trial, lane as u64])
}

pub fn rng_from_seed(seed: u64) -> TrafficRng {
    TrafficRng::seed_from_u64(seed)
}
