//! Seed derivation for reproducible sweeps.
//!
//! Every stochastic task draws from its own ChaCha stream whose seed is a
//! pure function of the master seed and a task counter, so results never
//! depend on how tasks are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DlabRng = ChaCha8Rng;

/// SplitMix64 finalizer applied to `seed` advanced by `index` golden-ratio steps.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> DlabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for task `index` under master `seed`.
pub fn task_rng(seed: u64, index: u64) -> DlabRng {
    rng_from_seed(derive_seed(seed, index))
}
