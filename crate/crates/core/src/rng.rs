//! Seed derivation for independent, schedule-free random streams.
//!
//! Every stochastic task (a restart chain, a grid cell, a simulated data set)
//! owns a generator seeded from the master seed and the task's coordinates,
//! so results never depend on which worker thread runs the task.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LbmRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes a master seed with a path of task coordinates into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn rng_from_seed(seed: u64) -> LbmRng {
    ChaCha8Rng::seed_from_u64(seed)
}
