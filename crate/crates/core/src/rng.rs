//! Seeded generators.
//!
//! Every stochastic routine takes a `u64` seed and builds its own ChaCha8
//! stream from it. Independent jobs under one master seed get their seeds
//! from [`split_seed`], which hashes `(master, stream)` with the SplitMix64
//! finalizer. Gaussian variates come from `rand_distr::StandardNormal`
//! (ziggurat), so results are reproducible within this implementation only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream` of `master`.
pub fn split_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_add(1)))
}
