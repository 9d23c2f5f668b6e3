//! Seeded random streams.
//!
//! Every stochastic component draws from [`GenRng`] (ChaCha with 8 rounds).
//! A record or batch item gets its own stream via [`stream_rng`], so
//! generating item `k` never depends on how many items were generated before
//! it or on which worker produced it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type GenRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> GenRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed for parallel worker `worker` given a base seed.
pub fn worker_seed(base_seed: u64, worker: u64) -> u64 {
    base_seed ^ worker
}
