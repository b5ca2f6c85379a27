//! Seeded random streams. Every stochastic choice goes through
//! [`stream`], so a base seed plus a task index fully determines it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent generator for task `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Child seed for task `index`, for handing to code that takes a plain seed.
pub fn split_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, index).next_u64()
}
