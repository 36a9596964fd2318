//! Seeded random streams.
//!
//! Every randomized routine takes an explicit seed. Parallel work cells get
//! their own ChaCha stream derived from `(seed, outer index, inner index)`,
//! so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for work cell `(outer, inner)` under `seed`.
pub fn stream(seed: u64, outer: u32, inner: u32) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((outer as u64) << 32) | inner as u64);
    rng
}
