//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit `u64` seed. Independent
//! consumers (population members, annealing moves) draw from separate ChaCha
//! streams of the same key so their output does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream used by [`crate::qap::random_layout`].
pub const LAYOUT_STREAM: u64 = 0;
/// Stream driving the proposal/acceptance sequence of simulated annealing.
pub const ANNEALING_STREAM: u64 = 1;
/// Stream driving the generational loop of the genetic solver.
pub const GENERATION_STREAM: u64 = 2;
/// First stream of the per-member initial population streams.
pub const MEMBER_STREAM_BASE: u64 = 1 << 32;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
