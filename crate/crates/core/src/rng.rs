//! Seeded random streams.
//!
//! Every parallel task gets its own ChaCha stream keyed by the master seed
//! and a 64-bit task key, so the numbers a task sees never depend on which
//! worker ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

/// Stream for task `(major, minor)` under `seed`.
pub fn task_rng(seed: u64, major: u32, minor: u32) -> TaskRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((major as u64) << 32) | minor as u64);
    rng
}

/// Stream for a named stage (shuffles, negative sampling, ...) that must not
/// collide with the per-task streams of the same seed.
pub fn stage_rng(seed: u64, stage: u64) -> TaskRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(stage);
    rng
}
