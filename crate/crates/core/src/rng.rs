//! Seeded random streams.
//!
//! Every experiment derives all of its randomness from one `u64` seed. Each
//! consumer gets its own ChaCha stream so that, for example, changing how many
//! exploration draws an agent makes never perturbs the channel realization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream identifiers for the consumers of a single experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Channel draws of the training environment.
    TrainChannel = 0,
    /// Exploration and replay sampling.
    Agent = 1,
    /// Network weight initialization.
    Init = 2,
    /// Channel draws of held-out evaluation rollouts.
    EvalChannel = 3,
    /// Randomized evaluation policies.
    EvalPolicy = 4,
}

pub fn stream(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
