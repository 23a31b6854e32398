//! Counter-based random substreams.
//!
//! Every (trial, role) pair gets its own ChaCha stream derived from one seed,
//! so trial `k` draws the same numbers no matter how trials are scheduled
//! across threads, and the threshold never shares a stream with the values.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is used for within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Threshold = 0,
    Values = 1,
    Ties = 2,
}

const ROLES: u64 = 4;

/// Root of a family of substreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Streams {
    seed: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, trial: u64, role: Role) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial.wrapping_mul(ROLES).wrapping_add(role as u64));
        rng
    }
}
