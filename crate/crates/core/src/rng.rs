//! Named, independent random streams derived from one master seed.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! `(master seed, stream id)`. Streams are counter-based, so the order in
//! which agents or strategies draw never changes what any other consumer
//! sees.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// What a stream is used for. Stream ids are disjoint across purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Theta,
    Init,
    Observation,
    Adversary,
    AgentNoise(usize),
    /// Free-form streams for tests and tools.
    Aux(u32),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Theta => 1,
            Stream::Init => 2,
            Stream::Observation => 3,
            Stream::Adversary => 4,
            Stream::AgentNoise(i) => (1 << 32) | i as u64,
            Stream::Aux(i) => (2 << 32) | u64::from(i),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedTree {
    master: u64,
}

impl SeedTree {
    pub fn new(master: u64) -> Self {
        SeedTree { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&self, which: Stream) -> StreamRng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.master);
        rng.set_stream(which.id());
        rng
    }
}
