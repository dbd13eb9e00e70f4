//! Seeded, stream-separated random number generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent sources drawn from one [`RngSeed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    /// Event times and node selection.
    Clock = 0,
    /// Spin resampling coin flips.
    Spins = 1,
    /// Initial configurations.
    Init = 2,
    /// Anything else (graph generation, coupling signs, ...).
    Aux = 3,
}

const SUBSTREAMS: u64 = 4;

/// A 64-bit seed plus a stream id. The same pair always reproduces the same
/// generator output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        RngSeed { stream, ..self }
    }

    pub fn rng(self, which: Substream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(
            self.stream
                .wrapping_mul(SUBSTREAMS)
                .wrapping_add(which as u64),
        );
        rng
    }
}
