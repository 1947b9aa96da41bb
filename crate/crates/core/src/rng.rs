//! Named random substreams derived from one master seed.
//!
//! Each consumer draws from its own ChaCha stream, so e.g. changing the
//! coding coefficients never perturbs the channel erasure pattern. Feedback
//! and no-feedback runs built from the same seed see identical state
//! sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Library = 1,
    Placement = 2,
    Channel = 3,
    Coding = 4,
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

    pub fn stream(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(stream as u64);
        rng
    }

    /// Seed tree for Monte Carlo replica `index`.
    pub fn replica(&self, index: u64) -> SeedTree {
        SeedTree::new(splitmix64(
            self.master ^ splitmix64(index.wrapping_add(0x5EED)),
        ))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
