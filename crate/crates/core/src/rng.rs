//! Seeded, stream-addressable randomness.
//!
//! Every Monte-Carlo trial owns one [`RngHandle`]; the pair `(seed, stream)`
//! fully determines the draws, independent of thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngHandle {
    pub seed: u64,
    pub stream: u64,
}

impl RngHandle {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Derive a handle for a sub-stream keyed by `(a, b)`.
    ///
    /// Distinct keys map to distinct streams with overwhelming probability.
    pub fn derive(&self, a: u64, b: u64) -> Self {
        let mut x = self.stream ^ 0x9e37_79b9_7f4a_7c15;
        for v in [a, b] {
            x = splitmix(x ^ v);
        }
        Self { seed: self.seed, stream: x }
    }

    /// Instantiate the generator. Two calls on equal handles yield equal sequences.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
