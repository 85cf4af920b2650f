//! Counter-style random streams.
//!
//! A stream is the pair `(seed, index)`. The generator is ChaCha8 keyed by
//! `seed` (expanded with `SeedableRng::seed_from_u64`) with its 64-bit stream
//! counter set to `index`, so distinct indices address disjoint keystreams of
//! the same cipher key. Gaussian variates use the ziggurat sampler of
//! `rand_distr::StandardNormal`.
//!
//! Studies derive per-trial streams with [`RngStream::substream`], which packs
//! a phase tag into the top 16 bits of the index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub index: u64,
}

const PHASE_SHIFT: u32 = 48;

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.index);
        rng
    }

    /// Stream for trial `k` of phase `phase` of a study rooted at `self.seed`.
    ///
    /// The root index is ignored; only the seed is inherited.
    pub fn substream(&self, phase: u16, k: u64) -> RngStream {
        debug_assert!(k < (1u64 << PHASE_SHIFT));
        RngStream::new(self.seed, ((phase as u64) << PHASE_SHIFT) | k)
    }
}

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}
