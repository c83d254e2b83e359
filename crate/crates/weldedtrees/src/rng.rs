//! Seedable, splittable random number generation.
//!
//! All experiments draw from [`SplitRng`], a ChaCha8 stream seeded from a
//! 64-bit value. Child generators are derived by hashing the parent seed with
//! a child index (SplitMix64 finalizer), so any trial can be re-run in
//! isolation from its `(root seed, trial index)` pair and results do not
//! depend on scheduling order.

use std::convert::Infallible;

use rand::{Rng as _, SeedableRng, TryRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; mixes a 64-bit value into a well-distributed one.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based generator (ChaCha8) with deterministic splitting.
#[derive(Clone, Debug)]
pub struct SplitRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SplitRng {
    /// Generator for the given root seed.
    pub fn seeded(seed: u64) -> Self {
        SplitRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent child generator for lane `index`.
    ///
    /// Children of distinct indices, and children of distinct parents, use
    /// unrelated ChaCha streams. Splitting does not advance `self`.
    pub fn split(&self, index: u64) -> Self {
        let child = splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x517C_C1B7_2722_0A95)));
        SplitRng::seeded(child)
    }

    /// Seed this generator was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Next raw 64-bit draw (handy for deriving instance seeds without
    /// importing the rand traits).
    pub fn draw_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

impl TryRng for SplitRng {
    type Error = Infallible;

    fn try_next_u32(&mut self) -> Result<u32, Infallible> {
        self.inner.try_next_u32()
    }

    fn try_next_u64(&mut self) -> Result<u64, Infallible> {
        self.inner.try_next_u64()
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Infallible> {
        self.inner.try_fill_bytes(dest)
    }
}
