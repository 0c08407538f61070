//! Splittable counter-based random numbers.
//!
//! Models are persistent values, so their randomness cannot live in a
//! mutable global generator. [`SplitRng`] is a small `Copy` value: models
//! store it, fork it deterministically per insert and per tree, and the
//! same seed always yields the same stream regardless of thread layout.

use rand::{Error, RngCore};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitRng {
    key: u64,
    counter: u64,
}

impl SplitRng {
    pub fn new(seed: u64) -> Self {
        SplitRng { key: mix64(seed ^ GOLDEN), counter: 0 }
    }

    /// Derives an independent stream tagged by `tag`. Does not advance `self`.
    pub fn fork(&self, tag: u64) -> Self {
        SplitRng {
            key: mix64(self.key ^ mix64(tag.wrapping_add(GOLDEN).wrapping_mul(GOLDEN))),
            counter: 0,
        }
    }

    /// Raw state, for snapshots.
    pub fn state(&self) -> (u64, u64) {
        (self.key, self.counter)
    }

    pub fn from_state(key: u64, counter: u64) -> Self {
        SplitRng { key, counter }
    }
}

impl RngCore for SplitRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}
