use std::fmt;

use crate::example::{FeatureId, FeatureVector};
use crate::rng::mix64;

/// Longest supported trie path.
pub const MAX_PATH_BITS: usize = 64;

/// A bit string of at most [`MAX_PATH_BITS`] bits; bit `d` is the branch
/// taken at depth `d` (false = left).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BitPath {
    bits: u64,
    len: u8,
}

impl BitPath {
    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut p = BitPath::default();
        for b in bits {
            assert!((p.len as usize) < MAX_PATH_BITS, "path longer than {MAX_PATH_BITS} bits");
            p.bits |= (b as u64) << p.len;
            p.len += 1;
        }
        p
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, depth: usize) -> bool {
        assert!(depth < self.len(), "bit {depth} out of range");
        self.bits >> depth & 1 == 1
    }

    /// Branch used when re-descending an example whose path is exhausted.
    pub(crate) fn bit_or_zero(&self, depth: usize) -> bool {
        depth < self.len() && self.bits >> depth & 1 == 1
    }

    pub fn to_vec(&self) -> Vec<bool> {
        (0..self.len()).map(|d| self.bit(d)).collect()
    }
}

impl fmt::Debug for BitPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in 0..self.len() {
            f.write_str(if self.bit(d) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// One hash bit per (trie, feature) pair.
pub trait FeatureBits {
    fn bit(&self, trie: usize, feature: FeatureId) -> bool;
}

/// Maps a feature vector to the path it follows in trie `trie`.
pub trait PathScheme: FeatureBits + Clone + Send + Sync + fmt::Debug {
    fn path_of(&self, trie: usize, features: &FeatureVector, max_depth: usize) -> BitPath;
}

/// Sorted multiset of per-feature bits, zeros first, cut to `max_depth`.
pub fn sorted_bit_path<H: FeatureBits + ?Sized>(
    hash: &H,
    trie: usize,
    features: &FeatureVector,
    max_depth: usize,
) -> BitPath {
    let ones = features.ids().filter(|&x| hash.bit(trie, x)).count();
    let zeros = features.len() - ones;
    let max_depth = max_depth.min(MAX_PATH_BITS);
    let z = zeros.min(max_depth);
    let o = ones.min(max_depth - z);
    BitPath::from_bits(std::iter::repeat_n(false, z).chain(std::iter::repeat_n(true, o)))
}

/// Seeded bit-hash family; trie `i` uses `h_i(x) = mix(seed, i, x) mod 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitHashFamily {
    pub seed: u64,
    pub arity: usize,
}

impl BitHashFamily {
    pub fn new(seed: u64, arity: usize) -> Self {
        BitHashFamily { seed, arity }
    }
}

impl FeatureBits for BitHashFamily {
    #[inline]
    fn bit(&self, trie: usize, feature: FeatureId) -> bool {
        let h = mix64(self.seed ^ mix64(((trie as u64) << 32) | feature as u64));
        h & 1 == 1
    }
}

impl PathScheme for BitHashFamily {
    fn path_of(&self, trie: usize, features: &FeatureVector, max_depth: usize) -> BitPath {
        sorted_bit_path(self, trie, features, max_depth)
    }
}
