//! Feature vectors, tactic labels and training examples.

use std::fmt;
use std::hash::Hasher;

use fnv::FnvHasher;

/// Interned feature identifier.
pub type FeatureId = u32;

/// 64-bit FNV-1a hash of a tactic string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TacticHash(pub u64);

impl TacticHash {
    pub fn of(tactic: &str) -> Self {
        let mut h = FnvHasher::default();
        h.write(tactic.as_bytes());
        TacticHash(h.finish())
    }

    pub fn parse_hex(s: &str) -> Option<Self> {
        u64::from_str_radix(s, 16).ok().map(TacticHash)
    }
}

impl fmt::Display for TacticHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Multiset of feature ids, stored sorted by id with positive counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    entries: Vec<(FeatureId, u32)>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from `(id, count)` pairs; duplicate ids are summed and
    /// zero counts dropped.
    pub fn from_counts(pairs: impl IntoIterator<Item = (FeatureId, u32)>) -> Self {
        let mut entries: Vec<(FeatureId, u32)> = pairs.into_iter().filter(|p| p.1 > 0).collect();
        entries.sort_unstable_by_key(|p| p.0);
        entries.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        FeatureVector { entries }
    }

    /// One occurrence per listed id.
    pub fn from_ids(ids: impl IntoIterator<Item = FeatureId>) -> Self {
        Self::from_counts(ids.into_iter().map(|id| (id, 1)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (FeatureId, u32)> + '_ {
        self.entries.iter().copied()
    }

    /// Distinct ids in ascending order.
    pub fn ids(&self) -> impl ExactSizeIterator<Item = FeatureId> + '_ {
        self.entries.iter().map(|p| p.0)
    }

    pub fn contains(&self, id: FeatureId) -> bool {
        self.entries.binary_search_by_key(&id, |p| p.0).is_ok()
    }

    pub fn count(&self, id: FeatureId) -> u32 {
        match self.entries.binary_search_by_key(&id, |p| p.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0,
        }
    }

    pub fn total_count(&self) -> u64 {
        self.entries.iter().map(|p| p.1 as u64).sum()
    }

    /// Same ids, every count set to 1.
    pub fn to_presence(&self) -> Self {
        FeatureVector { entries: self.entries.iter().map(|&(id, _)| (id, 1)).collect() }
    }

    /// Distinct ids of `self` missing from `other`.
    pub fn difference(&self, other: &FeatureVector) -> Vec<FeatureId> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() {
            if j >= b.len() || a[i].0 < b[j].0 {
                out.push(a[i].0);
                i += 1;
            } else if a[i].0 > b[j].0 {
                j += 1;
            } else {
                i += 1;
                j += 1;
            }
        }
        out
    }
}

/// A featurized proof state labeled with the tactic applied to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub features: FeatureVector,
    pub tactic: TacticHash,
    /// Chronological position in the corpus; doubles as the example identity.
    pub seq: u64,
}

impl Example {
    pub fn new(features: FeatureVector, tactic: TacticHash, seq: u64) -> Self {
        Example { features, tactic, seq }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a_reference_values() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(TacticHash::of("").0, 0xcbf29ce484222325);
        assert_eq!(TacticHash::of("a").0, 0xaf63dc4c8601ec8c);
        assert_eq!(TacticHash::of("foobar").0, 0x85944171f73967e8);
        assert_eq!(TacticHash::of("a").to_string(), "af63dc4c8601ec8c");
        assert_eq!(TacticHash::parse_hex("af63dc4c8601ec8c"), Some(TacticHash::of("a")));
    }

    #[test]
    fn from_counts_merges_and_sorts() {
        let fv = FeatureVector::from_counts([(5, 1), (2, 2), (5, 3), (9, 0)]);
        assert_eq!(fv.iter().collect::<Vec<_>>(), vec![(2, 2), (5, 4)]);
        assert!(fv.contains(5) && !fv.contains(9));
        assert_eq!(fv.count(2), 2);
        assert_eq!(fv.total_count(), 6);
    }

    #[test]
    fn difference_is_one_sided() {
        let a = FeatureVector::from_ids([1, 2, 3]);
        let b = FeatureVector::from_ids([2, 4]);
        assert_eq!(a.difference(&b), vec![1, 3]);
        assert_eq!(b.difference(&a), vec![4]);
        assert!(a.difference(&a).is_empty());
    }
}
