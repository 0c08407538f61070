//! Persistent locality sensitive hashing forest for approximate k-NN.
//!
//! Every example is inserted into each of `n` tries along a per-trie bit
//! path derived from its features. A query descends all tries at once along
//! its own paths and, while unwinding, gathers the subtries it stepped away
//! from, deepest first, until it holds at least `k` distinct examples.

mod hash;
mod trie;

use std::collections::HashSet;
use std::sync::Arc;

pub use hash::{sorted_bit_path, BitHashFamily, BitPath, FeatureBits, PathScheme, MAX_PATH_BITS};
pub use trie::{Entry, Trie};

use crate::example::{Example, FeatureVector, TacticHash};
use crate::exec::Execution;
use crate::features::FeatureInterner;
use crate::similarity::{rank_candidates, rank_tactics, SimilarityKind};

pub const DEFAULT_TRIES: usize = 11;
pub const DEFAULT_MAX_DEPTH: usize = 20;
pub const DEFAULT_SEED: u64 = 0x7ac7_1c1a;

#[derive(Debug, Clone)]
pub struct LshForest<H: PathScheme = BitHashFamily> {
    tries: Vec<Arc<Trie>>,
    scheme: H,
    max_depth: usize,
    examples: im::Vector<Arc<Example>>,
}

impl LshForest<BitHashFamily> {
    pub fn new(seed: u64, tries: usize, max_depth: usize) -> Self {
        LshForest::with_scheme(BitHashFamily::new(seed, tries), tries, max_depth)
    }

    pub fn seed(&self) -> u64 {
        self.scheme.seed
    }
}

impl Default for LshForest<BitHashFamily> {
    fn default() -> Self {
        LshForest::new(DEFAULT_SEED, DEFAULT_TRIES, DEFAULT_MAX_DEPTH)
    }
}

impl<H: PathScheme> LshForest<H> {
    pub fn with_scheme(scheme: H, tries: usize, max_depth: usize) -> Self {
        assert!(tries >= 1, "forest needs at least one trie");
        assert!(
            (1..=MAX_PATH_BITS).contains(&max_depth),
            "max_depth must be within 1..={MAX_PATH_BITS}"
        );
        LshForest {
            tries: (0..tries).map(|_| Arc::new(Trie::default())).collect(),
            scheme,
            max_depth,
            examples: im::Vector::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn n_tries(&self) -> usize {
        self.tries.len()
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn tries(&self) -> &[Arc<Trie>] {
        &self.tries
    }

    /// Examples in insertion order.
    pub fn examples(&self) -> &im::Vector<Arc<Example>> {
        &self.examples
    }

    pub fn path_of(&self, trie: usize, features: &FeatureVector) -> BitPath {
        self.scheme.path_of(trie, features, self.max_depth)
    }

    pub fn insert(&self, example: Arc<Example>) -> Self {
        self.insert_with(Execution::default(), example)
    }

    /// Returns a new forest containing `example`; `self` stays valid.
    pub fn insert_with(&self, exec: Execution, example: Arc<Example>) -> Self {
        let tries = exec.map_indexed(&self.tries, |i, t| {
            let path = self.path_of(i, &example.features);
            Arc::new(t.insert(Entry { example: Arc::clone(&example), path }, 0))
        });
        let mut examples = self.examples.clone();
        examples.push_back(example);
        LshForest { tries, scheme: self.scheme.clone(), max_depth: self.max_depth, examples }
    }

    /// Candidate neighbors of `features`, nearest buckets first, without
    /// duplicates. At least `k` are returned when the forest holds that many.
    /// With `resort`, candidates are reordered by true similarity (ties by
    /// recency); truncation to `k` is left to the caller.
    pub fn query(
        &self,
        features: &FeatureVector,
        k: usize,
        resort: Option<SimilarityKind>,
        interner: &FeatureInterner,
    ) -> Vec<Arc<Example>> {
        assert!(k >= 1, "k must be positive");
        let paths: Vec<BitPath> = (0..self.tries.len()).map(|i| self.path_of(i, features)).collect();
        let level: Vec<(&Trie, usize)> = self.tries.iter().enumerate().map(|(i, t)| (&**t, i)).collect();
        let mut gathered = Gathered::default();
        descend(level, &paths, 0, k, &mut gathered);
        match resort {
            None => gathered.items,
            Some(kind) => rank_candidates(&gathered.items, features, kind, interner, Execution::Sequential)
                .into_iter()
                .map(|(e, _)| e)
                .collect(),
        }
    }

    /// Up to `k` distinct tactics from the gathered neighbors, nearest first.
    pub fn predict(
        &self,
        features: &FeatureVector,
        k: usize,
        resort: Option<SimilarityKind>,
        interner: &FeatureInterner,
    ) -> Vec<TacticHash> {
        if self.is_empty() {
            return Vec::new();
        }
        let neighbors = self.query(features, k, resort, interner);
        let mut tactics = rank_tactics(neighbors.iter().map(|e| &**e));
        tactics.truncate(k);
        tactics
    }
}

#[derive(Default)]
struct Gathered {
    items: Vec<Arc<Example>>,
    seen: HashSet<u64>,
}

impl Gathered {
    fn take(&mut self, t: &Trie) {
        t.collect(&mut |e| {
            if self.seen.insert(e.example.seq) {
                self.items.push(Arc::clone(&e.example));
            }
        });
    }
}

/// Tries whose next path bit exists follow it (relevant); the sibling they
/// skip, or the whole trie if it is a leaf or the path is spent, is kept
/// aside (irrelevant) and gathered on the way back up if still short of `k`.
fn descend(level: Vec<(&Trie, usize)>, paths: &[BitPath], depth: usize, k: usize, out: &mut Gathered) {
    let mut relevant = Vec::with_capacity(level.len());
    let mut irrelevant = Vec::with_capacity(level.len());
    for (t, i) in level {
        match t {
            Trie::Node(l, r) if depth < paths[i].len() => {
                if paths[i].bit(depth) {
                    relevant.push((&**r, i));
                    irrelevant.push(&**l);
                } else {
                    relevant.push((&**l, i));
                    irrelevant.push(&**r);
                }
            }
            _ => irrelevant.push(t),
        }
    }
    if !relevant.is_empty() {
        descend(relevant, paths, depth + 1, k, out);
    }
    if out.items.len() < k {
        for t in irrelevant {
            out.take(t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::FeatureId;

    fn ex(ids: &[FeatureId], tactic: u64, seq: u64) -> Arc<Example> {
        Arc::new(Example::new(FeatureVector::from_ids(ids.iter().copied()), TacticHash(tactic), seq))
    }

    #[test]
    fn empty_forest_predicts_nothing() {
        let f = LshForest::default();
        assert!(f.predict(&FeatureVector::from_ids([1]), 10, None, &FeatureInterner::new()).is_empty());
    }

    #[test]
    fn insert_into_empty_forest_makes_leaves() {
        let f = LshForest::default().insert(ex(&[1, 2, 3], 1, 0));
        assert_eq!(f.n_tries(), 11);
        for t in f.tries() {
            assert!(matches!(&**t, Trie::Leaf(b) if b.len() == 1));
        }
    }

    #[test]
    fn single_example_always_returned() {
        let f = LshForest::default().insert(ex(&[1, 2, 3], 7, 0));
        let got = f.query(&FeatureVector::from_ids([9]), 3, None, &FeatureInterner::new());
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].seq, 0);
    }

    #[test]
    fn predict_dedups_tactics() {
        let mut f = LshForest::new(1, 3, 20);
        for (seq, t) in [1u64, 2, 1].iter().enumerate() {
            f = f.insert(ex(&[seq as u32, 50], *t, seq as u64));
        }
        let got = f.predict(&FeatureVector::from_ids([0, 50]), 3, Some(SimilarityKind::Plain), &FeatureInterner::new());
        assert_eq!(got.len(), 2);
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(sorted, vec![TacticHash(1), TacticHash(2)]);
        let got1 = f.predict(&FeatureVector::from_ids([0, 50]), 1, Some(SimilarityKind::Plain), &FeatureInterner::new());
        assert_eq!(got1.len(), 1);
    }

    #[test]
    fn one_tactic_everywhere_gives_singleton() {
        let mut f = LshForest::default();
        for s in 0..20u64 {
            f = f.insert(ex(&[s as u32, s as u32 + 1], 5, s));
        }
        assert_eq!(f.predict(&FeatureVector::from_ids([3]), 10, None, &FeatureInterner::new()), vec![TacticHash(5)]);
    }

    #[test]
    fn completeness_and_no_duplicates() {
        let mut f = LshForest::new(9, 5, 8);
        for s in 0..200u64 {
            let ids: Vec<u32> = (0..(s % 13 + 1) as u32).map(|j| (s as u32 * 7 + j * 3) % 97).collect();
            f = f.insert(ex(&ids, s % 4, s));
        }
        let got = f.query(&FeatureVector::from_ids([1, 2, 3]), 500, None, &FeatureInterner::new());
        let mut seqs: Vec<u64> = got.iter().map(|e| e.seq).collect();
        seqs.sort();
        assert_eq!(seqs, (0..200).collect::<Vec<_>>());
        for t in f.tries() {
            assert_eq!(t.len(), 200);
            assert!(t.depth() <= 8);
            assert_eq!(t.find_misplaced(), None);
        }
    }
}
