use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::example::{Example, FeatureId};
use crate::rng::SplitRng;

use super::gini::{gain_of, Tally};

/// Sends an example left when it contains `feature`, right otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitRule {
    pub feature: FeatureId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl SplitRule {
    pub fn side(&self, example: &crate::example::FeatureVector) -> Side {
        if example.contains(self.feature) {
            Side::Left
        } else {
            Side::Right
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no feature distinguishes the examples")]
pub struct NoSplittingFeature;

const DRAW_RETRIES: usize = 16;

/// Number of candidate features drawn for `n` examples.
pub fn candidate_count(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

/// Draws `floor(sqrt(n))` candidate features, each taken from the feature
/// difference of two random examples, and returns the one with the highest
/// information gain (smaller id on ties).
pub fn generate_split_rule(examples: &[Arc<Example>], rng: &mut SplitRng) -> Result<SplitRule, NoSplittingFeature> {
    let n = examples.len();
    if n < 2 {
        return Err(NoSplittingFeature);
    }
    let mut candidates: Vec<FeatureId> = Vec::new();
    for _ in 0..candidate_count(n) {
        for _ in 0..DRAW_RETRIES {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let diff = examples[i].features.difference(&examples[j].features);
            if !diff.is_empty() {
                candidates.push(diff[rng.gen_range(0..diff.len())]);
                break;
            }
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        return Err(NoSplittingFeature);
    }

    let mut parent = Tally::default();
    examples.iter().for_each(|e| parent.add(e.tactic));
    let mut best: Option<(f64, FeatureId)> = None;
    for &feature in &candidates {
        let mut left = Tally::default();
        for e in examples.iter().filter(|e| e.features.contains(feature)) {
            left.add(e.tactic);
        }
        let right = parent.minus(&left);
        let gain = gain_of(&parent, &left, &right);
        // candidates ascend, so strict > keeps the smallest id on ties
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, feature));
        }
    }
    Ok(SplitRule { feature: best.expect("non-empty candidates").1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::{FeatureVector, TacticHash};

    fn ex(ids: &[FeatureId], t: u64, seq: u64) -> Arc<Example> {
        Arc::new(Example::new(FeatureVector::from_ids(ids.iter().copied()), TacticHash(t), seq))
    }

    #[test]
    fn two_examples_split_on_either_difference() {
        let es = vec![ex(&[0], 1, 0), ex(&[1], 2, 1)];
        for seed in 0..20 {
            let rule = generate_split_rule(&es, &mut SplitRng::new(seed)).unwrap();
            assert!(rule.feature == 0 || rule.feature == 1);
        }
    }

    #[test]
    fn identical_features_cannot_split() {
        let es = vec![ex(&[0, 1], 1, 0), ex(&[0, 1], 2, 1), ex(&[0, 1], 3, 2)];
        assert_eq!(generate_split_rule(&es, &mut SplitRng::new(0)), Err(NoSplittingFeature));
        assert_eq!(generate_split_rule(&es[..1], &mut SplitRng::new(0)), Err(NoSplittingFeature));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let es: Vec<_> = (0..30u64).map(|s| ex(&[(s % 7) as u32, 10 + (s % 3) as u32], s % 3, s)).collect();
        let a = generate_split_rule(&es, &mut SplitRng::new(5));
        let b = generate_split_rule(&es, &mut SplitRng::new(5));
        assert_eq!(a, b);
    }

    #[test]
    fn picks_most_informative_feature() {
        // feature 10 separates labels perfectly; 0..4 are noise
        let es: Vec<_> = (0..64u64)
            .map(|s| {
                let label = s % 2;
                let mut ids = vec![(s % 5) as u32];
                if label == 0 {
                    ids.push(10);
                }
                ex(&ids, label, s)
            })
            .collect();
        let mut hits = 0;
        for seed in 0..20 {
            if generate_split_rule(&es, &mut SplitRng::new(seed)).unwrap().feature == 10 {
                hits += 1;
            }
        }
        assert!(hits >= 10, "{hits}");
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(candidate_count(1), 1);
        assert_eq!(candidate_count(3), 1);
        assert_eq!(candidate_count(4), 2);
        assert_eq!(candidate_count(99), 9);
    }
}
