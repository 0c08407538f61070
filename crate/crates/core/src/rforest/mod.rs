//! Online random forest.
//!
//! Examples are routed down every tree to a leaf and stored there; a leaf
//! whose Gini impurity rises above the threshold is split on a randomly
//! sampled, information-gain-maximizing feature-presence rule. The forest
//! grows one single-leaf tree at a time, with probability `1/n`, until it
//! holds `n_max` trees. Prediction is a vote over the trees' leaf labels.

mod gini;
mod split;
mod tree;

use std::sync::Arc;

use rand::Rng;

pub use gini::{gini_impurity, information_gain, GiniError, LabelCounts};
pub use split::{candidate_count, generate_split_rule, NoSplittingFeature, Side, SplitRule};
pub use tree::{add_example_to_tree, predict_tree, DecisionTree, ExampleList, LeafPolicy};

use crate::example::{Example, FeatureVector, TacticHash};
use crate::exec::Execution;
use crate::rng::SplitRng;

pub const DEFAULT_MAX_TREES: usize = 320;
pub const DEFAULT_IMPURITY: f64 = 0.5;
pub const DEFAULT_SEED: u64 = 0x5eed_f0e5;

const GROWTH_TAG: u64 = u64::MAX;

#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<Arc<DecisionTree>>,
    max_trees: usize,
    policy: LeafPolicy,
    rng: SplitRng,
    inserts: u64,
}

impl Default for RandomForest {
    fn default() -> Self {
        RandomForest::new(DEFAULT_MAX_TREES, DEFAULT_IMPURITY, DEFAULT_SEED)
    }
}

impl RandomForest {
    pub fn new(max_trees: usize, impurity_threshold: f64, seed: u64) -> Self {
        assert!(max_trees >= 1, "max_trees must be positive");
        assert!((0.0..=1.0).contains(&impurity_threshold), "impurity threshold must lie in [0, 1]");
        RandomForest {
            trees: Vec::new(),
            max_trees,
            policy: LeafPolicy { impurity_threshold, max_leaf_examples: None },
            rng: SplitRng::new(seed),
            inserts: 0,
        }
    }

    /// Caps leaf buckets; off by default.
    pub fn with_leaf_cap(mut self, cap: Option<usize>) -> Self {
        self.policy.max_leaf_examples = cap;
        self
    }

    pub fn trees(&self) -> &[Arc<DecisionTree>] {
        &self.trees
    }

    pub fn max_trees(&self) -> usize {
        self.max_trees
    }

    pub fn policy(&self) -> LeafPolicy {
        self.policy
    }

    pub fn inserts(&self) -> u64 {
        self.inserts
    }

    pub fn insert(&self, example: Arc<Example>) -> Self {
        self.insert_with(Execution::default(), example)
    }

    /// Adds `example` to every existing tree and possibly starts a new tree
    /// from it. Returns a new forest; `self` is unchanged.
    pub fn insert_with(&self, exec: Execution, example: Arc<Example>) -> Self {
        let step = self.rng.fork(self.inserts);
        let mut trees = exec.map_indexed(&self.trees, |j, t| {
            let mut rng = step.fork(j as u64);
            Arc::new(add_example_to_tree(t, &example, &self.policy, &mut rng))
        });
        let n = self.trees.len();
        let grow = n == 0 || (n < self.max_trees && step.fork(GROWTH_TAG).gen_range(1..=n) == 1);
        if grow {
            trees.push(Arc::new(DecisionTree::leaf_from(example)));
        }
        RandomForest {
            trees,
            max_trees: self.max_trees,
            policy: self.policy,
            rng: self.rng,
            inserts: self.inserts + 1,
        }
    }

    pub fn predict(&self, features: &FeatureVector, k: usize) -> Vec<TacticHash> {
        self.predict_with(Execution::default(), features, k)
    }

    /// Tactics ranked by vote count, ties by first vote in tree order.
    pub fn predict_with(&self, exec: Execution, features: &FeatureVector, k: usize) -> Vec<TacticHash> {
        let votes = exec.map(&self.trees, |t| predict_tree(t, features));
        let mut tally: Vec<(TacticHash, usize)> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for v in votes {
            let i = *index.entry(v).or_insert_with(|| {
                tally.push((v, 0));
                tally.len() - 1
            });
            tally[i].1 += 1;
        }
        // stable sort keeps first-vote order among equal counts
        tally.sort_by_key(|t| std::cmp::Reverse(t.1));
        tally.into_iter().take(k).map(|(t, _)| t).collect()
    }

    pub(crate) fn from_parts(
        trees: Vec<Arc<DecisionTree>>,
        max_trees: usize,
        policy: LeafPolicy,
        rng: SplitRng,
        inserts: u64,
    ) -> Self {
        RandomForest { trees, max_trees, policy, rng, inserts }
    }

    pub(crate) fn rng(&self) -> SplitRng {
        self.rng
    }
}
