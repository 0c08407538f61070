use std::sync::Arc;

use rand::Rng;

use crate::example::{Example, FeatureVector, TacticHash};
use crate::rng::SplitRng;

use super::gini::LabelCounts;
use super::split::{generate_split_rule, Side, SplitRule};

struct Cell {
    example: Arc<Example>,
    next: Option<Arc<Cell>>,
}

/// Persistent list of leaf examples. Appending shares the whole existing
/// list, so a leaf update costs O(1) however many examples it holds.
#[derive(Clone, Default)]
pub struct ExampleList {
    head: Option<Arc<Cell>>,
    len: usize,
}

impl ExampleList {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, example: Arc<Example>) {
        self.head = Some(Arc::new(Cell { example, next: self.head.take() }));
        self.len += 1;
    }

    /// Examples from newest to oldest.
    pub fn iter_newest(&self) -> impl Iterator<Item = &Arc<Example>> {
        std::iter::successors(self.head.as_deref(), |c| c.next.as_deref()).map(|c| &c.example)
    }

    /// Examples in insertion order.
    pub fn to_vec(&self) -> Vec<Arc<Example>> {
        let mut v: Vec<_> = self.iter_newest().cloned().collect();
        v.reverse();
        v
    }
}

impl FromIterator<Arc<Example>> for ExampleList {
    fn from_iter<I: IntoIterator<Item = Arc<Example>>>(iter: I) -> Self {
        let mut list = ExampleList::default();
        iter.into_iter().for_each(|e| list.push(e));
        list
    }
}

impl Drop for ExampleList {
    // iterative, so long lists cannot overflow the stack
    fn drop(&mut self) {
        let mut next = self.head.take();
        while let Some(cell) = next {
            next = match Arc::try_unwrap(cell) {
                Ok(mut c) => c.next.take(),
                Err(_) => None,
            };
        }
    }
}

impl std::fmt::Debug for ExampleList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.to_vec().iter().map(|e| e.seq)).finish()
    }
}

/// Persistent decision tree.
#[derive(Debug, Clone)]
pub enum DecisionTree {
    Leaf {
        label: TacticHash,
        examples: ExampleList,
        counts: LabelCounts,
    },
    Node {
        rule: SplitRule,
        left: Arc<DecisionTree>,
        right: Arc<DecisionTree>,
    },
}

impl DecisionTree {
    /// A fresh tree: one leaf labeled by, and holding, `example`.
    pub fn leaf_from(example: Arc<Example>) -> Self {
        let label = example.tactic;
        DecisionTree::leaf(label, std::iter::once(example).collect())
    }

    pub fn leaf(label: TacticHash, examples: ExampleList) -> Self {
        let counts = examples.iter_newest().map(|e| e.tactic).collect();
        DecisionTree::Leaf { label, examples, counts }
    }

    pub fn n_examples(&self) -> usize {
        match self {
            DecisionTree::Leaf { examples, .. } => examples.len(),
            DecisionTree::Node { left, right, .. } => left.n_examples() + right.n_examples(),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 1,
            DecisionTree::Node { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Node { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Seq of the first stored example that violates a rule on its way to
    /// its leaf, if any.
    pub fn find_misrouted(&self) -> Option<u64> {
        fn go(t: &DecisionTree, trail: &mut Vec<(SplitRule, Side)>) -> Option<u64> {
            match t {
                DecisionTree::Leaf { examples, .. } => examples
                    .iter_newest()
                    .find(|e| trail.iter().any(|(r, s)| r.side(&e.features) != *s))
                    .map(|e| e.seq),
                DecisionTree::Node { rule, left, right } => {
                    trail.push((*rule, Side::Left));
                    let found = go(left, trail);
                    trail.pop();
                    if found.is_some() {
                        return found;
                    }
                    trail.push((*rule, Side::Right));
                    let found = go(right, trail);
                    trail.pop();
                    found
                }
            }
        }
        go(self, &mut Vec::new())
    }
}

/// Leaf update knobs shared by every tree of a forest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafPolicy {
    pub impurity_threshold: f64,
    /// When set, a full leaf drops its oldest example before appending.
    pub max_leaf_examples: Option<usize>,
}

impl Default for LeafPolicy {
    fn default() -> Self {
        LeafPolicy { impurity_threshold: super::DEFAULT_IMPURITY, max_leaf_examples: None }
    }
}

/// Routes `example` to its leaf, stores it there, and splits the leaf when
/// its impurity exceeds the threshold and a distinguishing feature exists.
pub fn add_example_to_tree(
    tree: &DecisionTree,
    example: &Arc<Example>,
    policy: &LeafPolicy,
    rng: &mut SplitRng,
) -> DecisionTree {
    match tree {
        DecisionTree::Node { rule, left, right } => match rule.side(&example.features) {
            Side::Left => DecisionTree::Node {
                rule: *rule,
                left: Arc::new(add_example_to_tree(left, example, policy, rng)),
                right: Arc::clone(right),
            },
            Side::Right => DecisionTree::Node {
                rule: *rule,
                left: Arc::clone(left),
                right: Arc::new(add_example_to_tree(right, example, policy, rng)),
            },
        },
        DecisionTree::Leaf { label, examples, counts } => {
            let mut examples = examples.clone();
            let mut counts = counts.clone();
            if policy.max_leaf_examples.is_some_and(|cap| examples.len() >= cap) {
                examples = examples.to_vec().into_iter().skip(1).collect();
                counts = examples.iter_newest().map(|e| e.tactic).collect();
            }
            examples.push(Arc::clone(example));
            counts.add(example.tactic);
            if counts.gini() > policy.impurity_threshold {
                let slice = examples.to_vec();
                if let Ok(rule) = generate_split_rule(&slice, rng) {
                    let (l, r): (Vec<_>, Vec<_>) =
                        slice.into_iter().partition(|e| rule.side(&e.features) == Side::Left);
                    let l_label = l[rng.gen_range(0..l.len())].tactic;
                    let r_label = r[rng.gen_range(0..r.len())].tactic;
                    return DecisionTree::Node {
                        rule,
                        left: Arc::new(DecisionTree::leaf(l_label, l.into_iter().collect())),
                        right: Arc::new(DecisionTree::leaf(r_label, r.into_iter().collect())),
                    };
                }
            }
            DecisionTree::Leaf { label: *label, examples, counts }
        }
    }
}

pub fn predict_tree(tree: &DecisionTree, features: &FeatureVector) -> TacticHash {
    let mut t = tree;
    loop {
        match t {
            DecisionTree::Leaf { label, .. } => return *label,
            DecisionTree::Node { rule, left, right } => {
                t = match rule.side(features) {
                    Side::Left => left,
                    Side::Right => right,
                }
            }
        }
    }
}
