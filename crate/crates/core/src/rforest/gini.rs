use std::collections::HashMap;

use thiserror::Error;

use crate::example::TacticHash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GiniError {
    #[error("empty label set")]
    EmptyLabelSet,
    #[error("split leaves one side empty")]
    DegenerateSplit,
}

/// Label histogram with O(1) Gini impurity. Leaves hold few distinct
/// labels, so a flat vector is cheaper to copy than a map.
#[derive(Debug, Clone, Default)]
pub struct LabelCounts {
    counts: Vec<(TacticHash, u32)>,
    total: u64,
    sum_sq: u64,
}

impl LabelCounts {
    pub fn add(&mut self, label: TacticHash) {
        let i = match self.counts.iter().position(|(l, _)| *l == label) {
            Some(i) => i,
            None => {
                self.counts.push((label, 0));
                self.counts.len() - 1
            }
        };
        let c = &mut self.counts[i].1;
        self.sum_sq += 2 * *c as u64 + 1;
        *c += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// 1 − Σ p², or 0 for an empty histogram.
    pub fn gini(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        1.0 - self.sum_sq as f64 / (n * n)
    }
}

impl FromIterator<TacticHash> for LabelCounts {
    fn from_iter<I: IntoIterator<Item = TacticHash>>(iter: I) -> Self {
        let mut c = LabelCounts::default();
        iter.into_iter().for_each(|l| c.add(l));
        c
    }
}

/// Plain (non-persistent) histogram used while scoring split candidates.
#[derive(Debug, Default)]
pub(crate) struct Tally {
    counts: HashMap<TacticHash, u64>,
    total: u64,
}

impl Tally {
    pub(crate) fn add(&mut self, label: TacticHash) {
        *self.counts.entry(label).or_insert(0) += 1;
        self.total += 1;
    }

    pub(crate) fn total(&self) -> u64 {
        self.total
    }

    pub(crate) fn gini(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        let sum_sq: u64 = self.counts.values().map(|c| c * c).sum();
        1.0 - sum_sq as f64 / (n * n)
    }

    /// `self − other`, assuming `other` is a sub-multiset.
    pub(crate) fn minus(&self, other: &Tally) -> Tally {
        let mut counts = self.counts.clone();
        for (l, c) in &other.counts {
            if let Some(v) = counts.get_mut(l) {
                *v -= c;
                if *v == 0 {
                    counts.remove(l);
                }
            }
        }
        Tally { counts, total: self.total - other.total }
    }
}

pub fn gini_impurity(labels: &[TacticHash]) -> Result<f64, GiniError> {
    if labels.is_empty() {
        return Err(GiniError::EmptyLabelSet);
    }
    Ok(labels.iter().copied().collect::<LabelCounts>().gini())
}

pub(crate) fn gain_of(parent: &Tally, left: &Tally, right: &Tally) -> f64 {
    let n = parent.total() as f64;
    parent.gini() - left.total() as f64 / n * left.gini() - right.total() as f64 / n * right.gini()
}

/// Impurity reduction of splitting `parent` into `left` and `right`.
pub fn information_gain(
    parent: &[TacticHash],
    left: &[TacticHash],
    right: &[TacticHash],
) -> Result<f64, GiniError> {
    if left.is_empty() || right.is_empty() {
        return Err(GiniError::DegenerateSplit);
    }
    let tally = |xs: &[TacticHash]| {
        let mut t = Tally::default();
        xs.iter().for_each(|&l| t.add(l));
        t
    };
    Ok(gain_of(&tally(parent), &tally(left), &tally(right)))
}
