use std::sync::Arc;

use thiserror::Error;

use crate::example::{FeatureId, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureClass {
    Original,
    Walk,
    Vertical,
    Structure,
}

impl FeatureClass {
    pub fn code(self) -> u8 {
        match self {
            FeatureClass::Original => 0,
            FeatureClass::Walk => 1,
            FeatureClass::Vertical => 2,
            FeatureClass::Structure => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => FeatureClass::Original,
            1 => FeatureClass::Walk,
            2 => FeatureClass::Vertical,
            3 => FeatureClass::Structure,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Hypothesis,
    Goal,
}

/// Identity of an interned feature. `origin` is `None` when premise/goal
/// separation is disabled and both spaces share one id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureKey {
    pub class: FeatureClass,
    pub origin: Option<Origin>,
    pub text: Arc<str>,
}

impl FeatureKey {
    pub fn new(class: FeatureClass, origin: Option<Origin>, text: &str) -> Self {
        FeatureKey { class, origin, text: Arc::from(text) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unknown feature id {0}")]
pub struct UnknownFeatureId(pub FeatureId);

/// Persistent bijection between feature keys and ids, plus the document
/// frequencies used for TfIdf weighting.
///
/// Cloning is O(1); every update leaves earlier clones untouched.
#[derive(Debug, Clone, Default)]
pub struct FeatureInterner {
    ids: im::HashMap<FeatureKey, FeatureId>,
    keys: im::Vector<FeatureKey>,
    doc_count: im::Vector<u32>,
    total_examples: u64,
}

impl FeatureInterner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `key`, issuing the next id if it is new.
    pub fn intern(&mut self, key: FeatureKey) -> FeatureId {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.keys.len() as FeatureId;
        self.keys.push_back(key.clone());
        self.doc_count.push_back(0);
        self.ids.insert(key, id);
        id
    }

    pub fn get(&self, key: &FeatureKey) -> Option<FeatureId> {
        self.ids.get(key).copied()
    }

    pub fn resolve(&self, id: FeatureId) -> Option<&FeatureKey> {
        self.keys.get(id as usize)
    }

    /// Number of ids issued so far.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn total_examples(&self) -> u64 {
        self.total_examples
    }

    /// Number of recorded examples containing `id`, or `None` for an id that
    /// was never issued.
    pub fn doc_count(&self, id: FeatureId) -> Option<u32> {
        self.doc_count.get(id as usize).copied()
    }

    /// Accounts for one more example in the database: bumps the total and
    /// the document frequency of each distinct feature in `fv`.
    pub fn record_example(&self, fv: &FeatureVector) -> Result<Self, UnknownFeatureId> {
        let mut next = self.clone();
        next.record_in_place(fv)?;
        Ok(next)
    }

    pub(crate) fn record_in_place(&mut self, fv: &FeatureVector) -> Result<(), UnknownFeatureId> {
        if let Some(bad) = fv.ids().find(|&id| id as usize >= self.keys.len()) {
            return Err(UnknownFeatureId(bad));
        }
        for id in fv.ids() {
            if let Some(c) = self.doc_count.get_mut(id as usize) {
                *c += 1;
            }
        }
        self.total_examples += 1;
        Ok(())
    }

    pub fn keys(&self) -> impl Iterator<Item = &FeatureKey> {
        self.keys.iter()
    }

    pub(crate) fn from_parts(keys: Vec<FeatureKey>, doc_count: Vec<u32>, total_examples: u64) -> Self {
        let ids = keys.iter().enumerate().map(|(i, k)| (k.clone(), i as FeatureId)).collect();
        FeatureInterner {
            ids,
            keys: keys.into_iter().collect(),
            doc_count: doc_count.into_iter().collect(),
            total_examples,
        }
    }

    pub(crate) fn doc_counts(&self) -> impl Iterator<Item = u32> + '_ {
        self.doc_count.iter().copied()
    }
}
