//! Set similarity over feature vectors and the exhaustive k-NN baseline.
//!
//! Both measures look only at which features are present; counts are
//! ignored. The exhaustive search doubles as the reference that the LSH
//! forest is checked against.

use std::cmp::Ordering;
use std::sync::Arc;

use thiserror::Error;

use crate::example::{Example, FeatureId, FeatureVector, TacticHash};
use crate::exec::Execution;
use crate::features::FeatureInterner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SimilarityKind {
    Plain,
    #[default]
    TfIdfWeighted,
}

impl std::str::FromStr for SimilarityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" | "jaccard" => Ok(SimilarityKind::Plain),
            "tfidf" | "weighted" => Ok(SimilarityKind::TfIdfWeighted),
            other => Err(format!("unknown similarity `{other}` (expected plain or tfidf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TfIdfError {
    #[error("unknown feature id {0}")]
    UnknownFeatureId(FeatureId),
    #[error("feature {0} does not occur in the database")]
    UnseenFeature(FeatureId),
}

/// Walks the sorted id lists of `a` and `b`, calling `both` for shared ids
/// and `one` for ids present on one side only.
#[inline]
fn merge(a: &FeatureVector, b: &FeatureVector, mut both: impl FnMut(FeatureId), mut one: impl FnMut(FeatureId)) {
    let mut ia = a.ids().peekable();
    let mut ib = b.ids().peekable();
    loop {
        match (ia.peek().copied(), ib.peek().copied()) {
            (Some(x), Some(y)) => match x.cmp(&y) {
                Ordering::Equal => {
                    both(x);
                    ia.next();
                    ib.next();
                }
                Ordering::Less => {
                    one(x);
                    ia.next();
                }
                Ordering::Greater => {
                    one(y);
                    ib.next();
                }
            },
            (Some(x), None) => {
                one(x);
                ia.next();
            }
            (None, Some(y)) => {
                one(y);
                ib.next();
            }
            (None, None) => break,
        }
    }
}

/// |a ∩ b| / |a ∪ b| over distinct ids; two empty vectors score 1.
pub fn jaccard(a: &FeatureVector, b: &FeatureVector) -> f64 {
    let (mut inter, mut only) = (0usize, 0usize);
    merge(a, b, |_| inter += 1, |_| only += 1);
    let union = inter + only;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// ln(N / df(x)).
pub fn tfidf(interner: &FeatureInterner, x: FeatureId) -> Result<f64, TfIdfError> {
    match interner.doc_count(x) {
        None => Err(TfIdfError::UnknownFeatureId(x)),
        Some(0) => Err(TfIdfError::UnseenFeature(x)),
        Some(df) => Ok((interner.total_examples() as f64 / df as f64).ln()),
    }
}

#[inline]
fn weight_or_zero(interner: &FeatureInterner, ln_n: f64, x: FeatureId) -> f64 {
    match interner.doc_count(x) {
        Some(df) if df > 0 => ln_n - (df as f64).ln(),
        _ => 0.0,
    }
}

/// TfIdf-weighted Jaccard. Features that do not occur in the database carry
/// no weight; a zero-weight union scores 0.
pub fn weighted_jaccard(interner: &FeatureInterner, a: &FeatureVector, b: &FeatureVector) -> f64 {
    let ln_n = (interner.total_examples().max(1) as f64).ln();
    let (mut inter, mut only) = (0.0f64, 0.0f64);
    merge(a, b, |x| inter += weight_or_zero(interner, ln_n, x), |x| only += weight_or_zero(interner, ln_n, x));
    let union = inter + only;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

pub fn similarity(kind: SimilarityKind, interner: &FeatureInterner, a: &FeatureVector, b: &FeatureVector) -> f64 {
    match kind {
        SimilarityKind::Plain => jaccard(a, b),
        SimilarityKind::TfIdfWeighted => weighted_jaccard(interner, a, b),
    }
}

/// Descending score, then most recent first.
pub(crate) fn neighbor_order(a: &(Arc<Example>, f64), b: &(Arc<Example>, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| b.0.seq.cmp(&a.0.seq))
}

/// Scores and orders `candidates` against `query`.
pub fn rank_candidates(
    candidates: &[Arc<Example>],
    query: &FeatureVector,
    kind: SimilarityKind,
    interner: &FeatureInterner,
    exec: Execution,
) -> Vec<(Arc<Example>, f64)> {
    let mut scored = exec.map(candidates, |e| (Arc::clone(e), similarity(kind, interner, &e.features, query)));
    scored.sort_by(neighbor_order);
    scored
}

/// Persistent example store with the statistics needed for weighting.
#[derive(Debug, Clone, Default)]
pub struct ExampleDb {
    examples: im::Vector<Arc<Example>>,
    interner: FeatureInterner,
}

impl ExampleDb {
    /// `interner` must have no recorded examples yet; ids may already be issued.
    pub fn new(interner: FeatureInterner) -> Self {
        assert_eq!(interner.total_examples(), 0, "interner already holds examples");
        ExampleDb { examples: im::Vector::new(), interner }
    }

    pub fn insert(&self, example: Arc<Example>) -> Result<Self, crate::features::UnknownFeatureId> {
        let interner = self.interner.record_example(&example.features)?;
        let mut examples = self.examples.clone();
        examples.push_back(example);
        Ok(ExampleDb { examples, interner })
    }

    pub fn examples(&self) -> &im::Vector<Arc<Example>> {
        &self.examples
    }

    pub fn interner(&self) -> &FeatureInterner {
        &self.interner
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// The `k` examples most similar to `q`, best first, ties broken by higher
/// `seq`.
pub fn knn_exact(db: &ExampleDb, q: &FeatureVector, k: usize, kind: SimilarityKind) -> Vec<(Arc<Example>, f64)> {
    knn_exact_with(Execution::default(), db, q, k, kind)
}

pub fn knn_exact_with(
    exec: Execution,
    db: &ExampleDb,
    q: &FeatureVector,
    k: usize,
    kind: SimilarityKind,
) -> Vec<(Arc<Example>, f64)> {
    assert!(k >= 1, "k must be positive");
    let all: Vec<Arc<Example>> = db.examples.iter().cloned().collect();
    let mut ranked = rank_candidates(&all, q, kind, &db.interner, exec);
    ranked.truncate(k);
    ranked
}

/// Distinct tactics in order of first appearance.
pub fn rank_tactics<'a>(neighbors: impl IntoIterator<Item = &'a Example>) -> Vec<TacticHash> {
    let mut seen = std::collections::HashSet::new();
    neighbors.into_iter().map(|e| e.tactic).filter(|t| seen.insert(*t)).collect()
}
