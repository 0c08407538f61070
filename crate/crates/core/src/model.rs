//! Uniform interface over the three predictors used by the evaluation
//! harness and the CLI.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::example::{Example, FeatureVector, TacticHash};
use crate::exec::Execution;
use crate::features::FeatureInterner;
use crate::lshf::LshForest;
use crate::rforest::RandomForest;
use crate::similarity::{rank_candidates, SimilarityKind};

/// A persistent online learner: `insert` returns a new version and leaves
/// the receiver usable.
pub trait OnlineModel: Clone + Send + Sync {
    fn name(&self) -> String;

    fn insert(&self, example: Arc<Example>) -> Self;

    /// Up to `k` tactics, best first. `stats` carries the document
    /// frequencies of everything inserted so far.
    fn predict(&self, query: &FeatureVector, stats: &FeatureInterner, k: usize) -> Vec<TacticHash>;
}

/// Exhaustive k-NN over every stored example (optionally only the most
/// recent `window`).
#[derive(Debug, Clone, Default)]
pub struct ExactKnn {
    examples: im::Vector<Arc<Example>>,
    pub kind: SimilarityKind,
    pub window: Option<usize>,
}

impl ExactKnn {
    pub fn new(kind: SimilarityKind, window: Option<usize>) -> Self {
        ExactKnn { examples: im::Vector::new(), kind, window }
    }

    pub fn examples(&self) -> &im::Vector<Arc<Example>> {
        &self.examples
    }

    pub fn predict_with(&self, exec: Execution, query: &FeatureVector, stats: &FeatureInterner, k: usize) -> Vec<TacticHash> {
        let start = self.window.map_or(0, |w| self.examples.len().saturating_sub(w));
        let pool: Vec<Arc<Example>> = self.examples.iter().skip(start).cloned().collect();
        let ranked = rank_candidates(&pool, query, self.kind, stats, exec);
        let mut seen = std::collections::HashSet::new();
        ranked
            .iter()
            .map(|(e, _)| e.tactic)
            .filter(|t| seen.insert(*t))
            .take(k)
            .collect()
    }
}

impl OnlineModel for ExactKnn {
    fn name(&self) -> String {
        "knn-exact".into()
    }

    fn insert(&self, example: Arc<Example>) -> Self {
        let mut next = self.clone();
        next.examples.push_back(example);
        next
    }

    fn predict(&self, query: &FeatureVector, stats: &FeatureInterner, k: usize) -> Vec<TacticHash> {
        self.predict_with(Execution::default(), query, stats, k)
    }
}

/// LSH forest plus its query-time settings.
#[derive(Debug, Clone, Default)]
pub struct LshfModel {
    pub forest: LshForest,
    /// Re-sort gathered candidates by this similarity; `None` keeps bucket order.
    pub resort: Option<SimilarityKind>,
}

impl OnlineModel for LshfModel {
    fn name(&self) -> String {
        "lshf".into()
    }

    fn insert(&self, example: Arc<Example>) -> Self {
        LshfModel { forest: self.forest.insert(example), resort: self.resort }
    }

    fn predict(&self, query: &FeatureVector, stats: &FeatureInterner, k: usize) -> Vec<TacticHash> {
        self.forest.predict(query, k, self.resort, stats)
    }
}

impl OnlineModel for RandomForest {
    fn name(&self) -> String {
        "rforest".into()
    }

    fn insert(&self, example: Arc<Example>) -> Self {
        RandomForest::insert(self, example)
    }

    fn predict(&self, query: &FeatureVector, _stats: &FeatureInterner, k: usize) -> Vec<TacticHash> {
        RandomForest::predict(self, query, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    KnnExact,
    Lshf,
    RForest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::KnnExact, ModelKind::Lshf, ModelKind::RForest];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::KnnExact => "knn-exact",
            ModelKind::Lshf => "lshf",
            ModelKind::RForest => "rforest",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "knn-exact" | "knn" => Ok(ModelKind::KnnExact),
            "lshf" => Ok(ModelKind::Lshf),
            "rforest" | "rf" => Ok(ModelKind::RForest),
            other => Err(format!("unknown model `{other}` (expected knn-exact, lshf or rforest)")),
        }
    }
}

/// Any of the three predictors, for code that picks one at run time.
#[derive(Debug, Clone)]
pub enum Model {
    KnnExact(ExactKnn),
    Lshf(LshfModel),
    RForest(RandomForest),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::KnnExact(_) => ModelKind::KnnExact,
            Model::Lshf(_) => ModelKind::Lshf,
            Model::RForest(_) => ModelKind::RForest,
        }
    }
}

impl OnlineModel for Model {
    fn name(&self) -> String {
        self.kind().to_string()
    }

    fn insert(&self, example: Arc<Example>) -> Self {
        match self {
            Model::KnnExact(m) => Model::KnnExact(m.insert(example)),
            Model::Lshf(m) => Model::Lshf(m.insert(example)),
            Model::RForest(m) => Model::RForest(OnlineModel::insert(m, example)),
        }
    }

    fn predict(&self, query: &FeatureVector, stats: &FeatureInterner, k: usize) -> Vec<TacticHash> {
        match self {
            Model::KnnExact(m) => m.predict(query, stats, k),
            Model::Lshf(m) => m.predict(query, stats, k),
            Model::RForest(m) => OnlineModel::predict(m, query, stats, k),
        }
    }
}
