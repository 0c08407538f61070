use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;

use crate::corpus::LabeledExampleRecord;
use crate::example::{Example, TacticHash};
use crate::exec::Execution;
use crate::features::{featurize_into, FeatureConfig, FeatureInterner};
use crate::model::OnlineModel;
use crate::rng::SplitRng;

use super::{CaseTable, EvalError, EvalReport};

/// Number of predictions requested per case; top-1 and top-10 are read off it.
pub const EVAL_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum TestSelector {
    /// Hold out whole modules.
    Modules(BTreeSet<String>),
    /// Hold out the chronologically last fraction of every module.
    LastFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub test: TestSelector,
    /// When set, this fraction of the training records is also held out at
    /// random and scored with models trained on the remainder.
    pub validation_fraction: Option<f64>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn modules<I: IntoIterator<Item = S>, S: Into<String>>(modules: I) -> Self {
        SplitSpec {
            test: TestSelector::Modules(modules.into_iter().map(Into::into).collect()),
            validation_fraction: None,
            seed: 0,
        }
    }

    fn test_mask(&self, corpus: &[LabeledExampleRecord]) -> Vec<bool> {
        match &self.test {
            TestSelector::Modules(set) => corpus.iter().map(|r| set.contains(&r.module_path)).collect(),
            TestSelector::LastFraction(frac) => {
                let mut by_module: HashMap<&str, Vec<usize>> = HashMap::new();
                for (i, r) in corpus.iter().enumerate() {
                    by_module.entry(&r.module_path).or_default().push(i);
                }
                let mut mask = vec![false; corpus.len()];
                for idx in by_module.values_mut() {
                    idx.sort_by_key(|&i| corpus[i].seq);
                    let n_test = (idx.len() as f64 * frac).round() as usize;
                    for &i in &idx[idx.len() - n_test.min(idx.len())..] {
                        mask[i] = true;
                    }
                }
                mask
            }
        }
    }
}

fn to_example(r: &LabeledExampleRecord, cfg: &FeatureConfig, interner: &mut FeatureInterner) -> Arc<Example> {
    Arc::new(Example::new(featurize_into(&r.state, cfg, interner), r.tactic_hash(), r.seq))
}

/// Streams `records` into every model, returning the trained models and the
/// feature statistics they were trained with.
fn train<M: OnlineModel>(
    records: &[&LabeledExampleRecord],
    cfg: &FeatureConfig,
    mut interner: FeatureInterner,
    mut models: Vec<M>,
    exec: Execution,
) -> (Vec<M>, FeatureInterner) {
    for r in records {
        let e = to_example(r, cfg, &mut interner);
        interner.record_in_place(&e.features).expect("ids issued by this interner");
        models = exec.map_owned(models, |_, m| m.insert(Arc::clone(&e)));
    }
    (models, interner)
}

fn score_held_out<M: OnlineModel>(
    trained: &[M],
    held_out: &[&LabeledExampleRecord],
    cfg: &FeatureConfig,
    mut interner: FeatureInterner,
    exec: Execution,
) -> CaseTable {
    // Stats stay at their training values; held-out ids are issued but unrecorded.
    let stats = interner.clone();
    let examples: Vec<Arc<Example>> = held_out.iter().map(|r| to_example(r, cfg, &mut interner)).collect();
    let predictions = trained
        .iter()
        .map(|m| (m.name(), exec.map(&examples, |e| m.predict(&e.features, &stats, EVAL_K))))
        .collect();
    CaseTable {
        seqs: held_out.iter().map(|r| r.seq).collect(),
        modules: held_out.iter().map(|r| r.module_path.clone()).collect(),
        truths: held_out.iter().map(|r| r.tactic_hash()).collect(),
        predictions,
    }
}

/// Trains each model on the non-test records in corpus order, then scores
/// every test record.
pub fn split_eval<M: OnlineModel>(
    corpus: &[LabeledExampleRecord],
    spec: &SplitSpec,
    cfg: &FeatureConfig,
    models: Vec<M>,
    exec: Execution,
) -> Result<EvalReport, EvalError> {
    let mask = spec.test_mask(corpus);
    let (test, train_set): (Vec<_>, Vec<_>) = corpus.iter().zip(&mask).partition(|(_, t)| **t);
    let test: Vec<&LabeledExampleRecord> = test.into_iter().map(|(r, _)| r).collect();
    let train_set: Vec<&LabeledExampleRecord> = train_set.into_iter().map(|(r, _)| r).collect();
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }

    let validation = match spec.validation_fraction {
        Some(frac) if !train_set.is_empty() => {
            let mut idx: Vec<usize> = (0..train_set.len()).collect();
            idx.shuffle(&mut SplitRng::new(spec.seed));
            let n_val = ((train_set.len() as f64 * frac).round() as usize).clamp(1, train_set.len());
            let val: BTreeSet<usize> = idx[..n_val].iter().copied().collect();
            let fit: Vec<_> = (0..train_set.len()).filter(|i| !val.contains(i)).map(|i| train_set[i]).collect();
            let held: Vec<_> = val.iter().map(|&i| train_set[i]).collect();
            let (trained, interner) = train(&fit, cfg, FeatureInterner::new(), models.clone(), exec);
            Some(score_held_out(&trained, &held, cfg, interner, exec).scores()?)
        }
        _ => None,
    };

    let (trained, interner) = train(&train_set, cfg, FeatureInterner::new(), models, exec);
    let mut report = score_held_out(&trained, &test, cfg, interner, exec).report("split")?;
    report.validation = validation;
    Ok(report)
}

/// Scores every record with models trained on strictly earlier records,
/// then learns it. The harness owns all updates, so no model ever sees a
/// record before it is scored.
pub fn chrono_eval<M: OnlineModel>(
    corpus: &[LabeledExampleRecord],
    cfg: &FeatureConfig,
    models: Vec<M>,
    exec: Execution,
) -> Result<EvalReport, EvalError> {
    let mut order: Vec<&LabeledExampleRecord> = corpus.iter().collect();
    order.sort_by_key(|r| r.seq);
    let mut interner = FeatureInterner::new();
    let names: Vec<String> = models.iter().map(|m| m.name()).collect();
    let mut models = models;
    let mut preds: Vec<Vec<Vec<TacticHash>>> = vec![Vec::with_capacity(order.len()); models.len()];
    for r in &order {
        let e = to_example(r, cfg, &mut interner);
        let predicted = exec.map(&models, |m| m.predict(&e.features, &interner, EVAL_K));
        for (p, out) in predicted.into_iter().zip(preds.iter_mut()) {
            out.push(p);
        }
        interner.record_in_place(&e.features).expect("ids issued by this interner");
        models = exec.map_owned(models, |_, m| m.insert(Arc::clone(&e)));
    }
    CaseTable {
        seqs: order.iter().map(|r| r.seq).collect(),
        modules: order.iter().map(|r| r.module_path.clone()).collect(),
        truths: order.iter().map(|r| r.tactic_hash()).collect(),
        predictions: names.into_iter().zip(preds).collect(),
    }
    .report("chrono")
}
