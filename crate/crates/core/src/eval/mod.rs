//! Evaluation protocols, metrics and the training-row exporter.

mod export;
mod harness;

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

pub use export::{export_binary_dataset, ExportConfig, ExportReport, NegativeMode, DEFAULT_BUCKETS};
pub use harness::{chrono_eval, split_eval, SplitSpec, TestSelector, EVAL_K};

use crate::example::TacticHash;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("predictions and truths differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("test selector matched no records")]
    EmptyTestSet,
}

/// Fraction of cases whose truth appears in the first `k` predictions.
pub fn topk_accuracy(predictions: &[Vec<TacticHash>], truths: &[TacticHash], k: usize) -> Result<f64, EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), truths.len()));
    }
    if truths.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p.iter().take(k).any(|x| x == *t))
        .count();
    Ok(hits as f64 / truths.len() as f64)
}

/// Fraction of cases where at least one of two learners succeeded.
pub fn union_metric(a: &[bool], b: &[bool]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::EmptyEvaluation);
    }
    Ok(a.iter().zip(b).filter(|(x, y)| **x || **y).count() as f64 / a.len() as f64)
}

/// 1-based position of `truth` in `predictions`.
pub fn rank_of(predictions: &[TacticHash], truth: TacticHash) -> Option<usize> {
    predictions.iter().position(|p| *p == truth).map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Score {
    pub top1: f64,
    pub top10: f64,
    pub n_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub name: String,
    pub top1: f64,
    pub top10: f64,
    pub n_cases: usize,
    pub modules: BTreeMap<String, Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionScore {
    pub models: [String; 2],
    pub top1: f64,
    pub top10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub seq: u64,
    pub model: String,
    #[serde(skip)]
    pub module: String,
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub protocol: String,
    pub models: Vec<ModelScore>,
    pub union: Vec<UnionScore>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<Vec<ModelScore>>,
    #[serde(skip)]
    pub cases: Vec<CaseResult>,
}

impl EvalReport {
    pub fn model(&self, name: &str) -> Option<&ModelScore> {
        self.models.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `seq,model,rank_of_truth`, rank 0 when the truth was not predicted.
    pub fn write_cases_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "seq,model,rank_of_truth")?;
        for c in &self.cases {
            writeln!(w, "{},{},{}", c.seq, c.model, c.rank.unwrap_or(0))?;
        }
        Ok(())
    }
}

/// Per-model predictions for the same ordered list of cases.
pub(crate) struct CaseTable {
    pub seqs: Vec<u64>,
    pub modules: Vec<String>,
    pub truths: Vec<TacticHash>,
    pub predictions: Vec<(String, Vec<Vec<TacticHash>>)>,
}

impl CaseTable {
    fn hits(&self, preds: &[Vec<TacticHash>], k: usize) -> Vec<bool> {
        preds
            .iter()
            .zip(&self.truths)
            .map(|(p, t)| p.iter().take(k).any(|x| x == t))
            .collect()
    }

    fn score(&self, name: &str, preds: &[Vec<TacticHash>]) -> Result<ModelScore, EvalError> {
        let top1 = topk_accuracy(preds, &self.truths, 1)?;
        let top10 = topk_accuracy(preds, &self.truths, EVAL_K)?;
        let mut groups: BTreeMap<String, (Vec<Vec<TacticHash>>, Vec<TacticHash>)> = BTreeMap::new();
        for ((p, t), m) in preds.iter().zip(&self.truths).zip(&self.modules) {
            let g = groups.entry(m.clone()).or_default();
            g.0.push(p.clone());
            g.1.push(*t);
        }
        let modules = groups
            .into_iter()
            .map(|(m, (p, t))| {
                let s = Score { top1: topk_accuracy(&p, &t, 1)?, top10: topk_accuracy(&p, &t, EVAL_K)?, n_cases: t.len() };
                Ok((m, s))
            })
            .collect::<Result<_, EvalError>>()?;
        Ok(ModelScore { name: name.to_string(), top1, top10, n_cases: self.truths.len(), modules })
    }

    pub fn scores(&self) -> Result<Vec<ModelScore>, EvalError> {
        self.predictions.iter().map(|(n, p)| self.score(n, p)).collect()
    }

    pub fn report(&self, protocol: &str) -> Result<EvalReport, EvalError> {
        let models = self.scores()?;
        let mut union = Vec::new();
        for i in 0..self.predictions.len() {
            for j in i + 1..self.predictions.len() {
                let (a, pa) = &self.predictions[i];
                let (b, pb) = &self.predictions[j];
                union.push(UnionScore {
                    models: [a.clone(), b.clone()],
                    top1: union_metric(&self.hits(pa, 1), &self.hits(pb, 1))?,
                    top10: union_metric(&self.hits(pa, EVAL_K), &self.hits(pb, EVAL_K))?,
                });
            }
        }
        let mut cases = Vec::new();
        for (name, preds) in &self.predictions {
            for (i, p) in preds.iter().enumerate() {
                cases.push(CaseResult {
                    seq: self.seqs[i],
                    model: name.clone(),
                    module: self.modules[i].clone(),
                    rank: rank_of(p, self.truths[i]),
                });
            }
        }
        Ok(EvalReport { protocol: protocol.to_string(), models, union, validation: None, cases })
    }
}
