use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::sync::Arc;

use rand::seq::index::sample;
use serde::Serialize;

use crate::corpus::LabeledExampleRecord;
use crate::example::{Example, FeatureVector, TacticHash};
use crate::features::{featurize_into, FeatureConfig, FeatureInterner};
use crate::model::OnlineModel;
use crate::rng::SplitRng;

pub const DEFAULT_BUCKETS: u32 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegativeMode {
    /// Near misses taken from the k-NN ranking.
    Strong,
    /// Uniform over every tactic in the corpus.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportConfig {
    pub ratio: usize,
    pub mode: NegativeMode,
    pub buckets: u32,
    pub seed: u64,
    /// Size of the k-NN ranking strong negatives are drawn from.
    pub candidates: usize,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig { ratio: 1, mode: NegativeMode::Strong, buckets: DEFAULT_BUCKETS, seed: 0, candidates: 100 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExportReport {
    pub states: usize,
    pub positive_rows: usize,
    pub negative_rows: usize,
    /// Seqs of states that got fewer than `ratio` negatives.
    pub insufficient_negatives: Vec<u64>,
}

fn state_block(f: &FeatureVector, buckets: u32) -> BTreeMap<u32, u64> {
    let mut out = BTreeMap::new();
    for (id, c) in f.iter() {
        *out.entry(id % buckets).or_insert(0) += u64::from(c);
    }
    out
}

fn write_row<W: Write + ?Sized>(out: &mut W, label: u8, seq: u64, state: &BTreeMap<u32, u64>, tactic: TacticHash, buckets: u32) -> io::Result<()> {
    write!(out, "{label} qid:{seq}")?;
    for (i, v) in state {
        write!(out, " {i}:{v}")?;
    }
    let t = u64::from(buckets) + tactic.0 % u64::from(buckets);
    writeln!(out, " {t}:1")
}

/// Writes one positive row and up to `ratio` negative rows per record.
///
/// Records are processed in seq order; in strong mode `knn` predicts each
/// state before it learns the record.
pub fn export_binary_dataset<M: OnlineModel, W: Write + ?Sized>(
    corpus: &[LabeledExampleRecord],
    features: &FeatureConfig,
    knn: M,
    cfg: &ExportConfig,
    out: &mut W,
) -> io::Result<ExportReport> {
    assert!(cfg.buckets > 0, "bucket count must be positive");
    let mut order: Vec<&LabeledExampleRecord> = corpus.iter().collect();
    order.sort_by_key(|r| r.seq);
    let tactic_space: Vec<TacticHash> = corpus.iter().map(|r| r.tactic_hash()).collect::<BTreeSet<_>>().into_iter().collect();

    let mut interner = FeatureInterner::new();
    let mut knn = knn;
    let root = SplitRng::new(cfg.seed);
    let mut report = ExportReport::default();
    for r in order {
        let truth = r.tactic_hash();
        let fv = featurize_into(&r.state, features, &mut interner);
        let pool: Vec<TacticHash> = match cfg.mode {
            NegativeMode::Strong => knn.predict(&fv, &interner, cfg.candidates),
            NegativeMode::Random => tactic_space.clone(),
        }
        .into_iter()
        .filter(|t| *t != truth)
        .collect();

        let mut rng = root.fork(r.seq);
        let n_neg = cfg.ratio.min(pool.len());
        let mut picks = sample(&mut rng, pool.len(), n_neg).into_vec();
        picks.sort_unstable();

        let state = state_block(&fv, cfg.buckets);
        write_row(out, 1, r.seq, &state, truth, cfg.buckets)?;
        for i in picks {
            write_row(out, 0, r.seq, &state, pool[i], cfg.buckets)?;
        }
        report.states += 1;
        report.positive_rows += 1;
        report.negative_rows += n_neg;
        if n_neg < cfg.ratio {
            report.insufficient_negatives.push(r.seq);
        }

        if cfg.mode == NegativeMode::Strong {
            interner.record_in_place(&fv).expect("ids issued by this interner");
            knn = knn.insert(Arc::new(Example::new(fv, truth, r.seq)));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExactKnn;
    use crate::similarity::SimilarityKind;
    use crate::term::{parse_term, ProofState};

    fn rec(goal: &str, tactic: &str, seq: u64) -> LabeledExampleRecord {
        LabeledExampleRecord {
            state: ProofState::new(vec![], parse_term(goal).unwrap()).unwrap(),
            tactic: tactic.into(),
            seq,
            module_path: "M".into(),
        }
    }

    fn knn() -> ExactKnn {
        ExactKnn::new(SimilarityKind::Plain, None)
    }

    fn run(corpus: &[LabeledExampleRecord], cfg: &ExportConfig) -> (String, ExportReport) {
        let mut buf = Vec::new();
        let rep = export_binary_dataset(corpus, &FeatureConfig::ALL, knn(), cfg, &mut buf).unwrap();
        (String::from_utf8(buf).unwrap(), rep)
    }

    fn corpus() -> Vec<LabeledExampleRecord> {
        let tactics = ["a", "b", "c", "d"];
        (0..12).map(|s| rec(&format!("(f (g x{}) y)", s % 3), tactics[s as usize % 4], s)).collect()
    }

    #[test]
    fn ratio_two_gives_three_rows_per_state() {
        let cfg = ExportConfig { ratio: 2, mode: NegativeMode::Random, ..Default::default() };
        let (text, rep) = run(&corpus(), &cfg);
        assert_eq!(text.lines().count(), 36);
        assert_eq!(rep.negative_rows, 24);
        assert!(rep.insufficient_negatives.is_empty());
    }

    #[test]
    fn single_tactic_has_no_negatives() {
        let c: Vec<_> = (0..3).map(|s| rec("x", "auto", s)).collect();
        let cfg = ExportConfig { ratio: 1, mode: NegativeMode::Random, ..Default::default() };
        let (text, rep) = run(&c, &cfg);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.starts_with("1 ")));
        assert_eq!(rep.insufficient_negatives, vec![0, 1, 2]);
    }

    #[test]
    fn strong_negatives_come_from_earlier_predictions() {
        let cfg = ExportConfig { ratio: 3, mode: NegativeMode::Strong, ..Default::default() };
        let (text, rep) = run(&corpus(), &cfg);
        // Record 0 has no history and record 1 has one other tactic.
        assert_eq!(rep.insufficient_negatives[..2], [0, 1]);
        let first: Vec<&str> = text.lines().filter(|l| l.contains("qid:0 ")).collect();
        assert_eq!(first.len(), 1);
    }

    #[test]
    fn buckets_collide_modulo_and_sum() {
        let mut f = FeatureVector::from_counts(vec![(3, 2), (13, 5), (4, 1)]);
        assert_eq!(state_block(&f, 10), BTreeMap::from([(3, 7), (4, 1)]));
        f = FeatureVector::from_counts(vec![(9, 1)]);
        assert_eq!(state_block(&f, 10), BTreeMap::from([(9, 1)]));
    }

    #[test]
    fn indices_increase_and_blocks_are_disjoint() {
        let cfg = ExportConfig { ratio: 2, mode: NegativeMode::Strong, buckets: 7, ..Default::default() };
        let (text, _) = run(&corpus(), &cfg);
        for line in text.lines() {
            let idx: Vec<u32> = line.split(' ').skip(2).map(|p| p.split(':').next().unwrap().parse().unwrap()).collect();
            assert!(idx.windows(2).all(|w| w[0] < w[1]), "{line}");
            let (tactic, state) = idx.split_last().unwrap();
            assert!((7..14).contains(tactic));
            assert!(state.iter().all(|i| *i < 7));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = ExportConfig { ratio: 2, mode: NegativeMode::Random, seed: 9, ..Default::default() };
        assert_eq!(run(&corpus(), &cfg).0, run(&corpus(), &cfg).0);
    }
}
