//! Seeded synthetic corpora for tests, benchmarks and the `bench` subcommand.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;

use crate::corpus::LabeledExampleRecord;
use crate::example::{Example, FeatureId, FeatureVector, TacticHash};
use crate::features::{FeatureClass, FeatureInterner, FeatureKey};
use crate::rng::SplitRng;
use crate::term::{ProofState, Term};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub n_examples: usize,
    pub universe: u32,
    pub n_clusters: usize,
    /// Features in each cluster centre.
    pub center_size: usize,
    /// Probability that a centre feature is swapped for a random one.
    pub noise: f64,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        ClusterSpec { n_examples: 1000, universe: 500, n_clusters: 25, center_size: 20, noise: 0.2 }
    }
}

/// Interner with `universe` anonymous feature ids and document counts taken
/// from `examples`.
pub fn interner_for(examples: &[Arc<Example>], universe: u32) -> FeatureInterner {
    let keys = (0..universe).map(|i| FeatureKey::new(FeatureClass::Original, None, &format!("f{i}"))).collect();
    let mut df = vec![0u32; universe as usize];
    for e in examples {
        for id in e.features.ids() {
            df[id as usize] += 1;
        }
    }
    FeatureInterner::from_parts(keys, df, examples.len() as u64)
}

fn random_set(rng: &mut SplitRng, universe: u32, n: usize) -> Vec<FeatureId> {
    sample(rng, universe as usize, n.min(universe as usize)).into_iter().map(|i| i as FeatureId).collect()
}

/// Replaces each feature with a random one with probability `noise`.
pub fn perturb(f: &FeatureVector, universe: u32, noise: f64, rng: &mut SplitRng) -> FeatureVector {
    let ids = f.ids().map(|id| if rng.gen_bool(noise) { rng.gen_range(0..universe) } else { id });
    FeatureVector::from_ids(ids.collect::<BTreeSet<_>>())
}

/// Examples drawn around random cluster centres; the tactic names the cluster.
/// Seqs follow vector order.
pub fn clustered_examples(spec: &ClusterSpec, seed: u64) -> (Vec<Arc<Example>>, FeatureInterner) {
    let root = SplitRng::new(seed);
    let mut crng = root.fork(0);
    let centers: Vec<FeatureVector> = (0..spec.n_clusters)
        .map(|_| FeatureVector::from_ids(random_set(&mut crng, spec.universe, spec.center_size)))
        .collect();
    let mut rng = root.fork(1);
    let examples: Vec<Arc<Example>> = (0..spec.n_examples)
        .map(|i| {
            let c = rng.gen_range(0..spec.n_clusters);
            let f = perturb(&centers[c], spec.universe, spec.noise, &mut rng);
            Arc::new(Example::new(f, TacticHash(c as u64), i as u64))
        })
        .collect();
    let interner = interner_for(&examples, spec.universe);
    (examples, interner)
}

/// Two labels, decided by the presence of feature 0.
pub fn separable_examples(n: usize, universe: u32, seed: u64) -> Vec<Arc<Example>> {
    let mut rng = SplitRng::new(seed);
    (0..n)
        .map(|i| {
            let mut ids = random_set(&mut rng, universe - 1, 8).into_iter().map(|x| x + 1).collect::<Vec<_>>();
            let positive = rng.gen_bool(0.5);
            if positive {
                ids.push(0);
            }
            Arc::new(Example::new(FeatureVector::from_ids(ids), TacticHash(u64::from(positive)), i as u64))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalitySpec {
    pub n_modules: usize,
    pub records_per_module: usize,
    /// Tactics private to each module.
    pub tactics_per_module: usize,
    /// Consecutive records sharing one lemma shape and tactic.
    pub run_length: usize,
    pub shared_tactics: usize,
}

impl Default for LocalitySpec {
    fn default() -> Self {
        LocalitySpec { n_modules: 10, records_per_module: 200, tactics_per_module: 12, run_length: 4, shared_tactics: 4 }
    }
}

fn leaf(rng: &mut SplitRng, vocab: &[String]) -> Term {
    Term::atom(vocab[rng.gen_range(0..vocab.len())].as_str())
}

fn shape(rng: &mut SplitRng, heads: &[String], leaves: &[String], depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng, leaves);
    }
    let arity = rng.gen_range(1..=2);
    let args = (0..arity).map(|_| shape(rng, heads, leaves, depth - 1)).collect();
    Term::app(leaf(rng, heads), args)
}

/// Swaps one leaf of `t` for another from `leaves`.
fn mutate(t: &Term, rng: &mut SplitRng, leaves: &[String]) -> Term {
    match t {
        Term::Atom(_) => leaf(rng, leaves),
        Term::App(h, args) => {
            let i = rng.gen_range(0..args.len());
            let mut args = args.clone();
            args[i] = mutate(&args[i], rng, leaves);
            Term::App(h.clone(), args)
        }
    }
}

/// Modules appear one after another. Each has its own identifiers and
/// tactics, and records come in runs of near-duplicate goals sharing a tactic.
/// Later records in a module reuse earlier lemma shapes.
pub fn locality_corpus(spec: &LocalitySpec, seed: u64) -> Vec<LabeledExampleRecord> {
    let root = SplitRng::new(seed);
    let shared: Vec<String> = (0..spec.shared_tactics).map(|i| format!("common{i}")).collect();
    let common_heads: Vec<String> = ["eq", "and", "or", "not"].iter().map(|s| s.to_string()).collect();
    let mut out = Vec::with_capacity(spec.n_modules * spec.records_per_module);
    for m in 0..spec.n_modules {
        let mut rng = root.fork(m as u64);
        let module = format!("M{m}.Sub");
        let mut heads: Vec<String> = (0..6).map(|i| format!("m{m}_op{i}")).collect();
        heads.extend(common_heads.iter().cloned());
        let leaves: Vec<String> = (0..8).map(|i| format!("m{m}_c{i}")).collect();
        let tactics: Vec<String> = (0..spec.tactics_per_module).map(|i| format!("m{m}_tac{i}")).collect();
        let mut lemmas: Vec<(Term, String)> = Vec::new();
        while out.len() < (m + 1) * spec.records_per_module {
            let (base, tactic) = if !lemmas.is_empty() && rng.gen_bool(0.5) {
                lemmas[rng.gen_range(0..lemmas.len())].clone()
            } else {
                let t = if rng.gen_bool(0.15) {
                    shared[rng.gen_range(0..shared.len())].clone()
                } else {
                    tactics[rng.gen_range(0..tactics.len())].clone()
                };
                let body = shape(&mut rng, &heads, &leaves, 4);
                let goal = Term::app(Term::atom(heads[rng.gen_range(0..heads.len())].as_str()), vec![body]);
                lemmas.push((goal.clone(), t.clone()));
                (goal, t)
            };
            let run = spec.run_length.min((m + 1) * spec.records_per_module - out.len());
            for _ in 0..run {
                let goal = mutate(&base, &mut rng, &leaves);
                let seq = out.len() as u64;
                out.push(LabeledExampleRecord {
                    state: ProofState::new(vec![], goal).expect("no hypotheses"),
                    tactic: tactic.clone(),
                    seq,
                    module_path: module.clone(),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clustered_is_deterministic() {
        let spec = ClusterSpec { n_examples: 50, ..Default::default() };
        let (a, ia) = clustered_examples(&spec, 3);
        let (b, _) = clustered_examples(&spec, 3);
        assert_eq!(a, b);
        assert_eq!(ia.total_examples(), 50);
        assert_eq!(ia.len(), 500);
        assert!(a.iter().all(|e| e.features.ids().all(|i| i < 500)));
    }

    #[test]
    fn separable_label_tracks_feature_zero() {
        for e in separable_examples(200, 50, 1) {
            assert_eq!(e.tactic.0 == 1, e.features.contains(0));
        }
    }

    #[test]
    fn locality_corpus_shape() {
        let spec = LocalitySpec { n_modules: 3, records_per_module: 30, ..Default::default() };
        let c = locality_corpus(&spec, 5);
        assert_eq!(c.len(), 90);
        assert!(c.windows(2).all(|w| w[0].seq < w[1].seq));
        assert_eq!(c[89].module_path, "M2.Sub");
        assert_eq!(c, locality_corpus(&spec, 5));
    }
}
