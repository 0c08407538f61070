use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tacpred::lshf::LshForest;
use tacpred::rforest::RandomForest;
use tacpred::similarity::{knn_exact_with, ExampleDb, SimilarityKind};
use tacpred::synth::{clustered_examples, interner_for, ClusterSpec};
use tacpred::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn knn(c: &mut Criterion) {
    let spec = ClusterSpec { n_examples: 5000, universe: 2000, n_clusters: 100, center_size: 30, noise: 0.2 };
    let (examples, _) = clustered_examples(&spec, 1);
    let mut db = ExampleDb::new(interner_for(&[], spec.universe));
    for e in &examples {
        db = db.insert(Arc::clone(e)).unwrap();
    }
    let q = &examples[17].features;
    let mut g = c.benchmark_group("knn_exact");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, examples.len()), |b| {
            b.iter(|| black_box(knn_exact_with(exec, &db, q, 10, SimilarityKind::TfIdfWeighted)))
        });
    }
    g.finish();
}

fn rforest(c: &mut Criterion) {
    let spec = ClusterSpec { n_examples: 2000, universe: 1000, n_clusters: 50, center_size: 25, noise: 0.2 };
    let (examples, _) = clustered_examples(&spec, 2);
    let trained = examples.iter().fold(RandomForest::new(320, 0.5, 2), |f, e| f.insert_with(Execution::Sequential, Arc::clone(e)));
    let extra = Arc::clone(&examples[3]);
    let mut g = c.benchmark_group("rforest");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(format!("insert/{name}"), trained.trees().len()), |b| {
            b.iter(|| black_box(trained.insert_with(exec, Arc::clone(&extra))))
        });
        g.bench_function(BenchmarkId::new(format!("predict/{name}"), trained.trees().len()), |b| {
            b.iter(|| black_box(trained.predict_with(exec, &extra.features, 10)))
        });
    }
    g.finish();
}

fn lshf(c: &mut Criterion) {
    let (examples, _) = clustered_examples(&ClusterSpec { n_examples: 2000, ..Default::default() }, 3);
    let forest = examples.iter().fold(LshForest::default(), |f, e| f.insert(Arc::clone(e)));
    let extra = Arc::clone(&examples[5]);
    let mut g = c.benchmark_group("lshf_insert");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, forest.n_tries()), |b| {
            b.iter(|| black_box(forest.insert_with(exec, Arc::clone(&extra))))
        });
    }
    g.finish();
}

criterion_group!(benches, knn, rforest, lshf);
criterion_main!(benches);
