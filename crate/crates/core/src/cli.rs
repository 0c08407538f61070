//! `tacpred` command-line interface.
//!
//! Exit status is 0 on success, 1 on usage errors and 2 on data errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::corpus::{parse_dataset, parse_state_json, LabeledExampleRecord};
use crate::eval::{chrono_eval, export_binary_dataset, split_eval, ExportConfig, NegativeMode, SplitSpec, TestSelector};
use crate::example::Example;
use crate::exec::Execution;
use crate::features::{featurize_into, FeatureConfig, FeatureInterner};
use crate::lshf::{self, LshForest};
use crate::model::{ExactKnn, LshfModel, Model, ModelKind, OnlineModel};
use crate::rforest::{self, RandomForest};
use crate::similarity::SimilarityKind;
use crate::snapshot::Session;
use crate::synth::{locality_corpus, LocalitySpec};

#[derive(Parser, Debug)]
#[command(name = "tacpred", version, about = "Online tactic prediction from proof states")]
struct Cli {
    /// Disable data-parallel execution.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the feature vector of every record as JSON lines.
    Featurize {
        corpus: PathBuf,
        #[arg(long, default_value = "OWVTSC")]
        features: FeatureConfig,
    },
    /// Stream a corpus into a model and write a snapshot.
    Train {
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value = "lshf")]
        model: ModelKind,
        /// Also write `<out>.<n>` after every N records.
        #[arg(long)]
        checkpoint_every: Option<usize>,
        #[command(flatten)]
        params: ModelParams,
    },
    /// Read one proof state as JSON on stdin and print ranked tactics.
    Predict {
        #[arg(short, long)]
        snapshot: PathBuf,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Score every record with models trained on the records before it.
    EvalChrono {
        corpus: PathBuf,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Train on non-test records and score the held-out ones.
    EvalSplit {
        corpus: PathBuf,
        /// Comma-separated module paths to hold out.
        #[arg(long, value_delimiter = ',', conflicts_with = "test_frac", required_unless_present = "test_frac")]
        test_modules: Vec<String>,
        /// Hold out the chronologically last fraction of every module.
        #[arg(long)]
        test_frac: Option<f64>,
        /// Fraction of training records scored as a validation set.
        #[arg(long)]
        validation_frac: Option<f64>,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Write labelled (state, tactic) rows for an external pairwise learner.
    ExportXgb {
        corpus: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        ratio: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Strong)]
        mode: ModeArg,
        #[arg(long, default_value_t = crate::eval::DEFAULT_BUCKETS)]
        buckets: u32,
        /// Strong negatives come from the k-NN ranking over only the last N records.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, default_value_t = 100)]
        candidates: usize,
        #[arg(long, default_value = "OWVTSC")]
        features: FeatureConfig,
        #[arg(long, env = "TACPRED_SEED", default_value_t = 0)]
        seed: u64,
    },
    /// Measure insert and query latency and peak memory.
    Bench {
        /// Corpus to replay; a synthetic corpus is generated when absent.
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        synthetic: usize,
        #[arg(long = "model", default_values_t = [ModelKind::Lshf, ModelKind::RForest])]
        models: Vec<ModelKind>,
        #[arg(long, default_value_t = 200)]
        queries: usize,
        #[command(flatten)]
        params: ModelParams,
    },
}

#[derive(Args, Debug, Clone)]
struct ModelParams {
    #[arg(long, default_value = "OWVTSC")]
    features: FeatureConfig,
    #[arg(long, default_value_t = lshf::DEFAULT_TRIES)]
    tries: usize,
    #[arg(long, default_value_t = lshf::DEFAULT_MAX_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value_t = rforest::DEFAULT_MAX_TREES)]
    trees: usize,
    #[arg(long, default_value_t = rforest::DEFAULT_IMPURITY)]
    impurity: f64,
    /// Soft cap on forest leaf size (oldest examples are dropped).
    #[arg(long)]
    leaf_cap: Option<usize>,
    /// Re-sort LSH forest candidates.
    #[arg(long, value_enum, default_value_t = ResortArg::Tfidf)]
    resort: ResortArg,
    /// Similarity for exact k-NN.
    #[arg(long, default_value = "tfidf")]
    similarity: SimilarityKind,
    /// Exact k-NN only looks at the last N examples.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, env = "TACPRED_SEED")]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
struct EvalArgs {
    #[arg(long = "model", default_values_t = [ModelKind::Lshf, ModelKind::RForest])]
    models: Vec<ModelKind>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write per-case ranks as CSV.
    #[arg(long)]
    cases: Option<PathBuf>,
    #[command(flatten)]
    params: ModelParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ResortArg {
    Off,
    Plain,
    Tfidf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Strong,
    Random,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

type CliResult<T = ()> = Result<T, CliError>;

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

impl ModelParams {
    fn validate(&self) -> CliResult {
        let bad = |m: &str| Err(CliError::Usage(m.to_string()));
        if self.tries == 0 {
            return bad("--tries must be at least 1");
        }
        if !(1..=crate::lshf::MAX_PATH_BITS).contains(&self.max_depth) {
            return bad("--max-depth must lie in 1..=64");
        }
        if self.trees == 0 {
            return bad("--trees must be at least 1");
        }
        if !(0.0..1.0).contains(&self.impurity) {
            return bad("--impurity must lie in [0, 1)");
        }
        if self.leaf_cap == Some(0) || self.window == Some(0) {
            return bad("--leaf-cap and --window must be positive");
        }
        self.features.validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    fn build(&self, kind: ModelKind) -> Model {
        match kind {
            ModelKind::KnnExact => Model::KnnExact(ExactKnn::new(self.similarity, self.window)),
            ModelKind::Lshf => Model::Lshf(LshfModel {
                forest: LshForest::new(self.seed.unwrap_or(lshf::DEFAULT_SEED), self.tries, self.max_depth),
                resort: match self.resort {
                    ResortArg::Off => None,
                    ResortArg::Plain => Some(SimilarityKind::Plain),
                    ResortArg::Tfidf => Some(SimilarityKind::TfIdfWeighted),
                },
            }),
            ModelKind::RForest => Model::RForest(
                RandomForest::new(self.trees, self.impurity, self.seed.unwrap_or(rforest::DEFAULT_SEED))
                    .with_leaf_cap(self.leaf_cap),
            ),
        }
    }
}

fn read_corpus(path: &Path) -> CliResult<Vec<LabeledExampleRecord>> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    parse_dataset(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}:{}: {}", path.display(), e.line, e.reason)))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_session(path: &Path, s: &Session) -> CliResult {
    let mut w = create(path)?;
    s.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

/// One JSON line per record; feature ids appear in numeric order.
fn featurize(corpus: &Path, cfg: FeatureConfig, out: &mut dyn Write) -> CliResult {
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let records = read_corpus(corpus)?;
    let mut interner = FeatureInterner::new();
    for r in &records {
        let fv = featurize_into(&r.state, &cfg, &mut interner);
        let feats: Vec<String> = fv.iter().map(|(id, count)| format!("\"{id}\":{count}")).collect();
        writeln!(out, "{{\"seq\":{},\"features\":{{{}}},\"tactic_hash\":\"{}\"}}", r.seq, feats.join(","), r.tactic_hash())
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}

fn train(corpus: &Path, out: &Path, kind: ModelKind, every: Option<usize>, params: &ModelParams, exec: Execution) -> CliResult {
    params.validate()?;
    if every == Some(0) {
        return Err(CliError::Usage("--checkpoint-every must be positive".into()));
    }
    let records = read_corpus(corpus)?;
    let mut session = Session {
        features: params.features,
        interner: FeatureInterner::new(),
        tactics: BTreeMap::new(),
        model: params.build(kind),
    };
    for (i, r) in records.iter().enumerate() {
        let fv = featurize_into(&r.state, &session.features, &mut session.interner);
        session.interner.record_in_place(&fv).expect("ids issued by this interner");
        session.tactics.entry(r.tactic_hash()).or_insert_with(|| r.tactic.clone());
        let e = Arc::new(Example::new(fv, r.tactic_hash(), r.seq));
        session.model = match &session.model {
            Model::Lshf(m) => Model::Lshf(LshfModel { forest: m.forest.insert_with(exec, e), resort: m.resort }),
            Model::RForest(m) => Model::RForest(m.insert_with(exec, e)),
            m => m.insert(e),
        };
        if every.is_some_and(|n| (i + 1) % n == 0) {
            let mut p = out.as_os_str().to_owned();
            p.push(format!(".{}", i + 1));
            write_session(Path::new(&p), &session)?;
        }
    }
    write_session(out, &session)
}

fn predict(snapshot: &Path, k: usize, input: &mut dyn Read, out: &mut dyn Write) -> CliResult {
    if k == 0 {
        return Err(CliError::Usage("-k must be positive".into()));
    }
    let mut raw = Vec::new();
    File::open(snapshot).and_then(|mut f| f.read_to_end(&mut raw)).map_err(|e| io_err(snapshot, e))?;
    let session = Session::read_from(&mut raw.as_slice()).map_err(|e| CliError::Data(format!("{}: {e}", snapshot.display())))?;
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|e| CliError::Data(format!("<stdin>: {e}")))?;
    let state = parse_state_json(text.trim()).map_err(|e| CliError::Data(format!("<stdin>:1: {e}")))?;
    let stats = session.interner.clone();
    let mut scratch = session.interner;
    let fv = featurize_into(&state, &session.features, &mut scratch);
    for t in session.model.predict(&fv, &stats, k) {
        let name = session.tactics.get(&t).cloned().unwrap_or_else(|| t.to_string());
        writeln!(out, "{name}").map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}

fn emit_report(report: &crate::eval::EvalReport, eval: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let json = report.to_json();
    match &eval.report {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "{json}").and_then(|_| w.flush()).map_err(|e| io_err(p, e))?;
        }
        None => writeln!(out, "{json}").map_err(|e| CliError::Data(e.to_string()))?,
    }
    if let Some(p) = &eval.cases {
        let mut w = create(p)?;
        report.write_cases_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(p, e))?;
    }
    Ok(())
}

fn models_for(eval: &EvalArgs) -> CliResult<Vec<Model>> {
    eval.params.validate()?;
    let mut kinds = eval.models.clone();
    kinds.dedup();
    Ok(kinds.into_iter().map(|k| eval.params.build(k)).collect())
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted[((sorted.len() - 1) as f64 * p).round() as usize]
}

fn latency_summary(mut micros: Vec<f64>) -> serde_json::Value {
    micros.sort_by(f64::total_cmp);
    json!({
        "p50_us": percentile(&micros, 0.5),
        "p90_us": percentile(&micros, 0.9),
        "p99_us": percentile(&micros, 0.99),
    })
}

/// Peak resident set size in kilobytes, when the platform reports it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn bench(corpus: Option<&Path>, synthetic: usize, kinds: &[ModelKind], queries: usize, params: &ModelParams, exec: Execution, out: &mut dyn Write) -> CliResult {
    params.validate()?;
    let records = match corpus {
        Some(p) => read_corpus(p)?,
        None => {
            let per_module = 200;
            let spec = LocalitySpec { n_modules: synthetic.div_ceil(per_module).max(1), records_per_module: per_module, ..Default::default() };
            let mut c = locality_corpus(&spec, params.seed.unwrap_or(0));
            c.truncate(synthetic);
            c
        }
    };
    let mut interner = FeatureInterner::new();
    let examples: Vec<Arc<Example>> = records
        .iter()
        .map(|r| {
            let fv = featurize_into(&r.state, &params.features, &mut interner);
            interner.record_in_place(&fv).expect("ids issued by this interner");
            Arc::new(Example::new(fv, r.tactic_hash(), r.seq))
        })
        .collect();
    let block = (examples.len() / 10).clamp(1, 1000);
    for &kind in kinds {
        let mut model = params.build(kind);
        let mut insert_us = Vec::with_capacity(examples.len());
        for e in &examples {
            let t = Instant::now();
            model = match &model {
                Model::Lshf(m) => Model::Lshf(LshfModel { forest: m.forest.insert_with(exec, Arc::clone(e)), resort: m.resort }),
                Model::RForest(m) => Model::RForest(m.insert_with(exec, Arc::clone(e))),
                m => m.insert(Arc::clone(e)),
            };
            insert_us.push(t.elapsed().as_secs_f64() * 1e6);
        }
        let first: f64 = insert_us.iter().take(block).sum::<f64>() / block as f64;
        let last: f64 = insert_us.iter().rev().take(block).sum::<f64>() / block as f64;
        let step = (examples.len() / queries.max(1)).max(1);
        let query_us: Vec<f64> = examples
            .iter()
            .step_by(step)
            .take(queries)
            .map(|e| {
                let t = Instant::now();
                let p = model.predict(&e.features, &interner, 10);
                std::hint::black_box(p);
                t.elapsed().as_secs_f64() * 1e6
            })
            .collect();
        let line = json!({
            "model": kind.to_string(),
            "examples": examples.len(),
            "insert": latency_summary(insert_us),
            "amortized_insert_ratio": if first > 0.0 { last / first } else { 0.0 },
            "query": latency_summary(query_us),
            "peak_rss_kb": peak_rss_kb(),
        });
        writeln!(out, "{line}").map_err(|e| CliError::Data(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: Cli, input: &mut dyn Read, out: &mut dyn Write) -> CliResult {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Featurize { corpus, features } => featurize(&corpus, features, out),
        Command::Train { corpus, out: path, model, checkpoint_every, params } => {
            train(&corpus, &path, model, checkpoint_every, &params, exec)
        }
        Command::Predict { snapshot, k } => predict(&snapshot, k, input, out),
        Command::EvalChrono { corpus, eval } => {
            let models = models_for(&eval)?;
            let records = read_corpus(&corpus)?;
            let report = chrono_eval(&records, &eval.params.features, models, exec)
                .map_err(|e| CliError::Data(format!("{}: {e}", corpus.display())))?;
            emit_report(&report, &eval, out)
        }
        Command::EvalSplit { corpus, test_modules, test_frac, validation_frac, eval } => {
            let models = models_for(&eval)?;
            for f in test_frac.iter().chain(&validation_frac) {
                if !(0.0..1.0).contains(f) {
                    return Err(CliError::Usage("fractions must lie in [0, 1)".into()));
                }
            }
            let test = match test_frac {
                Some(f) => TestSelector::LastFraction(f),
                None => TestSelector::Modules(test_modules.into_iter().collect()),
            };
            let spec = SplitSpec { test, validation_fraction: validation_frac, seed: eval.params.seed.unwrap_or(0) };
            let records = read_corpus(&corpus)?;
            let report = split_eval(&records, &spec, &eval.params.features, models, exec)
                .map_err(|e| CliError::Data(format!("{}: {e}", corpus.display())))?;
            emit_report(&report, &eval, out)
        }
        Command::ExportXgb { corpus, out: path, ratio, mode, buckets, window, candidates, features, seed } => {
            features.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            if buckets == 0 || candidates == 0 {
                return Err(CliError::Usage("--buckets and --candidates must be positive".into()));
            }
            let records = read_corpus(&corpus)?;
            let mode = match mode {
                ModeArg::Strong => NegativeMode::Strong,
                ModeArg::Random => NegativeMode::Random,
            };
            let cfg = ExportConfig { ratio, mode, buckets, seed, candidates };
            let knn = ExactKnn::new(SimilarityKind::TfIdfWeighted, window);
            let report = match &path {
                Some(p) => {
                    let mut w = create(p)?;
                    let r = export_binary_dataset(&records, &features, knn, &cfg, &mut w).map_err(|e| io_err(p, e))?;
                    w.flush().map_err(|e| io_err(p, e))?;
                    r
                }
                None => export_binary_dataset(&records, &features, knn, &cfg, out).map_err(|e| CliError::Data(e.to_string()))?,
            };
            eprintln!(
                "exported {} states: {} positive, {} negative rows; {} states short of negatives",
                report.states,
                report.positive_rows,
                report.negative_rows,
                report.insufficient_negatives.len()
            );
            Ok(())
        }
        Command::Bench { corpus, synthetic, models, queries, params } => {
            bench(corpus.as_deref(), synthetic, &models, queries, &params, exec, out)
        }
    }
}

/// Runs the CLI on explicit streams and returns the exit status.
pub fn run_with<I, T>(argv: I, input: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    match dispatch(cli, input, out) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
        Err(CliError::Data(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
    }
}

/// Runs the CLI on the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let code = run_with(argv, &mut io::stdin().lock(), &mut out, &mut io::stderr());
    let _ = out.flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(std::iter::once("tacpred").chain(args.iter().copied()), &mut io::empty(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run_args(&["frobnicate"]).0, 1);
    }

    #[test]
    fn bad_flag_value_is_usage_error() {
        assert_eq!(run_args(&["featurize", "x.jsonl", "--features", "Q"]).0, 1);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("eval-chrono"));
    }

    #[test]
    fn missing_corpus_is_data_error() {
        let (code, _, err) = run_args(&["featurize", "/nonexistent/c.jsonl"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/c.jsonl"));
    }

    #[test]
    fn percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.99), 5.0);
        assert_eq!(percentile(&[], 0.5), 0.0);
    }
}
