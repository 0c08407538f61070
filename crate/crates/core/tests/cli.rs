use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tacpred::corpus::record_to_json;
use tacpred::synth::{locality_corpus, LocalitySpec};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tacpred"));
    c.env_remove("TACPRED_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_corpus(dir: &Path, n_modules: usize, per_module: usize) -> PathBuf {
    let spec = LocalitySpec { n_modules, records_per_module: per_module, ..Default::default() };
    let text: Vec<String> = locality_corpus(&spec, 4).iter().map(record_to_json).collect();
    let p = dir.join("corpus.jsonl");
    fs::write(&p, text.join("\n") + "\n").unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn featurize_emits_one_line_per_record_in_id_order() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.jsonl");
    fs::write(&p, "{\"goal\": \"(f (g x))\", \"tactic\": \"auto\"}\n{\"goal\": \"x\", \"tactic\": \"auto\", \"seq\": 7}\n").unwrap();
    let o = run(&["featurize", s(&p), "--features", "W"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["seq"], 0);
    assert_eq!(lines[1]["seq"], 7);
    assert_eq!(lines[0]["features"].as_object().unwrap().len(), 6);
    assert_eq!(lines[0]["tactic_hash"], tacpred::TacticHash::of("auto").to_string());
    let raw = stdout(&o);
    let first = raw.lines().next().unwrap();
    let ids: Vec<u32> = first
        .split("\"features\":{")
        .nth(1)
        .unwrap()
        .split('}')
        .next()
        .unwrap()
        .split(',')
        .map(|kv| kv.split(':').next().unwrap().trim_matches('"').parse().unwrap())
        .collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bad_record_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.jsonl");
    fs::write(&p, "{\"goal\": \"x\", \"tactic\": \"a\"}\n\n{\"goal\": \"(f\", \"tactic\": \"a\"}\n").unwrap();
    let o = run(&["eval-chrono", s(&p)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains(&format!("{}:3:", p.display())), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["train"]).status.code(), Some(1));
    assert_eq!(run(&["eval-chrono", "x", "--model", "svm"]).status.code(), Some(1));
    assert_eq!(run(&["eval-chrono", "x", "--impurity", "1.5"]).status.code(), Some(1));
}

#[test]
fn train_is_reproducible_and_predict_ranks_known_state_first() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 2, 60);
    let a = dir.path().join("a.snap");
    let b = dir.path().join("b.snap");
    for out in [&a, &b] {
        let o = run(&["train", s(&corpus), "--model", "rforest", "--seed", "7", "-o", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let lshf = dir.path().join("l.snap");
    assert!(run(&["train", s(&corpus), "--model", "lshf", "-o", s(&lshf)]).status.success());
    let records = tacpred::corpus::parse_dataset(fs::read_to_string(&corpus).unwrap().as_bytes()).unwrap();
    let target = &records[37];
    let state = serde_json::json!({ "hyps": [], "goal": target.state.goal().to_string() }).to_string();
    let o = run_stdin(&["predict", "-s", s(&lshf), "-k", "5"], &state);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let ranked: Vec<&str> = out.lines().collect();
    assert!(!ranked.is_empty() && ranked.len() <= 5);
    // duplicates of the goal may carry other tactics; the most recent one wins ties
    let exact: Vec<&str> = records
        .iter()
        .filter(|r| r.state.goal() == target.state.goal())
        .map(|r| r.tactic.as_str())
        .collect();
    assert_eq!(ranked[0], *exact.last().unwrap());
}

#[test]
fn predict_rejects_bad_state() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 1, 10);
    let snap = dir.path().join("k.snap");
    assert!(run(&["train", s(&corpus), "--model", "knn-exact", "-o", s(&snap)]).status.success());
    let o = run_stdin(&["predict", "-s", s(&snap)], "{\"goal\": \"(f\"}");
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("<stdin>:1:"));
    let o = run_stdin(&["predict", "-s", s(&corpus)], "{\"goal\": \"x\"}");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn checkpoints_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 1, 25);
    let out = dir.path().join("m.snap");
    let o = run(&["train", s(&corpus), "-o", s(&out), "--checkpoint-every", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for n in [10, 20] {
        assert!(dir.path().join(format!("m.snap.{n}")).exists());
    }
    assert!(!dir.path().join("m.snap.30").exists());
    assert!(out.exists());
}

#[test]
fn eval_reports_and_cases() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 3, 40);
    let cases = dir.path().join("cases.csv");
    let o = run(&["eval-chrono", "--model", "lshf", s(&corpus), "--cases", s(&cases)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["protocol"], "chrono");
    assert_eq!(report["models"][0]["name"], "lshf");
    assert!(report["models"][0]["top10"].as_f64().unwrap() >= report["models"][0]["top1"].as_f64().unwrap());
    let csv = fs::read_to_string(&cases).unwrap();
    assert_eq!(csv.lines().next(), Some("seq,model,rank_of_truth"));
    assert_eq!(csv.lines().count(), 121);

    let o = run(&["eval-split", s(&corpus), "--test-modules", "M2.Sub", "--model", "lshf", "--model", "rforest"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["models"][1]["n_cases"], 40);
    assert_eq!(report["union"].as_array().unwrap().len(), 1);

    let o = run(&["eval-split", s(&corpus), "--test-frac", "0.25", "--validation-frac", "0.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["models"][0]["n_cases"], 30);
    assert!(report["validation"].is_array());

    assert_eq!(run(&["eval-split", s(&corpus), "--test-modules", "Nope"]).status.code(), Some(2));
}

#[test]
fn eval_is_reproducible_under_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 2, 30);
    let go = || bin().args(["eval-chrono", "--model", "rforest", s(&corpus)]).env("TACPRED_SEED", "3").output().unwrap();
    assert_eq!(go().stdout, go().stdout);
}

#[test]
fn export_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), 2, 30);
    let out = dir.path().join("rows.txt");
    let o = run(&["export-xgb", s(&corpus), "--ratio", "2", "--mode", "random", "-o", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 180);
    assert!(text.lines().all(|l| l.starts_with("1 qid:") || l.starts_with("0 qid:")));
    let o = run(&["export-xgb", s(&corpus), "--ratio", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().count() <= 180);
}

#[test]
fn bench_reports_latency_and_memory() {
    let o = run(&["bench", "--synthetic", "300", "--queries", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_eq!(l["examples"], 300);
        assert!(l["query"]["p50_us"].as_f64().unwrap() > 0.0);
        assert!(l["peak_rss_kb"].as_u64().unwrap() > 0);
    }
}
