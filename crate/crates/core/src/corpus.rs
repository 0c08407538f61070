//! JSON-lines corpus ingestion.
//!
//! Each non-blank line is an object:
//!
//! ```text
//! {"hyps": [["h", "(eq x y)"]], "goal": "(eq y x)", "tactic": "symmetry", "seq": 3, "module": "Logic.Eq"}
//! ```
//!
//! `seq` and `module` are optional. Ingestion is fail-fast: the first bad
//! record aborts the whole read.

use std::io::BufRead;

use serde::Deserialize;
use thiserror::Error;

use crate::example::TacticHash;
use crate::term::{parse_term, ProofState, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExampleRecord {
    pub state: ProofState,
    pub tactic: String,
    pub seq: u64,
    pub module_path: String,
}

impl LabeledExampleRecord {
    pub fn tactic_hash(&self) -> TacticHash {
        TacticHash::of(&self.tactic)
    }
}

#[derive(Debug, Error)]
#[error("line {line}: {reason}")]
pub struct RecordError {
    pub line: usize,
    pub reason: String,
}

#[derive(Deserialize)]
struct RawState {
    #[serde(default)]
    hyps: Vec<(String, String)>,
    goal: String,
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(default)]
    hyps: Vec<(String, String)>,
    goal: String,
    tactic: String,
    seq: Option<u64>,
    module: Option<String>,
}

fn build_state(hyps: Vec<(String, String)>, goal: &str) -> Result<ProofState, String> {
    let mut parsed: Vec<(String, Term)> = Vec::with_capacity(hyps.len());
    for (name, text) in hyps {
        let t = parse_term(&text).map_err(|e| format!("hypothesis `{name}`: {e}"))?;
        parsed.push((name, t));
    }
    let goal = parse_term(goal).map_err(|e| format!("goal: {e}"))?;
    ProofState::new(parsed, goal).map_err(|e| e.to_string())
}

/// Parses a bare proof state (`hyps` and `goal`; other keys ignored).
pub fn parse_state_json(text: &str) -> Result<ProofState, String> {
    let raw: RawState = serde_json::from_str(text).map_err(|e| e.to_string())?;
    build_state(raw.hyps, &raw.goal)
}

/// Reads a whole corpus. Missing `seq` values continue from the previous
/// record (starting at 0); explicit values must be strictly increasing.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Vec<LabeledExampleRecord>, RecordError> {
    let mut out = Vec::new();
    let mut last_seq: Option<u64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let err = |reason: String| RecordError { line: line_no, reason };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        if raw.tactic.is_empty() {
            return Err(err("empty tactic".into()));
        }
        let state = build_state(raw.hyps, &raw.goal).map_err(err)?;
        let seq = match (raw.seq, last_seq) {
            (Some(s), Some(prev)) if s <= prev => {
                return Err(err(format!("seq {s} not greater than previous {prev}")))
            }
            (Some(s), _) => s,
            (None, Some(prev)) => prev + 1,
            (None, None) => 0,
        };
        last_seq = Some(seq);
        out.push(LabeledExampleRecord {
            state,
            tactic: raw.tactic,
            seq,
            module_path: raw.module.unwrap_or_default(),
        });
    }
    Ok(out)
}

/// Inverse of [`parse_dataset`] for one record.
pub fn record_to_json(r: &LabeledExampleRecord) -> String {
    let hyps: Vec<(String, String)> = r
        .state
        .hypotheses()
        .iter()
        .map(|(n, t)| (n.clone(), t.to_string()))
        .collect();
    serde_json::json!({
        "hyps": hyps,
        "goal": r.state.goal().to_string(),
        "tactic": r.tactic,
        "seq": r.seq,
        "module": r.module_path,
    })
    .to_string()
}
