//! Online tactic prediction over term-structured proof states.
//!
//! Proof states are featurized into sparse count vectors and fed to
//! persistent online learners: exact k-NN, an LSH forest and an online
//! random forest. Every `insert` returns a new model value and leaves the
//! previous one intact.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod example;
pub mod exec;
pub mod features;
pub mod lshf;
pub mod model;
pub mod rforest;
pub mod rng;
pub mod similarity;
pub mod snapshot;
pub mod synth;
pub mod term;

pub use example::{Example, FeatureId, FeatureVector, TacticHash};
pub use exec::Execution;
pub use model::{ExactKnn, LshfModel, Model, ModelKind, OnlineModel};
pub use term::{ProofState, Term};
