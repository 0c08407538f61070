//! Proof-state featurization.
//!
//! Six switches select what goes into a feature vector: the original
//! identifier features (O), top-down walks (W), vertical abstracted walks
//! (V), top-level structure (T), premise/goal separation (S) and occurrence
//! counts (C).

mod extract;
mod interner;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use extract::{extract_original, extract_structure, extract_vertical, extract_walks};
pub use interner::{FeatureClass, FeatureInterner, FeatureKey, Origin, UnknownFeatureId};

use crate::example::{FeatureId, FeatureVector};
use crate::term::{ProofState, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureConfig {
    pub original: bool,
    pub walks: bool,
    pub vertical: bool,
    pub structure: bool,
    pub separation: bool,
    pub counts: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureConfigError {
    #[error("at least one of O, W, V, T must be enabled")]
    NoFeatureClass,
    #[error("unknown feature flag `{0}` (expected letters from OWVTSC)")]
    UnknownFlag(char),
}

impl FeatureConfig {
    pub const ALL: FeatureConfig = FeatureConfig {
        original: true,
        walks: true,
        vertical: true,
        structure: true,
        separation: true,
        counts: true,
    };

    pub const ORIGINAL: FeatureConfig = FeatureConfig {
        original: true,
        walks: false,
        vertical: false,
        structure: false,
        separation: false,
        counts: false,
    };

    pub fn validate(&self) -> Result<(), FeatureConfigError> {
        if self.original || self.walks || self.vertical || self.structure {
            Ok(())
        } else {
            Err(FeatureConfigError::NoFeatureClass)
        }
    }

    pub fn to_bits(self) -> u8 {
        [self.original, self.walks, self.vertical, self.structure, self.separation, self.counts]
            .iter()
            .enumerate()
            .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i))
    }

    pub fn from_bits(bits: u8) -> Self {
        let b = |i: u8| bits & (1 << i) != 0;
        FeatureConfig {
            original: b(0),
            walks: b(1),
            vertical: b(2),
            structure: b(3),
            separation: b(4),
            counts: b(5),
        }
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::ALL
    }
}

impl FromStr for FeatureConfig {
    type Err = FeatureConfigError;

    /// Letters from `OWVTSC`, any order, e.g. `"OW"` or `"OWVTSC"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut cfg = FeatureConfig::from_bits(0);
        for c in s.chars() {
            match c.to_ascii_uppercase() {
                'O' => cfg.original = true,
                'W' => cfg.walks = true,
                'V' => cfg.vertical = true,
                'T' => cfg.structure = true,
                'S' => cfg.separation = true,
                'C' => cfg.counts = true,
                '+' | ',' => {}
                other => return Err(FeatureConfigError::UnknownFlag(other)),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (on, c) in [
            (self.original, 'O'),
            (self.walks, 'W'),
            (self.vertical, 'V'),
            (self.structure, 'T'),
            (self.separation, 'S'),
            (self.counts, 'C'),
        ] {
            if on {
                write!(f, "{c}")?;
            }
        }
        Ok(())
    }
}

/// Feature strings of one term for every enabled class.
pub fn term_features(t: &Term, cfg: &FeatureConfig) -> Vec<(FeatureClass, String)> {
    let mut out = Vec::new();
    if cfg.original {
        out.extend(extract_original(t).into_iter().map(|s| (FeatureClass::Original, s)));
    }
    if cfg.walks {
        out.extend(extract_walks(t).into_iter().map(|s| (FeatureClass::Walk, s)));
    }
    if cfg.vertical {
        out.extend(extract_vertical(t).into_iter().map(|s| (FeatureClass::Vertical, s)));
    }
    if cfg.structure {
        out.push((FeatureClass::Structure, extract_structure(t)));
    }
    out
}

/// Featurizes a proof state into `interner`, issuing ids for new features.
/// Document frequencies are left alone; see
/// [`FeatureInterner::record_example`].
pub fn featurize_into(s: &ProofState, cfg: &FeatureConfig, interner: &mut FeatureInterner) -> FeatureVector {
    let mut counts: HashMap<FeatureId, u32> = HashMap::new();
    let terms = s
        .hypotheses()
        .iter()
        .map(|(_, t)| (t, Origin::Hypothesis))
        .chain(std::iter::once((s.goal(), Origin::Goal)));
    for (term, origin) in terms {
        let origin = cfg.separation.then_some(origin);
        for (class, text) in term_features(term, cfg) {
            let id = interner.intern(FeatureKey::new(class, origin, &text));
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let fv = FeatureVector::from_counts(counts);
    if cfg.counts {
        fv
    } else {
        fv.to_presence()
    }
}

/// Persistent form of [`featurize_into`]: the input interner is unchanged.
pub fn featurize_state(
    s: &ProofState,
    cfg: &FeatureConfig,
    interner: &FeatureInterner,
) -> (FeatureVector, FeatureInterner) {
    let mut next = interner.clone();
    let fv = featurize_into(s, cfg, &mut next);
    (fv, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;

    fn state(hyps: &[(&str, &str)], goal: &str) -> ProofState {
        ProofState::new(
            hyps.iter().map(|(n, t)| (n.to_string(), parse_term(t).unwrap())).collect(),
            parse_term(goal).unwrap(),
        )
        .unwrap()
    }

    fn cfg(s: &str) -> FeatureConfig {
        s.parse().unwrap()
    }

    #[test]
    fn separation_splits_spaces() {
        let s = state(&[("h", "a")], "a");
        let (fv, interner) = featurize_state(&s, &cfg("OSC"), &FeatureInterner::new());
        assert_eq!(fv.iter().collect::<Vec<_>>(), vec![(0, 1), (1, 1)]);
        assert_eq!(interner.resolve(0).unwrap().origin, Some(Origin::Hypothesis));
        assert_eq!(interner.resolve(1).unwrap().origin, Some(Origin::Goal));
    }

    #[test]
    fn merged_spaces_count_twice() {
        let s = state(&[("h", "a")], "a");
        let (fv, _) = featurize_state(&s, &cfg("OC"), &FeatureInterner::new());
        assert_eq!(fv.iter().collect::<Vec<_>>(), vec![(0, 2)]);
        let (fv, _) = featurize_state(&s, &cfg("O"), &FeatureInterner::new());
        assert_eq!(fv.iter().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn union_of_original_and_walks() {
        let s = state(&[], "(f (g x))");
        let (fv, interner) = featurize_state(&s, &cfg("OWC"), &FeatureInterner::new());
        let mut got: Vec<String> = fv
            .ids()
            .map(|id| interner.resolve(id).unwrap().text.to_string())
            .collect();
        got.sort();
        let mut want: Vec<String> = extract_original(s.goal())
            .into_iter()
            .chain(extract_walks(s.goal()))
            .collect();
        want.sort();
        assert_eq!(got, want);
        assert_eq!(fv.len(), 11);
    }

    #[test]
    fn structure_is_one_feature_per_term() {
        let s = state(&[("h1", "(f a)"), ("h2", "(g b c)")], "(f (g b c) a)");
        let (fv, interner) = featurize_state(&s, &cfg("T"), &FeatureInterner::new());
        assert_eq!(fv.len(), 3);
        assert!(interner.keys().all(|k| k.class == FeatureClass::Structure));
    }

    #[test]
    fn classes_do_not_collide() {
        // The walk feature and the vertical feature of a lone atom render the
        // same string but stay distinct features.
        let s = state(&[], "X");
        let (fv, _) = featurize_state(&s, &cfg("OWVTC"), &FeatureInterner::new());
        assert_eq!(fv.len(), 4);
    }

    #[test]
    fn config_parsing() {
        assert_eq!(cfg("owvtsc"), FeatureConfig::ALL);
        assert_eq!("SC".parse::<FeatureConfig>(), Err(FeatureConfigError::NoFeatureClass));
        assert_eq!("OQ".parse::<FeatureConfig>(), Err(FeatureConfigError::UnknownFlag('Q')));
        assert_eq!(FeatureConfig::ALL.to_string(), "OWVTSC");
        for bits in 0..64u8 {
            assert_eq!(FeatureConfig::from_bits(bits).to_bits(), bits);
        }
    }

    #[test]
    fn input_interner_untouched() {
        let base = FeatureInterner::new();
        let (_, next) = featurize_state(&state(&[], "(f x)"), &cfg("O"), &base);
        assert!(base.is_empty());
        assert_eq!(next.len(), 3);
    }
}
