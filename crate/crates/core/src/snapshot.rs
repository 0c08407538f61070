//! Deterministic binary snapshots.
//!
//! All integers are little-endian. Every model blob opens with a 4-byte
//! magic and a `u16` format version. The example store is
//!
//! ```text
//! u64 count, then per example: u64 seq, u64 tactic, u32 n, n × (u32 id, u32 count)
//! ```
//!
//! An LSH forest is stored as its hyperparameters plus the example store and
//! rebuilt on load by replaying the inserts, which is deterministic. A random
//! forest stores its trees explicitly, leaves referring to examples by store
//! index.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Cursor, Read, Write};
use std::sync::Arc;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

use crate::example::{Example, FeatureVector, TacticHash};
use crate::features::{FeatureClass, FeatureConfig, FeatureInterner, FeatureKey, Origin};
use crate::lshf::LshForest;
use crate::model::{ExactKnn, LshfModel, Model};
use crate::rforest::{DecisionTree, ExampleList, LeafPolicy, RandomForest, SplitRule};
use crate::rng::SplitRng;
use crate::similarity::SimilarityKind;

pub const LSHF_MAGIC: [u8; 4] = *b"LSHF";
pub const RFOREST_MAGIC: [u8; 4] = *b"ORFS";
pub const KNN_MAGIC: [u8; 4] = *b"KNNX";
pub const SESSION_MAGIC: [u8; 4] = *b"TACS";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("snapshot truncated")]
    Truncated,
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for SnapshotError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            SnapshotError::Truncated
        } else {
            SnapshotError::Io(e)
        }
    }
}

type Result<T> = std::result::Result<T, SnapshotError>;

fn write_header(w: &mut impl Write, magic: [u8; 4]) -> io::Result<()> {
    w.write_all(&magic)?;
    w.write_u16::<LE>(FORMAT_VERSION)
}

fn read_header(r: &mut impl Read, magic: [u8; 4]) -> Result<()> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found)?;
    if found != magic {
        return Err(SnapshotError::BadMagic { expected: magic, found });
    }
    match r.read_u16::<LE>()? {
        FORMAT_VERSION => Ok(()),
        v => Err(SnapshotError::UnsupportedVersion(v)),
    }
}

fn write_str(w: &mut impl Write, s: &str) -> io::Result<()> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let len = r.read_u32::<LE>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| SnapshotError::Corrupt(e.to_string()))
}

fn kind_code(k: Option<SimilarityKind>) -> u8 {
    match k {
        None => 0,
        Some(SimilarityKind::Plain) => 1,
        Some(SimilarityKind::TfIdfWeighted) => 2,
    }
}

fn kind_from(c: u8) -> Result<Option<SimilarityKind>> {
    match c {
        0 => Ok(None),
        1 => Ok(Some(SimilarityKind::Plain)),
        2 => Ok(Some(SimilarityKind::TfIdfWeighted)),
        _ => Err(SnapshotError::Corrupt(format!("similarity code {c}"))),
    }
}

fn write_opt_u64(w: &mut impl Write, v: Option<u64>) -> io::Result<()> {
    w.write_u8(v.is_some() as u8)?;
    w.write_u64::<LE>(v.unwrap_or(0))
}

fn read_opt_u64(r: &mut impl Read) -> Result<Option<u64>> {
    let present = r.read_u8()?;
    let v = r.read_u64::<LE>()?;
    Ok((present != 0).then_some(v))
}

pub fn write_examples<'a>(w: &mut impl Write, examples: impl ExactSizeIterator<Item = &'a Arc<Example>>) -> io::Result<()> {
    w.write_u64::<LE>(examples.len() as u64)?;
    for e in examples {
        w.write_u64::<LE>(e.seq)?;
        w.write_u64::<LE>(e.tactic.0)?;
        w.write_u32::<LE>(e.features.len() as u32)?;
        for (id, c) in e.features.iter() {
            w.write_u32::<LE>(id)?;
            w.write_u32::<LE>(c)?;
        }
    }
    Ok(())
}

pub fn read_examples(r: &mut impl Read) -> Result<Vec<Arc<Example>>> {
    let n = r.read_u64::<LE>()?;
    let mut out = Vec::new();
    for _ in 0..n {
        let seq = r.read_u64::<LE>()?;
        let tactic = TacticHash(r.read_u64::<LE>()?);
        let nf = r.read_u32::<LE>()?;
        let mut pairs = Vec::new();
        for _ in 0..nf {
            pairs.push((r.read_u32::<LE>()?, r.read_u32::<LE>()?));
        }
        out.push(Arc::new(Example::new(FeatureVector::from_counts(pairs), tactic, seq)));
    }
    Ok(out)
}

impl LshfModel {
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        write_header(w, LSHF_MAGIC)?;
        w.write_u64::<LE>(self.forest.seed())?;
        w.write_u32::<LE>(self.forest.n_tries() as u32)?;
        w.write_u32::<LE>(self.forest.max_depth() as u32)?;
        w.write_u8(kind_code(self.resort))?;
        write_examples(w, self.forest.examples().iter())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        read_header(r, LSHF_MAGIC)?;
        let seed = r.read_u64::<LE>()?;
        let n = r.read_u32::<LE>()? as usize;
        let depth = r.read_u32::<LE>()? as usize;
        if n == 0 || depth == 0 || depth > crate::lshf::MAX_PATH_BITS {
            return Err(SnapshotError::Corrupt(format!("tries {n}, max depth {depth}")));
        }
        let resort = kind_from(r.read_u8()?)?;
        let mut forest = LshForest::new(seed, n, depth);
        for e in read_examples(r)? {
            forest = forest.insert(e);
        }
        Ok(LshfModel { forest, resort })
    }
}

impl ExactKnn {
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        write_header(w, KNN_MAGIC)?;
        w.write_u8(kind_code(Some(self.kind)))?;
        write_opt_u64(w, self.window.map(|x| x as u64))?;
        write_examples(w, self.examples().iter())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        use crate::model::OnlineModel;
        read_header(r, KNN_MAGIC)?;
        let kind = kind_from(r.read_u8()?)?.ok_or_else(|| SnapshotError::Corrupt("missing similarity".into()))?;
        let window = read_opt_u64(r)?.map(|x| x as usize);
        let mut m = ExactKnn::new(kind, window);
        for e in read_examples(r)? {
            m = m.insert(e);
        }
        Ok(m)
    }
}

impl RandomForest {
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        write_header(w, RFOREST_MAGIC)?;
        w.write_u32::<LE>(self.max_trees() as u32)?;
        w.write_f64::<LE>(self.policy().impurity_threshold)?;
        write_opt_u64(w, self.policy().max_leaf_examples.map(|x| x as u64))?;
        let (key, counter) = self.rng().state();
        w.write_u64::<LE>(key)?;
        w.write_u64::<LE>(counter)?;
        w.write_u64::<LE>(self.inserts())?;

        let mut store: BTreeMap<u64, Arc<Example>> = BTreeMap::new();
        fn gather(t: &DecisionTree, store: &mut BTreeMap<u64, Arc<Example>>) {
            match t {
                DecisionTree::Leaf { examples, .. } => {
                    for e in examples.iter_newest() {
                        store.entry(e.seq).or_insert_with(|| Arc::clone(e));
                    }
                }
                DecisionTree::Node { left, right, .. } => {
                    gather(left, store);
                    gather(right, store);
                }
            }
        }
        self.trees().iter().for_each(|t| gather(t, &mut store));
        write_examples(w, store.values())?;
        let index: HashMap<u64, u32> = store.keys().enumerate().map(|(i, s)| (*s, i as u32)).collect();

        fn write_tree(w: &mut impl Write, t: &DecisionTree, index: &HashMap<u64, u32>) -> io::Result<()> {
            match t {
                DecisionTree::Leaf { label, examples, .. } => {
                    w.write_u8(0)?;
                    w.write_u64::<LE>(label.0)?;
                    w.write_u32::<LE>(examples.len() as u32)?;
                    for e in examples.to_vec() {
                        w.write_u32::<LE>(index[&e.seq])?;
                    }
                }
                DecisionTree::Node { rule, left, right } => {
                    w.write_u8(1)?;
                    w.write_u32::<LE>(rule.feature)?;
                    write_tree(w, left, index)?;
                    write_tree(w, right, index)?;
                }
            }
            Ok(())
        }
        w.write_u32::<LE>(self.trees().len() as u32)?;
        for t in self.trees() {
            write_tree(w, t, &index)?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        read_header(r, RFOREST_MAGIC)?;
        let max_trees = r.read_u32::<LE>()? as usize;
        let impurity_threshold = r.read_f64::<LE>()?;
        let max_leaf_examples = read_opt_u64(r)?.map(|x| x as usize);
        let rng = SplitRng::from_state(r.read_u64::<LE>()?, r.read_u64::<LE>()?);
        let inserts = r.read_u64::<LE>()?;
        let store = read_examples(r)?;

        fn read_tree(r: &mut impl Read, store: &[Arc<Example>], depth: usize) -> Result<DecisionTree> {
            if depth > 1 << 16 {
                return Err(SnapshotError::Corrupt("tree too deep".into()));
            }
            match r.read_u8()? {
                0 => {
                    let label = TacticHash(r.read_u64::<LE>()?);
                    let n = r.read_u32::<LE>()?;
                    let mut examples = ExampleList::default();
                    for _ in 0..n {
                        let i = r.read_u32::<LE>()? as usize;
                        let e = store.get(i).ok_or_else(|| SnapshotError::Corrupt(format!("example index {i}")))?;
                        examples.push(Arc::clone(e));
                    }
                    Ok(DecisionTree::leaf(label, examples))
                }
                1 => {
                    let rule = SplitRule { feature: r.read_u32::<LE>()? };
                    let left = Arc::new(read_tree(r, store, depth + 1)?);
                    let right = Arc::new(read_tree(r, store, depth + 1)?);
                    Ok(DecisionTree::Node { rule, left, right })
                }
                t => Err(SnapshotError::Corrupt(format!("tree tag {t}"))),
            }
        }
        let n_trees = r.read_u32::<LE>()?;
        let mut trees = Vec::new();
        for _ in 0..n_trees {
            trees.push(Arc::new(read_tree(r, &store, 0)?));
        }
        if max_trees == 0 || !(0.0..=1.0).contains(&impurity_threshold) {
            return Err(SnapshotError::Corrupt("forest hyperparameters out of range".into()));
        }
        Ok(RandomForest::from_parts(
            trees,
            max_trees,
            LeafPolicy { impurity_threshold, max_leaf_examples },
            rng,
            inserts,
        ))
    }
}

impl Model {
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        match self {
            Model::KnnExact(m) => m.write_to(w),
            Model::Lshf(m) => m.write_to(w),
            Model::RForest(m) => m.write_to(w),
        }
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        let mut chained = Cursor::new(magic.to_vec()).chain(r);
        match magic {
            LSHF_MAGIC => Ok(Model::Lshf(LshfModel::read_from(&mut chained)?)),
            RFOREST_MAGIC => Ok(Model::RForest(RandomForest::read_from(&mut chained)?)),
            KNN_MAGIC => Ok(Model::KnnExact(ExactKnn::read_from(&mut chained)?)),
            found => Err(SnapshotError::BadMagic { expected: LSHF_MAGIC, found }),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

pub fn write_interner(w: &mut impl Write, interner: &FeatureInterner) -> io::Result<()> {
    w.write_u32::<LE>(interner.len() as u32)?;
    for (key, df) in interner.keys().zip(interner.doc_counts()) {
        w.write_u8(key.class.code())?;
        w.write_u8(match key.origin {
            None => 0,
            Some(Origin::Hypothesis) => 1,
            Some(Origin::Goal) => 2,
        })?;
        write_str(w, &key.text)?;
        w.write_u32::<LE>(df)?;
    }
    w.write_u64::<LE>(interner.total_examples())
}

pub fn read_interner(r: &mut impl Read) -> Result<FeatureInterner> {
    let n = r.read_u32::<LE>()?;
    let mut keys = Vec::new();
    let mut dfs = Vec::new();
    for _ in 0..n {
        let class = FeatureClass::from_code(r.read_u8()?).ok_or_else(|| SnapshotError::Corrupt("feature class".into()))?;
        let origin = match r.read_u8()? {
            0 => None,
            1 => Some(Origin::Hypothesis),
            2 => Some(Origin::Goal),
            o => return Err(SnapshotError::Corrupt(format!("origin {o}"))),
        };
        let text = read_str(r)?;
        keys.push(FeatureKey::new(class, origin, &text));
        dfs.push(r.read_u32::<LE>()?);
    }
    let total = r.read_u64::<LE>()?;
    Ok(FeatureInterner::from_parts(keys, dfs, total))
}

/// Everything the CLI needs to resume: featurization settings, the feature
/// table with its statistics, tactic names, and the model.
#[derive(Debug, Clone)]
pub struct Session {
    pub features: FeatureConfig,
    pub interner: FeatureInterner,
    pub tactics: BTreeMap<TacticHash, String>,
    pub model: Model,
}

impl Session {
    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        write_header(w, SESSION_MAGIC)?;
        w.write_u8(self.features.to_bits())?;
        write_interner(w, &self.interner)?;
        w.write_u32::<LE>(self.tactics.len() as u32)?;
        for (h, name) in &self.tactics {
            w.write_u64::<LE>(h.0)?;
            write_str(w, name)?;
        }
        self.model.write_to(w)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        read_header(r, SESSION_MAGIC)?;
        let features = FeatureConfig::from_bits(r.read_u8()?);
        features.validate().map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
        let interner = read_interner(r)?;
        let n = r.read_u32::<LE>()?;
        let mut tactics = BTreeMap::new();
        for _ in 0..n {
            let h = TacticHash(r.read_u64::<LE>()?);
            tactics.insert(h, read_str(r)?);
        }
        let model = Model::read_from(r)?;
        Ok(Session { features, interner, tactics, model })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OnlineModel;

    fn ex(ids: &[u32], t: u64, seq: u64) -> Arc<Example> {
        Arc::new(Example::new(FeatureVector::from_counts(ids.iter().map(|&i| (i, i % 3 + 1))), TacticHash(t), seq))
    }

    fn corpus() -> Vec<Arc<Example>> {
        (0..120u64)
            .map(|s| ex(&[(s % 11) as u32, 11 + (s % 7) as u32, 30 + (s % 4) as u32], s % 6, s))
            .collect()
    }

    fn interner() -> FeatureInterner {
        let mut i = FeatureInterner::new();
        for x in 0..40 {
            i.intern(FeatureKey::new(FeatureClass::Original, None, &format!("f{x}")));
        }
        for e in corpus() {
            i = i.record_example(&e.features).unwrap();
        }
        i
    }

    fn roundtrip_predictions(m: Model) {
        let stats = interner();
        let mut trained = m;
        for e in corpus() {
            trained = trained.insert(e);
        }
        let bytes = trained.to_bytes();
        let back = Model::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        for q in corpus().iter().step_by(7) {
            assert_eq!(trained.predict(&q.features, &stats, 10), back.predict(&q.features, &stats, 10));
        }
    }

    #[test]
    fn lshf_roundtrip() {
        roundtrip_predictions(Model::Lshf(LshfModel { forest: LshForest::new(5, 4, 12), resort: Some(SimilarityKind::TfIdfWeighted) }));
    }

    #[test]
    fn rforest_roundtrip() {
        roundtrip_predictions(Model::RForest(RandomForest::new(30, 0.3, 2)));
    }

    #[test]
    fn rforest_roundtrip_continues_identically() {
        let mut f = RandomForest::new(30, 0.3, 2);
        for e in corpus() {
            f = f.insert(e);
        }
        let mut back = RandomForest::read_from(&mut f.to_bytes_vec().as_slice()).unwrap();
        for s in 200..260u64 {
            let e = ex(&[(s % 9) as u32, 20], s % 4, s);
            f = f.insert(Arc::clone(&e));
            back = back.insert(e);
        }
        assert_eq!(f.to_bytes_vec(), back.to_bytes_vec());
    }

    #[test]
    fn knn_roundtrip() {
        roundtrip_predictions(Model::KnnExact(ExactKnn::new(SimilarityKind::Plain, Some(50))));
    }

    #[test]
    fn session_roundtrip() {
        let mut tactics = BTreeMap::new();
        tactics.insert(TacticHash::of("auto"), "auto".to_string());
        let s = Session {
            features: FeatureConfig::ALL,
            interner: interner(),
            tactics,
            model: Model::Lshf(LshfModel::default()),
        };
        let bytes = s.to_bytes();
        let back = Session::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.interner.total_examples(), 120);
    }

    #[test]
    fn rejects_bad_input() {
        let bytes = Model::Lshf(LshfModel::default()).to_bytes();
        assert!(matches!(Model::read_from(&mut &bytes[..8]), Err(SnapshotError::Truncated)));
        assert!(matches!(Model::read_from(&mut &b"NOPE\x01\x00"[..]), Err(SnapshotError::BadMagic { .. })));
        let mut wrong = bytes.clone();
        wrong[4] = 9;
        assert!(matches!(Model::read_from(&mut wrong.as_slice()), Err(SnapshotError::UnsupportedVersion(9))));
    }

    impl RandomForest {
        fn to_bytes_vec(&self) -> Vec<u8> {
            let mut v = Vec::new();
            self.write_to(&mut v).unwrap();
            v
        }
    }
}
