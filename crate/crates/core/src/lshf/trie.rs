use std::sync::Arc;

use crate::example::Example;

use super::hash::BitPath;

/// A stored example together with its path in the owning trie.
#[derive(Debug, Clone)]
pub struct Entry {
    pub example: Arc<Example>,
    pub path: BitPath,
}

/// Persistent binary trie. `Node(left, right)`: left is bit 0, right bit 1.
#[derive(Debug, Clone)]
pub enum Trie {
    Leaf(im::Vector<Entry>),
    Node(Arc<Trie>, Arc<Trie>),
}

impl Default for Trie {
    fn default() -> Self {
        Trie::Leaf(im::Vector::new())
    }
}

impl Trie {
    /// Returns the trie with `entry` added; `self` is left untouched.
    ///
    /// A non-empty leaf reached before the entry's path runs out is split
    /// and its entries re-descend by their own bit at that depth.
    pub fn insert(&self, entry: Entry, depth: usize) -> Trie {
        match self {
            Trie::Leaf(bucket) if bucket.is_empty() || depth >= entry.path.len() => {
                let mut bucket = bucket.clone();
                bucket.push_back(entry);
                Trie::Leaf(bucket)
            }
            Trie::Leaf(bucket) => {
                let (mut left, mut right) = (im::Vector::new(), im::Vector::new());
                for e in bucket {
                    if e.path.bit_or_zero(depth) {
                        right.push_back(e.clone());
                    } else {
                        left.push_back(e.clone());
                    }
                }
                Trie::Node(Arc::new(Trie::Leaf(left)), Arc::new(Trie::Leaf(right)))
                    .insert(entry, depth)
            }
            Trie::Node(l, r) => {
                if entry.path.bit_or_zero(depth) {
                    Trie::Node(Arc::clone(l), Arc::new(r.insert(entry, depth + 1)))
                } else {
                    Trie::Node(Arc::new(l.insert(entry, depth + 1)), Arc::clone(r))
                }
            }
        }
    }

    /// Every entry below this node, left subtree first.
    pub fn collect<F: FnMut(&Entry)>(&self, f: &mut F) {
        match self {
            Trie::Leaf(bucket) => bucket.iter().for_each(&mut *f),
            Trie::Node(l, r) => {
                l.collect(f);
                r.collect(f);
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Trie::Leaf(b) => b.len(),
            Trie::Node(l, r) => l.len() + r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            Trie::Leaf(_) => 0,
            Trie::Node(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Checks that every entry sits under the prefix of its own path
    /// (exhausted paths continue with 0 bits). Returns the first offender.
    pub fn find_misplaced(&self) -> Option<u64> {
        fn go(t: &Trie, prefix: &mut Vec<bool>) -> Option<u64> {
            match t {
                Trie::Leaf(b) => b
                    .iter()
                    .find(|e| prefix.iter().enumerate().any(|(d, &bit)| e.path.bit_or_zero(d) != bit))
                    .map(|e| e.example.seq),
                Trie::Node(l, r) => {
                    prefix.push(false);
                    let found = go(l, prefix);
                    prefix.pop();
                    if found.is_some() {
                        return found;
                    }
                    prefix.push(true);
                    let found = go(r, prefix);
                    prefix.pop();
                    found
                }
            }
        }
        go(self, &mut Vec::new())
    }
}
