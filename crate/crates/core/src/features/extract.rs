//! Feature classes over a single term.
//!
//! Extraction works on the identifier tree of a term: an application's head
//! identifier becomes the parent of its arguments' head identifiers, so
//! `(f (g x))` is the chain `f -> g -> x`. A node is in head position
//! (`AppFun`) when it is applied to arguments and in argument position
//! (`AppArg`) otherwise.

use crate::term::Term;

const APP_FUN: &str = "AppFun";
const APP_ARG: &str = "AppArg";

struct Node<'a> {
    name: &'a str,
    children: Vec<Node<'a>>,
}

impl<'a> Node<'a> {
    fn build(t: &'a Term) -> Node<'a> {
        match t {
            Term::Atom(name) => Node { name, children: Vec::new() },
            Term::App(head, args) => {
                let mut n = Node::build(head);
                n.children.extend(args.iter().map(Node::build));
                n
            }
        }
    }

    fn role(&self) -> &'static str {
        if self.children.is_empty() {
            APP_ARG
        } else {
            APP_FUN
        }
    }

    fn label(&self) -> String {
        format!("{}:{}", self.name, self.role())
    }

    fn visit<F: FnMut(&Node<'a>)>(&self, f: &mut F) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

/// Identifiers and parent-child identifier pairs.
pub fn extract_original(t: &Term) -> Vec<String> {
    let mut out = Vec::new();
    Node::build(t).visit(&mut |n| {
        out.push(n.name.to_string());
        for c in &n.children {
            out.push(format!("{}-{}", n.name, c.name));
        }
    });
    out
}

/// Top-down walks of one, two and three nodes, starting at every node.
pub fn extract_walks(t: &Term) -> Vec<String> {
    let mut out = Vec::new();
    Node::build(t).visit(&mut |n| {
        let top = n.label();
        out.push(top.clone());
        for c in &n.children {
            let mid = c.label();
            out.push(format!("{top}({mid})"));
            for g in &c.children {
                out.push(format!("{top}({mid}({}))", g.label()));
            }
        }
    });
    out
}

/// Root-to-leaf walks with inner nodes abstracted to their role.
pub fn extract_vertical(t: &Term) -> Vec<String> {
    fn go(n: &Node<'_>, prefix: &mut String, depth: usize, out: &mut Vec<String>) {
        if n.children.is_empty() {
            let mut s = prefix.clone();
            s.push_str(&n.label());
            s.extend(std::iter::repeat_n(')', depth));
            out.push(s);
            return;
        }
        let len = prefix.len();
        prefix.push_str(APP_FUN);
        prefix.push('(');
        for c in &n.children {
            go(c, prefix, depth + 1, out);
        }
        prefix.truncate(len);
    }
    let mut out = Vec::new();
    go(&Node::build(t), &mut String::new(), 0, &mut out);
    out
}

/// Shape of the term down to depth 2: atoms become `X`, applied nodes `Xk`
/// with `k` their argument count, and everything below depth 1 merges into
/// a single `X`.
pub fn extract_structure(t: &Term) -> String {
    let root = Node::build(t);
    if root.children.is_empty() {
        return "X".to_string();
    }
    let inner: Vec<String> = root
        .children
        .iter()
        .map(|c| {
            if c.children.is_empty() {
                "X".to_string()
            } else {
                format!("X{}(X)", c.children.len())
            }
        })
        .collect();
    format!("X{}({})", root.children.len(), inner.join(","))
}
