//! Term ASTs and their s-expression syntax.
//!
//! A term is either an identifier or an application of a head term to one or
//! more arguments: `x`, `(f x)`, `((f a) (g b c))`. Binders are encoded as
//! ordinary applications headed by the binder name, e.g. `(Lambda x (f x))`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Atom(String),
    /// Head applied to a non-empty argument list.
    App(Box<Term>, Vec<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {reason}")]
    Syntax { position: usize, reason: String },
    #[error("application without arguments at byte {position}")]
    EmptyApplication { position: usize },
    #[error("empty input")]
    EmptyInput,
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Term {
        Term::Atom(name.into())
    }

    /// Builds an application. Panics if `args` is empty.
    pub fn app(head: Term, args: Vec<Term>) -> Term {
        assert!(!args.is_empty(), "application needs at least one argument");
        Term::App(Box::new(head), args)
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Term::Atom(_))
    }

    /// Number of atom occurrences.
    pub fn size(&self) -> usize {
        match self {
            Term::Atom(_) => 1,
            Term::App(h, args) => h.size() + args.iter().map(Term::size).sum::<usize>(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(name) => f.write_str(name),
            Term::App(head, args) => {
                write!(f, "({head}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl std::str::FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_term(s)
    }
}

fn is_atom_byte(b: u8) -> bool {
    !(b.is_ascii_whitespace() || b == b'(' || b == b')')
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn syntax(&self, reason: &str) -> ParseError {
        ParseError::Syntax { position: self.pos, reason: reason.to_string() }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b')') => Err(self.syntax("unexpected ')'")),
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                self.skip_ws();
                if self.peek() == Some(b')') {
                    return Err(ParseError::EmptyApplication { position: open });
                }
                let head = self.term()?;
                let mut args = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => {
                            return Err(ParseError::Syntax {
                                position: open,
                                reason: "unclosed '('".to_string(),
                            })
                        }
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => args.push(self.term()?),
                    }
                }
                if args.is_empty() {
                    return Err(ParseError::EmptyApplication { position: open });
                }
                Ok(Term::App(Box::new(head), args))
            }
            Some(_) => {
                let start = self.pos;
                let bytes = self.src.as_bytes();
                while self.pos < bytes.len() && is_atom_byte(bytes[self.pos]) {
                    self.pos += 1;
                }
                Ok(Term::Atom(self.src[start..self.pos].to_string()))
            }
        }
    }
}

/// Parses a single term; trailing non-whitespace input is an error.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut p = Parser { src: text, pos: 0 };
    let t = p.term()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.syntax("trailing input after term"));
    }
    Ok(t)
}

/// Hypotheses and goal at one proof step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofState {
    hypotheses: Vec<(String, Term)>,
    goal: Term,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("duplicate hypothesis name `{0}`")]
pub struct DuplicateHypothesis(pub String);

impl ProofState {
    pub fn new(hypotheses: Vec<(String, Term)>, goal: Term) -> Result<Self, DuplicateHypothesis> {
        let mut seen = std::collections::HashSet::new();
        for (name, _) in &hypotheses {
            if !seen.insert(name.as_str()) {
                return Err(DuplicateHypothesis(name.clone()));
            }
        }
        Ok(ProofState { hypotheses, goal })
    }

    pub fn goal(&self) -> &Term {
        &self.goal
    }

    pub fn hypotheses(&self) -> &[(String, Term)] {
        &self.hypotheses
    }
}
