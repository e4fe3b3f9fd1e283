//! Formulas and sequents of intuitionistic propositional logic.
//!
//! The concrete syntax is ASCII only:
//!
//! ```text
//! imp  := or ('->' imp)?
//! or   := and ('|' and)*
//! and  := unit ('&' unit)*
//! unit := atom | 'bot' | 'top' | '(' imp ')'
//! ```
//!
//! Negation is not a connective; write `phi -> bot`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Prefix reserved for atoms introduced by flattening.
pub const FRESH_PREFIX: char = '#';

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("syntax error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("atom name `{0}` uses the reserved prefix `#`")]
    ReservedAtom(String),
    #[error("invalid atom name `{0}`")]
    InvalidAtom(String),
}

/// A propositional atom, identified by its name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom(Arc<str>);

impl Atom {
    /// Validates a user-facing atom name (`[a-z][a-zA-Z0-9_]*`, not a keyword).
    pub fn new(name: &str) -> Result<Atom, SyntaxError> {
        if name.starts_with(FRESH_PREFIX) {
            return Err(SyntaxError::ReservedAtom(name.to_string()));
        }
        if !is_atom_name(name) || name == "bot" || name == "top" {
            return Err(SyntaxError::InvalidAtom(name.to_string()));
        }
        Ok(Atom(Arc::from(name)))
    }

    /// The `k`-th flattening atom, rendered `#k`.
    pub fn fresh(k: usize) -> Atom {
        Atom(Arc::from(format!("{FRESH_PREFIX}{k}")))
    }

    /// Accepts either a user atom name or a `#k` flattening atom.
    pub fn parse_any(name: &str) -> Result<Atom, SyntaxError> {
        match name.strip_prefix(FRESH_PREFIX) {
            Some(digits) if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) => {
                Ok(Atom(Arc::from(name)))
            }
            Some(_) => Err(SyntaxError::InvalidAtom(name.to_string())),
            None => Atom::new(name),
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_fresh(&self) -> bool {
        self.0.starts_with(FRESH_PREFIX)
    }
}

fn is_atom_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(Atom),
    Top,
    Bot,
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
}

impl Formula {
    /// Builds an atom formula; panics on an invalid name. Meant for literals in code.
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(Atom::parse_any(name).expect("invalid atom literal"))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn imp(l: Formula, r: Formula) -> Formula {
        Formula::Imp(Box::new(l), Box::new(r))
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Atom(_))
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => vec![],
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => vec![l, r],
        }
    }

    /// Number of binary connectives plus constants `top`/`bot`.
    pub fn connectives(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Top | Formula::Bot => 1,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                1 + l.connectives() + r.connectives()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 0,
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                1 + l.depth().max(r.depth())
            }
        }
    }

    /// Atoms occurring in the formula, in order of first occurrence.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::Atom(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            Formula::Top | Formula::Bot => {}
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Imp(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, c: &Formula, min: u8) -> fmt::Result {
            if c.precedence() < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Top => f.write_str("top"),
            Formula::Bot => f.write_str("bot"),
            // `->` associates right, `&` and `|` associate left.
            Formula::Imp(l, r) => {
                child(f, l, 2)?;
                f.write_str(" -> ")?;
                child(f, r, 1)
            }
            Formula::Or(l, r) => {
                child(f, l, 2)?;
                f.write_str(" | ")?;
                child(f, r, 3)
            }
            Formula::And(l, r) => {
                child(f, l, 3)?;
                f.write_str(" & ")?;
                child(f, r, 4)
            }
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl serde::Serialize for Atom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl serde::Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `antecedents |- succedent`, with duplicate antecedents collapsed.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Sequent {
    antecedents: Vec<Formula>,
    succedent: Formula,
}

impl Sequent {
    pub fn new(antecedents: impl IntoIterator<Item = Formula>, succedent: Formula) -> Sequent {
        let mut seen = HashSet::new();
        let antecedents = antecedents
            .into_iter()
            .filter(|f| seen.insert(f.clone()))
            .collect();
        Sequent {
            antecedents,
            succedent,
        }
    }

    pub fn antecedents(&self) -> &[Formula] {
        &self.antecedents
    }

    pub fn succedent(&self) -> &Formula {
        &self.succedent
    }

    pub fn formulas(&self) -> impl Iterator<Item = &Formula> {
        self.antecedents.iter().chain(std::iter::once(&self.succedent))
    }

    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        for f in self.formulas() {
            f.collect_atoms(&mut out);
        }
        out
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.antecedents.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        if self.antecedents.is_empty() {
            write!(f, "|- {}", self.succedent)
        } else {
            write!(f, " |- {}", self.succedent)
        }
    }
}

/// All subformulas of the sequent, post-order by first occurrence.
pub fn subformulas(s: &Sequent) -> Vec<Formula> {
    fn walk(f: &Formula, seen: &mut HashSet<Formula>, out: &mut Vec<Formula>) {
        for c in f.children() {
            walk(c, seen, out);
        }
        if seen.insert(f.clone()) {
            out.push(f.clone());
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for f in s.formulas() {
        walk(f, &mut seen, &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Arrow,
    Bar,
    Amp,
    LParen,
    RParen,
    Comma,
    Turnstile,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                Tok::Arrow
            }
            b'|' if bytes.get(i + 1) == Some(&b'-') => {
                i += 2;
                Tok::Turnstile
            }
            b'|' => {
                i += 1;
                Tok::Bar
            }
            b'&' => {
                i += 1;
                Tok::Amp
            }
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            c if c.is_ascii_alphanumeric() || c == b'_' || c == b'#' => {
                i += 1;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(text[start..i].to_string())
            }
            _ => {
                return Err(SyntaxError::Parse {
                    pos: i,
                    msg: format!("unexpected character `{}`", text[i..].chars().next().unwrap()),
                })
            }
        };
        out.push((start, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, SyntaxError> {
        Ok(Parser {
            toks: lex(text)?,
            idx: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.idx).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.idx).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn imp(&mut self) -> Result<Formula, SyntaxError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.imp()?;
            Ok(Formula::imp(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Bar) {
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, SyntaxError> {
        let mut lhs = self.unit()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.unit()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unit(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.idx += 1;
                let f = self.imp()?;
                if !self.eat(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                Ok(f)
            }
            Some(Tok::Ident(name)) => {
                let f = match name.as_str() {
                    "bot" => Formula::Bot,
                    "top" => Formula::Top,
                    _ => Formula::Atom(Atom::new(&name).map_err(|e| match e {
                        SyntaxError::InvalidAtom(n) => SyntaxError::Parse {
                            pos: self.pos(),
                            msg: format!("invalid atom name `{n}`"),
                        },
                        other => other,
                    })?),
                };
                self.idx += 1;
                Ok(f)
            }
            Some(t) => self.err(format!("unexpected token {t:?}")),
            None => self.err("unexpected end of input"),
        }
    }

    fn finish(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.err(format!("trailing input at {t:?}")),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser::new(text)?;
    let f = p.imp()?;
    p.finish()?;
    Ok(f)
}

/// Parses `phi1, phi2 |- psi`; the antecedent list may be empty (`|- psi`).
pub fn parse_sequent(text: &str) -> Result<Sequent, SyntaxError> {
    let mut p = Parser::new(text)?;
    let mut ants = Vec::new();
    if !p.eat(&Tok::Turnstile) {
        loop {
            ants.push(p.imp()?);
            if p.eat(&Tok::Comma) {
                continue;
            }
            if p.eat(&Tok::Turnstile) {
                break;
            }
            return p.err("expected `,` or `|-`");
        }
    }
    let succ = p.imp()?;
    p.finish()?;
    Ok(Sequent::new(ants, succ))
}

impl std::str::FromStr for Formula {
    type Err = SyntaxError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

impl std::str::FromStr for Sequent {
    type Err = SyntaxError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sequent(s)
    }
}
