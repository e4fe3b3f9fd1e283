//! Depth-first proof search for propositional definite clauses with the
//! continuations made explicit.
//!
//! The success continuation is a stack of frames still to run; each goal that
//! matched some clause leaves a choice point holding the continuation to
//! restore and the clauses not yet tried. Failure pops choice points until one
//! has an alternative, which is swapped in as the new continuation.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bases::{derives, AtomUniverse, AtomicRule, Base, BaseError, Clause};
use crate::syntax::{Atom, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Atom(#[from] SyntaxError),
    #[error(transparent)]
    Base(#[from] BaseError),
}

/// `b1 & ... & bn -> head`, or a fact when the body is empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramClause {
    pub body: Vec<Atom>,
    pub head: Atom,
}

impl fmt::Display for ProgramClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.body.is_empty() {
            return write!(f, "{}", self.head);
        }
        let body: Vec<&str> = self.body.iter().map(|a| a.name()).collect();
        write!(f, "{} -> {}", body.join(" & "), self.head)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub clauses: Vec<ProgramClause>,
}

impl Program {
    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.clauses
            .iter()
            .flat_map(|c| c.body.iter().chain(std::iter::once(&c.head)))
            .cloned()
            .collect()
    }

    /// Each clause as the rule `((=> b1), ..., (=> bn) => head)`.
    pub fn to_base(&self, extra_atoms: &[Atom]) -> Result<Base, SearchError> {
        let mut atoms = self.atoms();
        atoms.extend(extra_atoms.iter().cloned());
        let u = AtomUniverse::new(atoms)?;
        let rules = self.clauses.iter().map(|c| {
            AtomicRule::new(c.body.iter().cloned().map(Clause::plain), c.head.clone())
        });
        Ok(Base::new(u, rules)?)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// One clause per line: `a1 & a2 -> a` (or `a1, a2 -> a`), facts as bare atoms.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_program(text: &str) -> Result<Program, SearchError> {
    let mut clauses = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |msg: String| SearchError::Parse { line: n + 1, msg };
        let (body, head) = match t.split_once("->") {
            Some((b, h)) => (b.trim(), h.trim()),
            None => ("", t),
        };
        let head = Atom::new(head).map_err(|e| err(e.to_string()))?;
        let body = if body.is_empty() {
            if t.contains("->") {
                return Err(err("empty clause body".into()));
            }
            Vec::new()
        } else {
            body.split(['&', ','])
                .map(|a| Atom::new(a.trim()).map_err(|e| err(e.to_string())))
                .collect::<Result<_, _>>()?
        };
        clauses.push(ProgramClause { body, head });
    }
    Ok(Program { clauses })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SearchEvent {
    /// Resolving `goal` against clause `clause`.
    TryClause { goal: Atom, clause: usize },
    /// `goal` has no (further) way to succeed.
    Fail { goal: Atom },
    Succeed { goal: Atom },
    /// Backtracking into `goal`: clause `from` failed, clause `to` is next.
    SwapContinuation { goal: Atom, from: usize, to: usize },
    /// `goal` lies beyond the depth cap.
    Cutoff { goal: Atom },
}

impl fmt::Display for SearchEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchEvent::TryClause { goal, clause } => write!(f, "try {goal} with clause {clause}"),
            SearchEvent::Fail { goal } => write!(f, "fail {goal}"),
            SearchEvent::Succeed { goal } => write!(f, "succeed {goal}"),
            SearchEvent::SwapContinuation { goal, from, to } => {
                write!(f, "swap continuation for {goal}: clause {from} -> clause {to}")
            }
            SearchEvent::Cutoff { goal } => write!(f, "cutoff at {goal}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Proved,
    Failed,
    /// Failed, but some branch was cut off by the depth cap.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Frame {
    Solve(Atom, usize),
    Done(Atom),
}

struct ChoicePoint {
    goal: Atom,
    depth: usize,
    clauses: Vec<usize>,
    tried: usize,
    cont: Vec<Frame>,
}

/// Searches for `goal`, trying clauses in program order, never deeper than `cap`.
pub fn solve(p: &Program, goal: &Atom, cap: usize) -> (Outcome, Vec<SearchEvent>) {
    let mut trace = Vec::new();
    let mut cont = vec![Frame::Solve(goal.clone(), 0)];
    let mut choices: Vec<ChoicePoint> = Vec::new();
    let mut cut = false;

    fn enter(cp: &ChoicePoint, p: &Program, trace: &mut Vec<SearchEvent>) -> Vec<Frame> {
        let i = cp.clauses[cp.tried - 1];
        trace.push(SearchEvent::TryClause {
            goal: cp.goal.clone(),
            clause: i,
        });
        let mut next = cp.cont.clone();
        next.push(Frame::Done(cp.goal.clone()));
        next.extend(p.clauses[i].body.iter().rev().map(|b| Frame::Solve(b.clone(), cp.depth + 1)));
        next
    }

    loop {
        let failed = match cont.pop() {
            None => return (Outcome::Proved, trace),
            Some(Frame::Done(g)) => {
                trace.push(SearchEvent::Succeed { goal: g });
                false
            }
            Some(Frame::Solve(g, d)) => {
                let clauses: Vec<usize> = (0..p.clauses.len()).filter(|&i| p.clauses[i].head == g).collect();
                if d > cap {
                    trace.push(SearchEvent::Cutoff { goal: g.clone() });
                    trace.push(SearchEvent::Fail { goal: g });
                    cut = true;
                    true
                } else if clauses.is_empty() {
                    trace.push(SearchEvent::Fail { goal: g });
                    true
                } else {
                    let cp = ChoicePoint {
                        goal: g,
                        depth: d,
                        clauses,
                        tried: 1,
                        cont: std::mem::take(&mut cont),
                    };
                    cont = enter(&cp, p, &mut trace);
                    choices.push(cp);
                    false
                }
            }
        };
        if failed {
            loop {
                let Some(cp) = choices.last_mut() else {
                    let out = if cut { Outcome::Unknown } else { Outcome::Failed };
                    return (out, trace);
                };
                if cp.tried < cp.clauses.len() {
                    trace.push(SearchEvent::SwapContinuation {
                        goal: cp.goal.clone(),
                        from: cp.clauses[cp.tried - 1],
                        to: cp.clauses[cp.tried],
                    });
                    cp.tried += 1;
                    cont = enter(cp, p, &mut trace);
                    break;
                }
                let cp = choices.pop().expect("nonempty");
                trace.push(SearchEvent::Fail { goal: cp.goal });
            }
        }
    }
}

/// Every `Fail` is followed by a swap, another `Fail`, or the end of the trace.
pub fn trace_well_formed(trace: &[SearchEvent]) -> bool {
    trace.windows(2).all(|w| match (&w[0], &w[1]) {
        (SearchEvent::Fail { .. }, next) => {
            matches!(next, SearchEvent::Fail { .. } | SearchEvent::SwapContinuation { .. })
        }
        _ => true,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgreementRow {
    pub goal: Atom,
    pub solve: Outcome,
    pub derives: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgreementReport {
    pub rows: Vec<AgreementRow>,
    /// Goals where search and derivability give opposite definite answers.
    pub disagreements: Vec<Atom>,
    /// Goals where search hit the depth cap.
    pub unknown: Vec<Atom>,
}

impl AgreementReport {
    pub fn agrees(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Runs [`solve`] and base derivability on every atom of the program, with a
/// depth cap equal to the number of atoms (enough for acyclic programs).
pub fn solve_agrees_with_derivability(p: &Program) -> Result<AgreementReport, SearchError> {
    let base = p.to_base(&[])?;
    let cap = base.universe().len();
    let mut report = AgreementReport {
        rows: Vec::new(),
        disagreements: Vec::new(),
        unknown: Vec::new(),
    };
    for g in base.universe().atoms() {
        let (outcome, _) = solve(p, g, cap);
        let d = derives(&base, &[], g)?;
        match (outcome, d) {
            (Outcome::Proved, false) | (Outcome::Failed, true) => report.disagreements.push(g.clone()),
            (Outcome::Unknown, _) => report.unknown.push(g.clone()),
            _ => {}
        }
        report.rows.push(AgreementRow {
            goal: g.clone(),
            solve: outcome,
            derives: d,
        });
    }
    Ok(report)
}
