//! Lambda terms, the call-by-value CPS transform, evaluation, and simple types.
//!
//! Syntax: `\x. e` (or `\x:A. e`), application by juxtaposition, parentheses.
//! Identifiers starting with an uppercase letter are constants; all others are
//! variables. Types are lowercase base names, `R` for the result type, and
//! right-associative `->`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// The constant the halting continuation hands the final value to.
pub const HALT: &str = "%halt";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CpsError {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("no value after {0} steps")]
    Timeout(usize),
    #[error("stuck at {0}")]
    Stuck(String),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("cannot match {0} with {1}")]
    Mismatch(String, String),
    #[error("infinite type: {0} occurs in {1}")]
    Occurs(String, String),
    #[error("type {0} already mentions the result type")]
    ResultInInput(String),
}

type Name = Arc<str>;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Name),
    /// A binder with an optional type annotation.
    Lam(Name, Option<SimpleType>, Box<Term>),
    App(Box<Term>, Box<Term>),
    Const(Name),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleType {
    Base(Name),
    Arrow(Box<SimpleType>, Box<SimpleType>),
    Result,
    /// A unification variable, only produced by inference.
    Var(u32),
}

impl SimpleType {
    pub fn base(name: &str) -> SimpleType {
        SimpleType::Base(name.into())
    }

    pub fn arrow(a: SimpleType, b: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(a), Box::new(b))
    }

    fn mentions_result(&self) -> bool {
        match self {
            SimpleType::Result => true,
            SimpleType::Arrow(a, b) => a.mentions_result() || b.mentions_result(),
            _ => false,
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Base(n) => write!(f, "{n}"),
            SimpleType::Result => f.write_str("R"),
            SimpleType::Var(i) => write!(f, "'t{i}"),
            SimpleType::Arrow(a, b) => {
                if matches!(**a, SimpleType::Arrow(..)) {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

impl fmt::Debug for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(x.into())
    }

    pub fn constant(c: &str) -> Term {
        Term::Const(c.into())
    }

    pub fn lam(x: &str, body: Term) -> Term {
        Term::Lam(x.into(), None, Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Term::Lam(..) | Term::Const(_))
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::Lam(_, _, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        fn go(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
            match t {
                Term::Var(x) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                Term::Const(_) => {}
                Term::Lam(x, _, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                Term::App(f, a) => {
                    go(f, bound, out);
                    go(a, bound, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Every variable name, bound or free.
    pub fn names(&self) -> HashSet<Name> {
        fn go(t: &Term, out: &mut HashSet<Name>) {
            match t {
                Term::Var(x) => {
                    out.insert(x.clone());
                }
                Term::Const(_) => {}
                Term::Lam(x, _, b) => {
                    out.insert(x.clone());
                    go(b, out);
                }
                Term::App(f, a) => {
                    go(f, out);
                    go(a, out);
                }
            }
        }
        let mut out = HashSet::new();
        go(self, &mut out);
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pos {
    Top,
    Fun,
    Arg,
}

fn fmt_term(t: &Term, pos: Pos, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match t {
        Term::Var(x) | Term::Const(x) => write!(f, "{x}"),
        Term::Lam(x, ty, b) => {
            let open = pos != Pos::Top;
            if open {
                f.write_str("(")?;
            }
            match ty {
                Some(ty) => write!(f, "\\{x}:{ty}. ")?,
                None => write!(f, "\\{x}. ")?,
            }
            fmt_term(b, Pos::Top, f)?;
            if open {
                f.write_str(")")?;
            }
            Ok(())
        }
        Term::App(l, r) => {
            if pos == Pos::Arg {
                f.write_str("(")?;
            }
            fmt_term(l, Pos::Fun, f)?;
            f.write_str(" ")?;
            fmt_term(r, Pos::Arg, f)?;
            if pos == Pos::Arg {
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, Pos::Top, f)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lambda,
    Dot,
    Colon,
    LParen,
    RParen,
    Arrow,
    Ident(String),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, CpsError> {
    let mut out = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        let tok = match c {
            c if c.is_whitespace() => {
                it.next();
                continue;
            }
            '\\' | 'λ' => Tok::Lambda,
            '.' => Tok::Dot,
            ':' => Tok::Colon,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '-' => {
                it.next();
                if it.peek().map(|p| p.1) != Some('>') {
                    return Err(CpsError::Parse {
                        pos: i,
                        msg: "expected `->`".into(),
                    });
                }
                Tok::Arrow
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&(_, c)) = it.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        it.next();
                    } else {
                        break;
                    }
                }
                out.push((i, Tok::Ident(s)));
                continue;
            }
            _ => {
                return Err(CpsError::Parse {
                    pos: i,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        it.next();
        out.push((i, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    k: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.k).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.k).map_or(self.end, |t| t.0)
    }

    fn err<T>(&self, msg: &str) -> Result<T, CpsError> {
        Err(CpsError::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), CpsError> {
        if self.peek() == Some(&t) {
            self.k += 1;
            Ok(())
        } else {
            self.err(&format!("expected {what}"))
        }
    }

    fn term(&mut self) -> Result<Term, CpsError> {
        let mut acc: Option<Term> = None;
        loop {
            let next = match self.peek() {
                Some(Tok::Lambda) => Some(self.lambda()?),
                Some(Tok::Ident(_)) | Some(Tok::LParen) => Some(self.atom()?),
                _ => None,
            };
            let Some(t) = next else { break };
            let was_lam = matches!(t, Term::Lam(..)) && self.toks[self.k - 1].1 != Tok::RParen;
            acc = Some(match acc {
                None => t,
                Some(f) => Term::app(f, t),
            });
            if was_lam {
                break;
            }
        }
        match acc {
            Some(t) => Ok(t),
            None => self.err("expected a term"),
        }
    }

    fn lambda(&mut self) -> Result<Term, CpsError> {
        self.expect(Tok::Lambda, "`\\`")?;
        let Some(Tok::Ident(x)) = self.peek().cloned() else {
            return self.err("expected a variable");
        };
        if x.starts_with(|c: char| c.is_ascii_uppercase()) {
            return self.err("cannot bind a constant");
        }
        self.k += 1;
        let ty = if self.peek() == Some(&Tok::Colon) {
            self.k += 1;
            Some(self.ty()?)
        } else {
            None
        };
        self.expect(Tok::Dot, "`.`")?;
        let body = self.term()?;
        Ok(Term::Lam(x.into(), ty, Box::new(body)))
    }

    fn atom(&mut self) -> Result<Term, CpsError> {
        match self.peek().cloned() {
            Some(Tok::Ident(x)) => {
                self.k += 1;
                if x.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Ok(Term::Const(x.into()))
                } else {
                    Ok(Term::Var(x.into()))
                }
            }
            Some(Tok::LParen) => {
                self.k += 1;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => self.err("expected a term"),
        }
    }

    fn ty(&mut self) -> Result<SimpleType, CpsError> {
        let a = match self.peek().cloned() {
            Some(Tok::Ident(x)) if x == "R" => {
                self.k += 1;
                SimpleType::Result
            }
            Some(Tok::Ident(x)) => {
                self.k += 1;
                SimpleType::Base(x.into())
            }
            Some(Tok::LParen) => {
                self.k += 1;
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                t
            }
            _ => return self.err("expected a type"),
        };
        if self.peek() == Some(&Tok::Arrow) {
            self.k += 1;
            Ok(SimpleType::arrow(a, self.ty()?))
        } else {
            Ok(a)
        }
    }

    fn finish(&self) -> Result<(), CpsError> {
        if self.k < self.toks.len() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }
}

pub fn parse_term(text: &str) -> Result<Term, CpsError> {
    let mut p = Parser {
        toks: lex(text)?,
        k: 0,
        end: text.len(),
    };
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

pub fn parse_type(text: &str) -> Result<SimpleType, CpsError> {
    let mut p = Parser {
        toks: lex(text)?,
        k: 0,
        end: text.len(),
    };
    let t = p.ty()?;
    p.finish()?;
    Ok(t)
}

/// Parses `x:A, C:B, ...` into a typing environment.
pub fn parse_env(text: &str) -> Result<HashMap<String, SimpleType>, CpsError> {
    let mut env = HashMap::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((x, ty)) = part.split_once(':') else {
            return Err(CpsError::Parse {
                pos: 0,
                msg: format!("expected `name:type` in `{part}`"),
            });
        };
        env.insert(x.trim().to_string(), parse_type(ty)?);
    }
    Ok(env)
}

/// Equality up to renaming of bound variables (annotations must agree).
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    fn go<'a>(a: &'a Term, b: &'a Term, la: &mut Vec<&'a Name>, lb: &mut Vec<&'a Name>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let ix = la.iter().rposition(|n| *n == x);
                let iy = lb.iter().rposition(|n| *n == y);
                match (ix, iy) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Lam(x, tx, bx), Term::Lam(y, ty, by)) => {
                if tx != ty {
                    return false;
                }
                la.push(x);
                lb.push(y);
                let r = go(bx, by, la, lb);
                la.pop();
                lb.pop();
                r
            }
            (Term::App(f, x), Term::App(g, y)) => go(f, g, la, lb) && go(x, y, la, lb),
            _ => false,
        }
    }
    go(a, b, &mut Vec::new(), &mut Vec::new())
}

/// Binder names that shadow an enclosing binder or a free variable of the term.
pub fn shadowed_binders(t: &Term) -> BTreeSet<Name> {
    fn go(t: &Term, scope: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match t {
            Term::Var(_) | Term::Const(_) => {}
            Term::Lam(x, _, b) => {
                if scope.contains(x) {
                    out.insert(x.clone());
                }
                scope.push(x.clone());
                go(b, scope, out);
                scope.pop();
            }
            Term::App(f, a) => {
                go(f, scope, out);
                go(a, scope, out);
            }
        }
    }
    let mut scope: Vec<Name> = t.free_vars().into_iter().collect();
    let mut out = BTreeSet::new();
    go(t, &mut scope, &mut out);
    out
}

struct Fresh {
    avoid: HashSet<Name>,
    next: usize,
}

impl Fresh {
    fn new(avoid: HashSet<Name>) -> Fresh {
        Fresh { avoid, next: 0 }
    }

    fn name(&mut self, prefix: &str) -> Name {
        loop {
            let n: Name = format!("{prefix}{}", self.next).into();
            self.next += 1;
            if self.avoid.insert(n.clone()) {
                return n;
            }
        }
    }
}

fn value_type(a: &SimpleType) -> SimpleType {
    match a {
        SimpleType::Arrow(x, y) => SimpleType::arrow(
            value_type(x),
            SimpleType::arrow(SimpleType::arrow(value_type(y), SimpleType::Result), SimpleType::Result),
        ),
        other => other.clone(),
    }
}

/// Continuation binders introduced by a transform, for trace marking.
type ContNames = HashSet<Name>;

fn transform(e: &Term, fresh: &mut Fresh, conts: &mut ContNames) -> Term {
    let k = fresh.name("k");
    let kv = || Term::Var(k.clone());
    let body = match e {
        Term::Var(_) | Term::Const(_) => Term::app(kv(), e.clone()),
        Term::Lam(x, ty, b) => {
            let inner = transform(b, fresh, conts);
            Term::app(kv(), Term::Lam(x.clone(), ty.as_ref().map(value_type), Box::new(inner)))
        }
        Term::App(f, a) => {
            let cf = transform(f, fresh, conts);
            let ca = transform(a, fresh, conts);
            let v1 = fresh.name("v");
            let v2 = fresh.name("v");
            conts.insert(v1.clone());
            conts.insert(v2.clone());
            let call = Term::app(Term::app(Term::Var(v1.clone()), Term::Var(v2.clone())), kv());
            let inner = Term::app(ca, Term::Lam(v2, None, Box::new(call)));
            Term::app(cf, Term::Lam(v1, None, Box::new(inner)))
        }
    };
    Term::Lam(k, None, Box::new(body))
}

fn transform_named(e: &Term) -> (Term, ContNames, Fresh) {
    let mut fresh = Fresh::new(e.names());
    let mut conts = ContNames::new();
    let t = transform(e, &mut fresh, &mut conts);
    (t, conts, fresh)
}

/// Call-by-value CPS: `[x] = \k. k x`, `[\x. e] = \k. k (\x. [e])`,
/// `[f e] = \k. [f] (\v1. [e] (\v2. v1 v2 k))`. Constants transform like variables.
/// Fresh names `k0, k1, ...` and `v0, v1, ...` skip every name already in `e`.
pub fn cps_transform(e: &Term) -> Term {
    transform_named(e).0
}

/// The CPS image of a value: constants stay put, `\x. b` becomes `\x. [b]`.
pub fn cps_value(v: &Term) -> Term {
    match v {
        Term::Lam(x, ty, b) => Term::Lam(x.clone(), ty.as_ref().map(value_type), Box::new(cps_transform(b))),
        other => other.clone(),
    }
}

fn subst(t: &Term, x: &Name, v: &Term, fv_v: &BTreeSet<Name>) -> Term {
    match t {
        Term::Var(y) if y == x => v.clone(),
        Term::Var(_) | Term::Const(_) => t.clone(),
        Term::App(f, a) => Term::app(subst(f, x, v, fv_v), subst(a, x, v, fv_v)),
        Term::Lam(y, ty, b) => {
            if y == x {
                t.clone()
            } else if fv_v.contains(y) && b.free_vars().contains(x) {
                let mut avoid: HashSet<Name> = fv_v.iter().cloned().collect();
                avoid.extend(b.names());
                avoid.insert(x.clone());
                let mut n = 1;
                let z: Name = loop {
                    let z: Name = format!("{y}{n}").into();
                    if !avoid.contains(&z) {
                        break z;
                    }
                    n += 1;
                };
                let renamed = subst(b, y, &Term::Var(z.clone()), &BTreeSet::from([z.clone()]));
                Term::Lam(z, ty.clone(), Box::new(subst(&renamed, x, v, fv_v)))
            } else {
                Term::Lam(y.clone(), ty.clone(), Box::new(subst(b, x, v, fv_v)))
            }
        }
    }
}

/// `t[x := v]`, renaming binders to avoid capture.
pub fn substitute(t: &Term, x: &str, v: &Term) -> Term {
    subst(t, &x.into(), v, &v.free_vars())
}

/// One leftmost call-by-value step; `None` if `t` is a value.
fn step(t: &Term) -> Result<Option<Term>, CpsError> {
    match t {
        Term::Lam(..) | Term::Const(_) => Ok(None),
        Term::Var(x) => Err(CpsError::Unbound(x.to_string())),
        Term::App(f, a) => {
            if !f.is_value() {
                let f2 = step(f)?.expect("not a value");
                return Ok(Some(Term::App(Box::new(f2), a.clone())));
            }
            if !a.is_value() {
                let a2 = step(a)?.expect("not a value");
                return Ok(Some(Term::App(f.clone(), Box::new(a2))));
            }
            match &**f {
                Term::Lam(x, _, b) => Ok(Some(subst(b, x, a, &a.free_vars()))),
                _ => Err(CpsError::Stuck(t.to_string())),
            }
        }
    }
}

/// Evaluates a closed term call-by-value, at most `budget` beta steps.
pub fn eval_cbv(e: &Term, budget: usize) -> Result<Term, CpsError> {
    let mut t = e.clone();
    for _ in 0..budget {
        match step(&t)? {
            Some(next) => t = next,
            None => return Ok(t),
        }
    }
    if t.is_value() {
        Ok(t)
    } else {
        Err(CpsError::Timeout(budget))
    }
}

/// Number of call-by-value redexes not under a binder.
pub fn cbv_redexes(t: &Term) -> usize {
    match t {
        Term::App(f, a) => {
            let here = usize::from(matches!(**f, Term::Lam(..)) && a.is_value());
            here + cbv_redexes(f) + cbv_redexes(a)
        }
        _ => 0,
    }
}

/// One state of a CPS run.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub term: Term,
    pub redexes: usize,
    conts: Arc<ContNames>,
}

impl TraceStep {
    /// The continuation currently passed along: the outermost argument of the
    /// application spine that is a continuation lambda.
    pub fn active_continuation(&self) -> Option<&Term> {
        let mut t = &self.term;
        let mut found = None;
        while let Term::App(f, a) = t {
            if found.is_none() && self.is_cont(a) {
                found = Some(&**a);
            }
            t = f;
        }
        found
    }

    fn is_cont(&self, t: &Term) -> bool {
        matches!(t, Term::Lam(x, _, _) if self.conts.contains(x))
    }
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.active_continuation() {
            Some(k) => {
                let whole = self.term.to_string();
                let ks = format!("({k})");
                match whole.rfind(&ks) {
                    Some(i) => write!(f, "{}[{}]{}", &whole[..i], ks, &whole[i + ks.len()..]),
                    None => write!(f, "{whole}"),
                }
            }
            None => write!(f, "{}", self.term),
        }
    }
}

fn halted(t: &Term) -> Option<&Term> {
    match t {
        Term::App(f, v) if matches!(&**f, Term::Const(c) if &**c == HALT) && v.is_value() => Some(v),
        _ => None,
    }
}

/// Runs `[e] (\r. %halt r)` and returns the value given to `%halt`, together
/// with every intermediate term.
pub fn run_cps_traced(e: &Term, budget: usize) -> (Result<Term, CpsError>, Vec<TraceStep>) {
    let (ce, mut conts, mut fresh) = transform_named(e);
    let r = fresh.name("r");
    conts.insert(r.clone());
    let halt = Term::Lam(
        r.clone(),
        None,
        Box::new(Term::app(Term::Const(HALT.into()), Term::Var(r))),
    );
    let conts = Arc::new(conts);
    let mut t = Term::app(ce, halt);
    let mut trace = Vec::new();
    let mut steps = 0;
    loop {
        trace.push(TraceStep {
            redexes: cbv_redexes(&t),
            term: t.clone(),
            conts: conts.clone(),
        });
        if let Some(v) = halted(&t) {
            return (Ok(v.clone()), trace);
        }
        if steps == budget {
            return (Err(CpsError::Timeout(budget)), trace);
        }
        match step(&t) {
            Ok(Some(next)) => t = next,
            Ok(None) => return (Err(CpsError::Stuck(t.to_string())), trace),
            Err(err) => return (Err(err), trace),
        }
        steps += 1;
    }
}

pub fn run_cps(e: &Term, budget: usize) -> Result<Term, CpsError> {
    run_cps_traced(e, budget).0
}

/// `(A* -> R) -> R`, with `b* = b` and `(A -> B)* = A* -> (B* -> R) -> R`.
pub fn cps_type(a: &SimpleType) -> Result<SimpleType, CpsError> {
    if a.mentions_result() {
        return Err(CpsError::ResultInInput(a.to_string()));
    }
    Ok(SimpleType::arrow(
        SimpleType::arrow(value_type(a), SimpleType::Result),
        SimpleType::Result,
    ))
}

/// `x:T` becomes `x:T*` for every entry.
pub fn cps_env(env: &HashMap<String, SimpleType>) -> HashMap<String, SimpleType> {
    env.iter().map(|(k, v)| (k.clone(), value_type(v))).collect()
}

struct Unifier {
    sol: Vec<Option<SimpleType>>,
}

impl Unifier {
    fn fresh(&mut self) -> SimpleType {
        self.sol.push(None);
        SimpleType::Var(self.sol.len() as u32 - 1)
    }

    fn resolve(&self, t: &SimpleType) -> SimpleType {
        match t {
            SimpleType::Var(i) => match &self.sol[*i as usize] {
                Some(s) => self.resolve(s),
                None => t.clone(),
            },
            SimpleType::Arrow(a, b) => SimpleType::arrow(self.resolve(a), self.resolve(b)),
            other => other.clone(),
        }
    }

    fn occurs(&self, v: u32, t: &SimpleType) -> bool {
        match self.resolve(t) {
            SimpleType::Var(i) => i == v,
            SimpleType::Arrow(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
            _ => false,
        }
    }

    fn unify(&mut self, a: &SimpleType, b: &SimpleType) -> Result<(), CpsError> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            _ if a == b => Ok(()),
            (SimpleType::Var(i), t) | (t, SimpleType::Var(i)) => {
                if self.occurs(*i, t) {
                    return Err(CpsError::Occurs(a.to_string(), b.to_string()));
                }
                self.sol[*i as usize] = Some(t.clone());
                Ok(())
            }
            (SimpleType::Arrow(a1, b1), SimpleType::Arrow(a2, b2)) => {
                self.unify(a1, a2)?;
                self.unify(b1, b2)
            }
            _ => Err(CpsError::Mismatch(a.to_string(), b.to_string())),
        }
    }

    fn infer(&mut self, env: &mut Vec<(Name, SimpleType)>, globals: &HashMap<String, SimpleType>, e: &Term) -> Result<SimpleType, CpsError> {
        match e {
            Term::Var(x) | Term::Const(x) => {
                if let Term::Var(_) = e {
                    if let Some((_, t)) = env.iter().rev().find(|(n, _)| n == x) {
                        return Ok(t.clone());
                    }
                }
                globals
                    .get(&**x)
                    .cloned()
                    .ok_or_else(|| CpsError::Unbound(x.to_string()))
            }
            Term::Lam(x, ty, b) => {
                let a = match ty {
                    Some(t) => t.clone(),
                    None => self.fresh(),
                };
                env.push((x.clone(), a.clone()));
                let r = self.infer(env, globals, b);
                env.pop();
                Ok(SimpleType::arrow(a, r?))
            }
            Term::App(f, a) => {
                let tf = self.infer(env, globals, f)?;
                let ta = self.infer(env, globals, a)?;
                let out = self.fresh();
                self.unify(&tf, &SimpleType::arrow(ta, out.clone()))?;
                Ok(out)
            }
        }
    }
}

fn normalize_vars(t: &SimpleType, map: &mut HashMap<u32, u32>) -> SimpleType {
    match t {
        SimpleType::Var(i) => {
            let n = map.len() as u32;
            SimpleType::Var(*map.entry(*i).or_insert(n))
        }
        SimpleType::Arrow(a, b) => {
            let a = normalize_vars(a, map);
            SimpleType::arrow(a, normalize_vars(b, map))
        }
        other => other.clone(),
    }
}

/// The principal simple type of `e`; free variables and constants are typed by
/// `env`, unannotated binders get type variables.
pub fn typecheck(env: &HashMap<String, SimpleType>, e: &Term) -> Result<SimpleType, CpsError> {
    let mut u = Unifier { sol: Vec::new() };
    let t = u.infer(&mut Vec::new(), env, e)?;
    Ok(normalize_vars(&u.resolve(&t), &mut HashMap::new()))
}

/// Whether `specific` is obtained from `general` by instantiating its type
/// variables (variables of `specific` are treated as constants).
pub fn is_instance(general: &SimpleType, specific: &SimpleType) -> bool {
    fn go(g: &SimpleType, s: &SimpleType, sub: &mut HashMap<u32, SimpleType>) -> bool {
        match (g, s) {
            (SimpleType::Var(i), _) => match sub.get(i) {
                Some(t) => t == s,
                None => {
                    sub.insert(*i, s.clone());
                    true
                }
            },
            (SimpleType::Arrow(a, b), SimpleType::Arrow(c, d)) => go(a, c, sub) && go(b, d, sub),
            _ => g == s,
        }
    }
    go(general, specific, &mut HashMap::new())
}
