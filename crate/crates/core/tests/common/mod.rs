//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls the evaluators it is used to check: derivability is a
//! naive fixpoint over every context, support is a literal transcription of
//! the clauses, Kripke countermodels are found by brute force, and lambda terms
//! are compared and evaluated in de Bruijn form.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use basext::bases::{AtomUniverse, AtomicRule, Base, Clause};
use basext::cps::{SimpleType, Term};
use basext::support::WorldUniverse;
use basext::syntax::{Atom, Formula};

// ---------------------------------------------------------------- randomness

pub fn seed() -> u64 {
    std::env::var("PTS_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0x5eed_2024)
}

pub fn rng(salt: u64) -> StdRng {
    StdRng::seed_from_u64(seed() ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn atom(s: &str) -> Atom {
    Atom::parse_any(s).unwrap()
}

pub fn atoms(names: &[&str]) -> Vec<Atom> {
    names.iter().map(|n| atom(n)).collect()
}

pub fn universe(names: &[&str]) -> Arc<AtomUniverse> {
    AtomUniverse::new(atoms(names)).unwrap()
}

// ---------------------------------------------------------------- rules

fn subsets<T: Clone>(xs: &[T]) -> Vec<Vec<T>> {
    (0..1usize << xs.len())
        .map(|m| (0..xs.len()).filter(|i| m >> i & 1 == 1).map(|i| xs[i].clone()).collect())
        .collect()
}

/// Every rule over `names` with at most `max_clauses` antecedent clauses.
pub fn all_rules(names: &[&str], max_clauses: usize) -> Vec<AtomicRule> {
    let ats = atoms(names);
    let mut clauses = Vec::new();
    for p in subsets(&ats) {
        for c in &ats {
            clauses.push(Clause::new(p.clone(), c.clone()));
        }
    }
    let mut out = BTreeSet::new();
    let mut groups: Vec<Vec<Clause>> = vec![vec![]];
    for _ in 0..max_clauses {
        let mut next = Vec::new();
        for g in &groups {
            for c in &clauses {
                if g.last().map_or(true, |l| l < c) {
                    let mut h = g.clone();
                    h.push(c.clone());
                    next.push(h);
                }
            }
        }
        groups.extend(next.clone());
        groups.dedup();
        if next.is_empty() {
            break;
        }
    }
    for g in &groups {
        for b in &ats {
            out.insert(AtomicRule::new(g.clone(), b.clone()));
        }
    }
    out.into_iter().collect()
}

/// All sets of at most `k` rules drawn from `rules`, as index lists.
pub fn rule_sets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&l: &usize| l + 1);
            for i in start..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn random_rule(rng: &mut impl Rng, names: &[&str], max_clauses: usize, max_premises: usize) -> AtomicRule {
    let ats = atoms(names);
    let n = rng.gen_range(0..=max_clauses);
    let clauses = (0..n).map(|_| {
        let k = rng.gen_range(0..=max_premises);
        let prem: Vec<Atom> = (0..k).map(|_| ats.choose(rng).unwrap().clone()).collect();
        Clause::new(prem, ats.choose(rng).unwrap().clone())
    });
    AtomicRule::new(clauses.collect::<Vec<_>>(), ats.choose(rng).unwrap().clone())
}

pub fn random_rules(rng: &mut impl Rng, names: &[&str], n: usize) -> Vec<AtomicRule> {
    let mut out: Vec<AtomicRule> = Vec::new();
    let mut tries = 0;
    while out.len() < n && tries < 50 * n + 50 {
        tries += 1;
        let r = random_rule(rng, names, 3, 2);
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

// ---------------------------------------------------------------- derivability oracle

/// Least fixpoint of (Ref) and (App) over every context at once: `d[S]` is the
/// set of atoms derivable from context `S`, contexts being subsets of the
/// universe encoded as bitmasks.
pub struct Closure {
    idx: HashMap<Atom, usize>,
    d: Vec<u64>,
}

impl Closure {
    pub fn new(base: &Base) -> Closure {
        let ats = base.universe().atoms();
        assert!(ats.len() <= 12, "oracle only for small universes");
        let idx: HashMap<Atom, usize> = ats.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let mask = |s: &BTreeSet<Atom>| s.iter().fold(0u64, |m, a| m | 1 << idx[a]);
        let rules: Vec<(Vec<(u64, usize)>, usize)> = base
            .rules()
            .iter()
            .map(|r| {
                (
                    r.clauses().iter().map(|c| (mask(&c.premises), idx[&c.conclusion])).collect(),
                    idx[r.conclusion()],
                )
            })
            .collect();
        let n = 1usize << ats.len();
        let mut d: Vec<u64> = (0..n as u64).collect();
        loop {
            let mut changed = false;
            for s in 0..n {
                for (cls, b) in &rules {
                    if d[s] >> b & 1 == 1 {
                        continue;
                    }
                    if cls.iter().all(|&(p, a)| d[s | p as usize] >> a & 1 == 1) {
                        d[s] |= 1 << b;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Closure { idx, d }
    }

    pub fn derives(&self, ctx: &[Atom], goal: &Atom) -> bool {
        let s = ctx.iter().fold(0usize, |m, a| m | 1 << self.idx[a]);
        self.d[s] >> self.idx[goal] & 1 == 1
    }
}

pub fn oracle_derives(base: &Base, ctx: &[Atom], goal: &Atom) -> bool {
    Closure::new(base).derives(ctx, goal)
}

// ---------------------------------------------------------------- support oracle

/// Literal transcription of the support clauses, no memoization.
pub struct BruteSupport<'w> {
    w: &'w WorldUniverse,
    ext: Vec<Vec<usize>>,
    closures: Vec<Closure>,
}

impl<'w> BruteSupport<'w> {
    pub fn new(w: &'w WorldUniverse) -> BruteSupport<'w> {
        let bases = w.bases();
        let ext = (0..bases.len())
            .map(|b| (0..bases.len()).filter(|&c| bases[b].is_subset(&bases[c])).collect())
            .collect();
        let closures = bases.iter().map(Closure::new).collect();
        BruteSupport { w, ext, closures }
    }

    fn atom_holds(&self, b: usize, a: &Atom) -> bool {
        self.closures[b].derives(&[], a)
    }

    pub fn supports(&self, b: usize, phi: &Formula) -> bool {
        let all_atoms = self.w.atoms().atoms();
        match phi {
            Formula::Atom(a) => self.atom_holds(b, a),
            Formula::Top => true,
            Formula::Bot => all_atoms.iter().all(|a| self.atom_holds(b, a)),
            Formula::And(l, r) => self.supports(b, l) && self.supports(b, r),
            Formula::Imp(l, r) => self.infers(b, &[(**l).clone()], r),
            Formula::Or(l, r) => all_atoms.iter().all(|p| {
                self.ext[b].iter().all(|&c| {
                    let lp = self.infers(c, &[(**l).clone()], &Formula::Atom(p.clone()));
                    let rp = self.infers(c, &[(**r).clone()], &Formula::Atom(p.clone()));
                    !(lp && rp) || self.atom_holds(c, p)
                })
            }),
        }
    }

    pub fn infers(&self, b: usize, theta: &[Formula], phi: &Formula) -> bool {
        self.ext[b]
            .iter()
            .all(|&c| !theta.iter().all(|t| self.supports(c, t)) || self.supports(c, phi))
    }
}

// ---------------------------------------------------------------- formulas

pub fn random_formula(rng: &mut impl Rng, names: &[&str], connectives: usize) -> Formula {
    if connectives == 0 {
        return match rng.gen_range(0..10) {
            0 => Formula::Bot,
            1 if names.len() > 1 => Formula::Top,
            _ => Formula::atom(names.choose(rng).unwrap()),
        };
    }
    let left = rng.gen_range(0..connectives);
    let l = random_formula(rng, names, left);
    let r = random_formula(rng, names, connectives - 1 - left);
    match rng.gen_range(0..3) {
        0 => Formula::and(l, r),
        1 => Formula::or(l, r),
        _ => Formula::imp(l, r),
    }
}

/// Every formula of depth at most `depth` over the given leaves.
pub fn formulas_up_to_depth(leaves: &[Formula], depth: usize) -> Vec<Formula> {
    let mut all: Vec<Formula> = leaves.to_vec();
    for _ in 0..depth {
        let prev = all.clone();
        let mut next = BTreeSet::new();
        for l in &prev {
            for r in &prev {
                next.insert(Formula::and(l.clone(), r.clone()));
                next.insert(Formula::or(l.clone(), r.clone()));
                next.insert(Formula::imp(l.clone(), r.clone()));
            }
        }
        next.extend(prev);
        all = next.into_iter().collect();
    }
    all
}

// ---------------------------------------------------------------- Kripke oracle

/// A finite Kripke model: `le[i][j]` is the order, `val[i]` the atoms true at `i`.
pub struct KripkeModel {
    pub le: Vec<Vec<bool>>,
    pub val: Vec<BTreeSet<Atom>>,
}

impl KripkeModel {
    pub fn forces(&self, w: usize, phi: &Formula) -> bool {
        match phi {
            Formula::Atom(a) => self.val[w].contains(a),
            Formula::Top => true,
            Formula::Bot => false,
            Formula::And(l, r) => self.forces(w, l) && self.forces(w, r),
            Formula::Or(l, r) => self.forces(w, l) || self.forces(w, r),
            Formula::Imp(l, r) => (0..self.le.len())
                .filter(|&v| self.le[w][v])
                .all(|v| !self.forces(v, l) || self.forces(v, r)),
        }
    }
}

/// Partial orders on `0..n`, by brute force over all relations.
pub fn brute_posets(n: usize) -> Vec<Vec<Vec<bool>>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let mut out = Vec::new();
    for m in 0u64..1 << pairs.len() {
        let mut le = vec![vec![false; n]; n];
        for (i, row) in le.iter_mut().enumerate() {
            row[i] = true;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            if m >> k & 1 == 1 {
                le[i][j] = true;
            }
        }
        let anti = (0..n).all(|i| (0..n).all(|j| i == j || !(le[i][j] && le[j][i])));
        let trans = (0..n).all(|i| (0..n).all(|j| (0..n).all(|k| !(le[i][j] && le[j][k]) || le[i][k])));
        if anti && trans {
            out.push(le);
        }
    }
    out
}

/// A countermodel to `gamma |- phi` on at most `max_points` worlds, if any.
pub fn kripke_countermodel(gamma: &[Formula], phi: &Formula, max_points: usize) -> Option<KripkeModel> {
    let mut ats: BTreeSet<Atom> = phi.atoms().into_iter().collect();
    for g in gamma {
        ats.extend(g.atoms());
    }
    let ats: Vec<Atom> = ats.into_iter().collect();
    for n in 1..=max_points {
        for le in brute_posets(n) {
            let ups: Vec<u32> = (0u32..1 << n)
                .filter(|&m| (0..n).all(|i| m >> i & 1 == 0 || (0..n).all(|j| !le[i][j] || m >> j & 1 == 1)))
                .collect();
            let mut choice = vec![0usize; ats.len()];
            loop {
                let val = (0..n)
                    .map(|w| {
                        ats.iter()
                            .zip(&choice)
                            .filter(|(_, &c)| ups[c] >> w & 1 == 1)
                            .map(|(a, _)| a.clone())
                            .collect()
                    })
                    .collect();
                let m = KripkeModel { le: le.clone(), val };
                for w in 0..n {
                    if gamma.iter().all(|g| m.forces(w, g)) && !m.forces(w, phi) {
                        return Some(m);
                    }
                }
                let mut k = 0;
                while k < choice.len() {
                    choice[k] += 1;
                    if choice[k] < ups.len() {
                        break;
                    }
                    choice[k] = 0;
                    k += 1;
                }
                if k == choice.len() {
                    break;
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------- lambda terms

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Db {
    Bound(usize),
    Free(String),
    Const(String),
    Lam(Box<Db>),
    App(Box<Db>, Box<Db>),
}

pub fn to_db(t: &Term) -> Db {
    fn go(t: &Term, scope: &mut Vec<String>) -> Db {
        match t {
            Term::Var(x) => match scope.iter().rev().position(|y| **y == **x) {
                Some(i) => Db::Bound(i),
                None => Db::Free(x.to_string()),
            },
            Term::Const(c) => Db::Const(c.to_string()),
            Term::Lam(x, _, b) => {
                scope.push(x.to_string());
                let body = go(b, scope);
                scope.pop();
                Db::Lam(Box::new(body))
            }
            Term::App(f, a) => Db::App(Box::new(go(f, scope)), Box::new(go(a, scope))),
        }
    }
    go(t, &mut Vec::new())
}

pub fn alpha_equal(a: &Term, b: &Term) -> bool {
    to_db(a) == to_db(b)
}

fn shift(t: &Db, by: isize, cutoff: usize) -> Db {
    match t {
        Db::Bound(i) if *i >= cutoff => Db::Bound((*i as isize + by) as usize),
        Db::Lam(b) => Db::Lam(Box::new(shift(b, by, cutoff + 1))),
        Db::App(f, a) => Db::App(Box::new(shift(f, by, cutoff)), Box::new(shift(a, by, cutoff))),
        other => other.clone(),
    }
}

fn subst_db(t: &Db, j: usize, s: &Db) -> Db {
    match t {
        Db::Bound(i) if *i == j => shift(s, j as isize, 0),
        Db::Lam(b) => Db::Lam(Box::new(subst_db(b, j + 1, s))),
        Db::App(f, a) => Db::App(Box::new(subst_db(f, j, s)), Box::new(subst_db(a, j, s))),
        other => other.clone(),
    }
}

fn beta(body: &Db, arg: &Db) -> Db {
    shift(&subst_db(body, 0, &shift(arg, 1, 0)), -1, 0)
}

fn is_value(t: &Db) -> bool {
    matches!(t, Db::Lam(_) | Db::Const(_))
}

#[derive(Debug, PartialEq, Eq)]
pub enum RefResult {
    Value(Db),
    Timeout,
    Stuck,
}

/// Leftmost call-by-value evaluation in de Bruijn form, at most `budget` betas.
pub fn reference_eval(t: &Db, budget: usize) -> RefResult {
    fn step(t: &Db) -> Option<Option<Db>> {
        match t {
            Db::App(f, a) => {
                if !is_value(f) {
                    return step(f).map(|o| o.map(|f2| Db::App(Box::new(f2), a.clone())));
                }
                if !is_value(a) {
                    return step(a).map(|o| o.map(|a2| Db::App(f.clone(), Box::new(a2))));
                }
                match &**f {
                    Db::Lam(b) => Some(Some(beta(b, a))),
                    _ => None,
                }
            }
            Db::Bound(_) | Db::Free(_) => None,
            _ => Some(None),
        }
    }
    let mut t = t.clone();
    for _ in 0..=budget {
        match step(&t) {
            None => return RefResult::Stuck,
            Some(None) => return RefResult::Value(t),
            Some(Some(n)) => t = n,
        }
    }
    RefResult::Timeout
}

/// The transform written out in de Bruijn form, so no fresh names are involved.
pub fn reference_cps(t: &Term) -> Db {
    reference_cps_db(&to_db(t))
}

fn reference_cps_db(t: &Db) -> Db {
    let lam = |b: Db| Db::Lam(Box::new(b));
    let app = |f: Db, a: Db| Db::App(Box::new(f), Box::new(a));
    match t {
        // \k. k x
        Db::Bound(i) => lam(app(Db::Bound(0), Db::Bound(i + 1))),
        Db::Free(_) | Db::Const(_) => lam(app(Db::Bound(0), t.clone())),
        // \k. k (\x. [e])
        Db::Lam(b) => lam(app(Db::Bound(0), shift(&lam(reference_cps_db(b)), 1, 0))),
        // \k. [f] (\v1. [e] (\v2. v1 v2 k))
        Db::App(f, e) => {
            let inner = lam(app(app(Db::Bound(1), Db::Bound(0)), Db::Bound(2)));
            let outer = lam(app(shift(&reference_cps_db(e), 2, 0), inner));
            lam(app(shift(&reference_cps_db(f), 1, 0), outer))
        }
    }
}

/// CPS image of a value: `\x. b` becomes `\x. [b]`, constants stay.
pub fn reference_cps_value(v: &Db) -> Db {
    match v {
        Db::Lam(b) => Db::Lam(Box::new(reference_cps_db(b))),
        other => other.clone(),
    }
}

/// Runs the reference CPS of `e` against the identity continuation.
pub fn reference_run_value(e: &Term, budget: usize) -> RefResult {
    let id = Db::Lam(Box::new(Db::Bound(0)));
    reference_eval(&Db::App(Box::new(reference_cps(e)), Box::new(id)), budget)
}

// ---------------------------------------------------------------- typed terms

pub fn ty_a() -> SimpleType {
    SimpleType::base("a")
}

pub fn ty_b() -> SimpleType {
    SimpleType::base("b")
}

/// Constants available to generated terms and their types. Constants are inert
/// under application, so only base types get one.
pub fn term_env() -> HashMap<String, SimpleType> {
    HashMap::from([
        ("C".to_string(), ty_a()),
        ("D".to_string(), ty_b()),
    ])
}

pub fn random_type(rng: &mut impl Rng, depth: usize) -> SimpleType {
    if depth == 0 || rng.gen_bool(0.6) {
        if rng.gen_bool(0.5) {
            ty_a()
        } else {
            ty_b()
        }
    } else {
        SimpleType::arrow(random_type(rng, depth - 1), random_type(rng, depth - 1))
    }
}

/// A closed, fully annotated term of type `ty` of roughly `fuel` nodes.
pub fn random_typed_term(rng: &mut impl Rng, ty: &SimpleType, fuel: usize) -> Term {
    fn gen(rng: &mut impl Rng, ty: &SimpleType, ctx: &mut Vec<(String, SimpleType)>, fuel: usize) -> Term {
        let vars: Vec<String> = ctx.iter().rev().filter(|(_, t)| t == ty).map(|(n, _)| n.clone()).collect();
        let leaf = |rng: &mut dyn rand::RngCore, ctx: &mut Vec<(String, SimpleType)>| -> Option<Term> {
            let mut opts: Vec<Term> = vars.iter().map(|v| Term::var(v)).collect();
            if *ty == ty_a() {
                opts.push(Term::constant("C"));
            }
            if *ty == ty_b() {
                opts.push(Term::constant("D"));
            }
            let _ = ctx;
            if opts.is_empty() {
                None
            } else {
                let i = rng.gen_range(0..opts.len());
                Some(opts.swap_remove(i))
            }
        };
        if fuel <= 1 {
            if let Some(t) = leaf(rng, ctx) {
                return t;
            }
        }
        let choice = rng.gen_range(0..10);
        if fuel >= 3 && choice < 5 {
            // application: guess an argument type
            let arg = random_type(rng, 1);
            let split = rng.gen_range(1..fuel - 1);
            let f = gen(rng, &SimpleType::arrow(arg.clone(), ty.clone()), ctx, split);
            let a = gen(rng, &arg, ctx, fuel - 1 - split);
            return Term::app(f, a);
        }
        if let SimpleType::Arrow(dom, cod) = ty {
            if fuel >= 2 || choice >= 5 {
                let x = format!("x{}", ctx.len());
                ctx.push((x.clone(), (**dom).clone()));
                let body = gen(rng, cod, ctx, fuel.saturating_sub(1).max(1));
                ctx.pop();
                return Term::Lam(x.as_str().into(), Some((**dom).clone()), Box::new(body));
            }
        }
        if let Some(t) = leaf(rng, ctx) {
            return t;
        }
        match ty {
            SimpleType::Arrow(dom, cod) => {
                let x = format!("x{}", ctx.len());
                ctx.push((x.clone(), (**dom).clone()));
                let body = gen(rng, cod, ctx, 1);
                ctx.pop();
                Term::Lam(x.as_str().into(), Some((**dom).clone()), Box::new(body))
            }
            // a base type with no variable in scope: a constant always exists
            _ => unreachable!("every base type has a constant"),
        }
    }
    gen(rng, ty, &mut Vec::new(), fuel)
}
