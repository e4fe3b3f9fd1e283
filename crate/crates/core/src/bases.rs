//! Atomic rules, bases, and derivability `P |-_B a`.
//!
//! A rule `((P1 => a1), ..., (Pn => an) => b)` lets `b` be derived in context `Q`
//! once every `ai` is derivable in `Q ∪ Pi`. Derivability is the least relation
//! closed under reflexivity and rule application. It is computed bottom-up over
//! the finitely many contexts reachable from the query context by adding rule
//! premise sets.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::syntax::{Atom, SyntaxError};

/// Upper bound on the size of an atom universe (contexts are `u128` bitmasks).
pub const MAX_ATOMS: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("line {line}: {source}")]
    Line { line: usize, source: Box<BaseError> },
    #[error("unknown atom `{0}`")]
    UnknownAtom(Atom),
    #[error("atom universe has {0} atoms; at most {MAX_ATOMS} are supported")]
    TooManyAtoms(usize),
    #[error("missing `atoms:` line")]
    MissingAtoms,
    #[error(transparent)]
    Atom(#[from] SyntaxError),
}

/// Fixed, ordered set of atoms that a base (or a family of bases) ranges over.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomUniverse {
    atoms: Vec<Atom>,
}

impl AtomUniverse {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Result<Arc<AtomUniverse>, BaseError> {
        let set: BTreeSet<Atom> = atoms.into_iter().collect();
        if set.len() > MAX_ATOMS {
            return Err(BaseError::TooManyAtoms(set.len()));
        }
        Ok(Arc::new(AtomUniverse {
            atoms: set.into_iter().collect(),
        }))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn index(&self, a: &Atom) -> Result<usize, BaseError> {
        self.atoms
            .binary_search(a)
            .map_err(|_| BaseError::UnknownAtom(a.clone()))
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.binary_search(a).is_ok()
    }

    pub fn set_of<'a>(&self, atoms: impl IntoIterator<Item = &'a Atom>) -> Result<AtomSet, BaseError> {
        let mut s = AtomSet::EMPTY;
        for a in atoms {
            s.insert(self.index(a)?);
        }
        Ok(s)
    }

    pub fn atoms_of(&self, s: AtomSet) -> BTreeSet<Atom> {
        s.iter().map(|i| self.atoms[i].clone()).collect()
    }

    pub fn full(&self) -> AtomSet {
        AtomSet::full(self.atoms.len())
    }
}

/// A set of atom indices into an [`AtomUniverse`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Debug)]
pub struct AtomSet(pub u128);

impl AtomSet {
    pub const EMPTY: AtomSet = AtomSet(0);

    pub fn full(n: usize) -> AtomSet {
        if n >= 128 {
            AtomSet(u128::MAX)
        } else {
            AtomSet((1u128 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> AtomSet {
        AtomSet(1u128 << i)
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u128 << i;
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn union(self, o: AtomSet) -> AtomSet {
        AtomSet(self.0 | o.0)
    }

    pub fn is_subset(self, o: AtomSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

/// One antecedent `(P => a)` of an atomic rule.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    pub premises: BTreeSet<Atom>,
    pub conclusion: Atom,
}

impl Clause {
    pub fn new(premises: impl IntoIterator<Item = Atom>, conclusion: Atom) -> Clause {
        Clause {
            premises: premises.into_iter().collect(),
            conclusion,
        }
    }

    /// `(=> a)`: an unconditional antecedent.
    pub fn plain(conclusion: Atom) -> Clause {
        Clause::new([], conclusion)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("([")?;
        for (i, p) in self.premises.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "] => {})", self.conclusion)
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// `((P1 => a1), ..., (Pn => an) => b)`; antecedents are kept sorted and deduplicated.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomicRule {
    clauses: Vec<Clause>,
    conclusion: Atom,
}

impl AtomicRule {
    pub fn new(clauses: impl IntoIterator<Item = Clause>, conclusion: Atom) -> AtomicRule {
        let set: BTreeSet<Clause> = clauses.into_iter().collect();
        AtomicRule {
            clauses: set.into_iter().collect(),
            conclusion,
        }
    }

    /// `(=> b)`.
    pub fn axiom(conclusion: Atom) -> AtomicRule {
        AtomicRule::new([], conclusion)
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn conclusion(&self) -> &Atom {
        &self.conclusion
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.clauses
            .iter()
            .flat_map(|c| c.premises.iter().chain(std::iter::once(&c.conclusion)))
            .chain(std::iter::once(&self.conclusion))
    }
}

impl fmt::Display for AtomicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        if self.clauses.is_empty() {
            write!(f, "=> {}", self.conclusion)
        } else {
            write!(f, " => {}", self.conclusion)
        }
    }
}

impl fmt::Debug for AtomicRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl std::str::FromStr for AtomicRule {
    type Err = BaseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_rule(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) struct CompiledRule {
    pub(crate) clauses: Vec<(AtomSet, usize)>,
    pub(crate) conclusion: usize,
}

/// A finite set of atomic rules over an explicit atom universe.
#[derive(Clone)]
pub struct Base {
    universe: Arc<AtomUniverse>,
    rules: Vec<AtomicRule>,
    compiled: Vec<CompiledRule>,
}

impl PartialEq for Base {
    fn eq(&self, other: &Base) -> bool {
        self.universe == other.universe && self.rules == other.rules
    }
}

impl Eq for Base {}

impl std::hash::Hash for Base {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.universe.hash(state);
        self.rules.hash(state);
    }
}

impl fmt::Debug for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.rules.iter()).finish()
    }
}

impl Base {
    pub fn new(
        universe: Arc<AtomUniverse>,
        rules: impl IntoIterator<Item = AtomicRule>,
    ) -> Result<Base, BaseError> {
        let rules: BTreeSet<AtomicRule> = rules.into_iter().collect();
        let rules: Vec<AtomicRule> = rules.into_iter().collect();
        let compiled = rules
            .iter()
            .map(|r| compile_rule(&universe, r))
            .collect::<Result<_, _>>()?;
        Ok(Base {
            universe,
            rules,
            compiled,
        })
    }

    pub fn empty(universe: Arc<AtomUniverse>) -> Base {
        Base {
            universe,
            rules: Vec::new(),
            compiled: Vec::new(),
        }
    }

    pub fn universe(&self) -> &Arc<AtomUniverse> {
        &self.universe
    }

    pub fn rules(&self) -> &[AtomicRule] {
        &self.rules
    }

    pub fn contains_rule(&self, r: &AtomicRule) -> bool {
        self.rules.binary_search(r).is_ok()
    }

    pub fn is_subset(&self, other: &Base) -> bool {
        self.rules.iter().all(|r| other.contains_rule(r))
    }

    pub(crate) fn compiled(&self) -> &[CompiledRule] {
        &self.compiled
    }

    /// Renders the base in the base-file format accepted by [`parse_base_file`].
    pub fn to_file_string(&self) -> String {
        let mut out = String::from("atoms: ");
        let names: Vec<&str> = self.universe.atoms().iter().map(|a| a.name()).collect();
        out.push_str(&names.join(", "));
        out.push('\n');
        for r in &self.rules {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

pub(crate) fn compile_rule(u: &AtomUniverse, r: &AtomicRule) -> Result<CompiledRule, BaseError> {
    let clauses = r
        .clauses
        .iter()
        .map(|c| Ok((u.set_of(&c.premises)?, u.index(&c.conclusion)?)))
        .collect::<Result<_, BaseError>>()?;
    Ok(CompiledRule {
        clauses,
        conclusion: u.index(&r.conclusion)?,
    })
}

/// The result of saturating a base from a starting context: every judgment
/// `S |- a` for `S` in the context closure, with the rule that first produced it.
pub(crate) struct Saturation {
    contexts: Vec<AtomSet>,
    index: HashMap<AtomSet, usize>,
    derivable: Vec<AtomSet>,
    // justification[ctx][atom]: None for reflexivity, Some(rule) otherwise
    justification: Vec<HashMap<usize, usize>>,
}

impl Saturation {
    pub(crate) fn run(rules: &[CompiledRule], start: AtomSet) -> Saturation {
        let mut contexts = vec![start];
        let mut index = HashMap::from([(start, 0)]);
        let mut i = 0;
        while i < contexts.len() {
            let s = contexts[i];
            for r in rules {
                for &(p, _) in &r.clauses {
                    let t = s.union(p);
                    if !index.contains_key(&t) {
                        index.insert(t, contexts.len());
                        contexts.push(t);
                    }
                }
            }
            i += 1;
        }
        // successor context index for every (context, rule, clause)
        let succ: Vec<Vec<Vec<usize>>> = contexts
            .iter()
            .map(|&s| {
                rules
                    .iter()
                    .map(|r| r.clauses.iter().map(|&(p, _)| index[&s.union(p)]).collect())
                    .collect()
            })
            .collect();
        let mut derivable = contexts.clone();
        let mut justification = vec![HashMap::new(); contexts.len()];
        let mut changed = true;
        while changed {
            changed = false;
            for ci in 0..contexts.len() {
                for (ri, r) in rules.iter().enumerate() {
                    if derivable[ci].contains(r.conclusion) {
                        continue;
                    }
                    let fires = r
                        .clauses
                        .iter()
                        .zip(&succ[ci][ri])
                        .all(|(&(_, a), &t)| derivable[t].contains(a));
                    if fires {
                        derivable[ci].insert(r.conclusion);
                        justification[ci].insert(r.conclusion, ri);
                        changed = true;
                    }
                }
            }
        }
        Saturation {
            contexts,
            index,
            derivable,
            justification,
        }
    }

    pub(crate) fn derivable_in(&self, ctx: AtomSet) -> Option<AtomSet> {
        self.index.get(&ctx).map(|&i| self.derivable[i])
    }

    fn tree(&self, base: &Base, ci: usize, atom: usize) -> DerivationTree {
        let u = base.universe();
        let ctx = self.contexts[ci];
        match self.justification[ci].get(&atom) {
            None => {
                debug_assert!(ctx.contains(atom));
                DerivationTree::Ref {
                    atom: u.atoms()[atom].clone(),
                    context: u.atoms_of(ctx),
                }
            }
            Some(&ri) => {
                let rule = &base.compiled()[ri];
                let premises = rule
                    .clauses
                    .iter()
                    .map(|&(p, a)| self.tree(base, self.index[&ctx.union(p)], a))
                    .collect();
                DerivationTree::App {
                    rule: base.rules()[ri].clone(),
                    context: u.atoms_of(ctx),
                    premises,
                }
            }
        }
    }
}

fn check_query(base: &Base, context: &[Atom], goal: &Atom) -> Result<(AtomSet, usize), BaseError> {
    let u = base.universe();
    Ok((u.set_of(context)?, u.index(goal)?))
}

/// `context |-_base goal`.
pub fn derives(base: &Base, context: &[Atom], goal: &Atom) -> Result<bool, BaseError> {
    let (ctx, g) = check_query(base, context, goal)?;
    Ok(derives_set(base, ctx, g))
}

pub(crate) fn derives_set(base: &Base, ctx: AtomSet, goal: usize) -> bool {
    if ctx.contains(goal) {
        return true;
    }
    Saturation::run(base.compiled(), ctx)
        .derivable_in(ctx)
        .is_some_and(|d| d.contains(goal))
}

/// All atoms derivable from `ctx` in `base`.
pub(crate) fn consequences(base: &Base, ctx: AtomSet) -> AtomSet {
    Saturation::run(base.compiled(), ctx)
        .derivable_in(ctx)
        .expect("start context is always present")
}

/// A derivation witnessing `context |-_base goal`, if there is one.
pub fn derive_tree(
    base: &Base,
    context: &[Atom],
    goal: &Atom,
) -> Result<Option<DerivationTree>, BaseError> {
    let (ctx, g) = check_query(base, context, goal)?;
    let sat = Saturation::run(base.compiled(), ctx);
    if !sat.derivable[0].contains(g) {
        return Ok(None);
    }
    Ok(Some(sat.tree(base, 0, g)))
}

/// `B ∪ {(=> p) | p ∈ P}`.
pub fn promote_context(base: &Base, promoted: &[Atom]) -> Result<Base, BaseError> {
    for p in promoted {
        base.universe().index(p)?;
    }
    Base::new(
        base.universe().clone(),
        base.rules()
            .iter()
            .cloned()
            .chain(promoted.iter().cloned().map(AtomicRule::axiom)),
    )
}

/// A derivation of `context |- conclusion` built from reflexivity and rule applications.
#[derive(Clone, PartialEq, Eq)]
pub enum DerivationTree {
    Ref {
        atom: Atom,
        context: BTreeSet<Atom>,
    },
    App {
        rule: AtomicRule,
        context: BTreeSet<Atom>,
        premises: Vec<DerivationTree>,
    },
}

impl DerivationTree {
    pub fn conclusion(&self) -> &Atom {
        match self {
            DerivationTree::Ref { atom, .. } => atom,
            DerivationTree::App { rule, .. } => rule.conclusion(),
        }
    }

    pub fn context(&self) -> &BTreeSet<Atom> {
        match self {
            DerivationTree::Ref { context, .. } | DerivationTree::App { context, .. } => context,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DerivationTree::Ref { .. } => 0,
            DerivationTree::App { premises, .. } => {
                1 + premises.iter().map(|p| p.depth()).max().unwrap_or(0)
            }
        }
    }

    /// Checks that every node is a correct use of reflexivity or of a rule of `base`.
    pub fn check(&self, base: &Base) -> Result<(), String> {
        match self {
            DerivationTree::Ref { atom, context } => {
                if context.contains(atom) {
                    Ok(())
                } else {
                    Err(format!("Ref: {atom} not in context"))
                }
            }
            DerivationTree::App {
                rule,
                context,
                premises,
            } => {
                if !base.contains_rule(rule) {
                    return Err(format!("rule {rule} is not in the base"));
                }
                if premises.len() != rule.clauses().len() {
                    return Err(format!("rule {rule}: wrong number of premises"));
                }
                for (clause, sub) in rule.clauses().iter().zip(premises) {
                    let expected: BTreeSet<Atom> =
                        context.union(&clause.premises).cloned().collect();
                    if sub.context() != &expected {
                        return Err(format!("rule {rule}: premise context mismatch"));
                    }
                    if sub.conclusion() != &clause.conclusion {
                        return Err(format!("rule {rule}: premise concludes {}", sub.conclusion()));
                    }
                    sub.check(base)?;
                }
                Ok(())
            }
        }
    }

    fn render(&self, indent: usize, out: &mut String) {
        let ctx: Vec<&str> = self.context().iter().map(|a| a.name()).collect();
        out.push_str(&"  ".repeat(indent));
        match self {
            DerivationTree::Ref { atom, .. } => {
                out.push_str(&format!("{} |- {}   (Ref)\n", ctx.join(", "), atom));
            }
            DerivationTree::App { rule, premises, .. } => {
                out.push_str(&format!(
                    "{} |- {}   by {}\n",
                    ctx.join(", "),
                    rule.conclusion(),
                    rule
                ));
                for p in premises {
                    p.render(indent + 1, out);
                }
            }
        }
    }
}

impl fmt::Display for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(0, &mut s);
        f.write_str(&s)
    }
}

impl fmt::Debug for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

struct RuleParser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> RuleParser<'a> {
    fn skip_ws(&mut self) {
        while self.text[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, BaseError> {
        Err(BaseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), BaseError> {
        if self.eat(lit) {
            Ok(())
        } else {
            self.err(format!("expected `{lit}`"))
        }
    }

    fn atom(&mut self) -> Result<Atom, BaseError> {
        self.skip_ws();
        let rest = &self.text[self.pos..];
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c.is_ascii_alphanumeric() || c == '_' || (i == 0 && c == '#')))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return self.err("expected an atom");
        }
        let at = self.pos;
        let name = &rest[..len];
        let atom = Atom::parse_any(name).map_err(|e| BaseError::Syntax {
            pos: at,
            msg: e.to_string(),
        })?;
        self.pos += len;
        Ok(atom)
    }

    fn clause(&mut self) -> Result<Clause, BaseError> {
        self.expect("(")?;
        self.expect("[")?;
        let mut premises = Vec::new();
        if !self.eat("]") {
            loop {
                premises.push(self.atom()?);
                if self.eat("]") {
                    break;
                }
                self.expect(",")?;
            }
        }
        self.expect("=>")?;
        let concl = self.atom()?;
        self.expect(")")?;
        Ok(Clause::new(premises, concl))
    }

    fn rule(&mut self) -> Result<AtomicRule, BaseError> {
        let mut clauses = Vec::new();
        if !self.eat("=>") {
            loop {
                clauses.push(self.clause()?);
                if self.eat("=>") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let concl = self.atom()?;
        self.skip_ws();
        if self.pos != self.text.len() {
            return self.err("trailing input");
        }
        Ok(AtomicRule::new(clauses, concl))
    }
}

/// Parses `([p] => q), ([] => a) => b` or `=> b`.
pub fn parse_rule(text: &str) -> Result<AtomicRule, BaseError> {
    RuleParser { text, pos: 0 }.rule()
}

/// Parses a comma-separated atom list such as `p, q` (empty input gives no atoms).
pub fn parse_atom_list(text: &str) -> Result<Vec<Atom>, BaseError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| Atom::parse_any(s.trim()).map_err(BaseError::from))
        .collect()
}

fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Reads the base-file format: an `atoms: a, b, c` line, then one rule per line.
/// Lines starting with `#` are comments.
pub fn parse_base_file(text: &str) -> Result<Base, BaseError> {
    let mut universe = None;
    let mut rules = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if is_comment_or_blank(line) {
            continue;
        }
        let at_line = |e: BaseError| BaseError::Line {
            line: n + 1,
            source: Box::new(e),
        };
        let t = line.trim();
        if universe.is_none() {
            let Some(rest) = t.strip_prefix("atoms:") else {
                return Err(at_line(BaseError::MissingAtoms));
            };
            universe = Some(AtomUniverse::new(parse_atom_list(rest).map_err(at_line)?).map_err(at_line)?);
        } else {
            let rule = parse_rule(t).map_err(at_line)?;
            if let Some(u) = &universe {
                compile_rule(u, &rule).map_err(at_line)?;
            }
            rules.push(rule);
        }
    }
    let universe = universe.ok_or(BaseError::MissingAtoms)?;
    Base::new(universe, rules)
}
