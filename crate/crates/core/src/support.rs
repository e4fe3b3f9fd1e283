//! Support `|=_B phi`, inference `Theta |=_B phi` and validity, relativized to a
//! finite family of bases.
//!
//! Every "for all C ⊇ B" ranges over the worlds of a [`WorldUniverse`], and every
//! "for every atom" ranges over its atom universe.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::bases::{self, AtomSet, AtomUniverse, AtomicRule, Base, BaseError};
use crate::syntax::{Atom, Formula};

/// Largest rule universe accepted in `all-subsets` mode.
pub const MAX_ALL_SUBSETS_RULES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SupportError {
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error("base {0} is not a world of the universe")]
    NotAWorld(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(Atom),
    #[error("all-subsets mode allows at most {MAX_ALL_SUBSETS_RULES} rules, got {0}")]
    TooManyRules(usize),
    #[error("rule {0} occurs twice in the rule universe")]
    DuplicateRule(AtomicRule),
    #[error("rule index {0} is out of range")]
    RuleIndex(usize),
    #[error("world list is not upward closed: {0} is listed but {1} is not")]
    NotUpwardClosed(String, String),
    #[error("world {0} is listed twice")]
    DuplicateWorld(String),
    #[error("the universe has no worlds")]
    NoWorlds,
    #[error("promoting {0:?} into base {1} leaves the universe")]
    MissingPromotion(Vec<Atom>, String),
    #[error("line {line}: {msg}")]
    File { line: usize, msg: String },
}

/// How the worlds of a universe are chosen from its rule universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseFamily {
    AllSubsets,
    Explicit(Vec<Vec<usize>>),
}

/// A finite set of atoms, a finite list of rules, and the bases over them that
/// serve as worlds, ordered by rule inclusion.
#[derive(Debug, Clone)]
pub struct WorldUniverse {
    atoms: Arc<AtomUniverse>,
    rules: Vec<AtomicRule>,
    family: BaseFamily,
    worlds: Vec<FixedBitSet>,
    index: HashMap<FixedBitSet, usize>,
    bases: Vec<Base>,
    extensions: Vec<Vec<usize>>,
    extension_bits: Vec<FixedBitSet>,
    derivable: Vec<AtomSet>,
}

fn render_world(bits: &FixedBitSet) -> String {
    let idx: Vec<String> = bits.ones().map(|i| i.to_string()).collect();
    format!("{{{}}}", idx.join(","))
}

impl WorldUniverse {
    pub fn new(
        atoms: Arc<AtomUniverse>,
        rules: Vec<AtomicRule>,
        family: BaseFamily,
    ) -> Result<WorldUniverse, SupportError> {
        for (i, r) in rules.iter().enumerate() {
            bases::compile_rule(&atoms, r)?;
            if rules[..i].contains(r) {
                return Err(SupportError::DuplicateRule(r.clone()));
            }
        }
        let n = rules.len();
        let worlds: Vec<FixedBitSet> = match &family {
            BaseFamily::AllSubsets => {
                if n > MAX_ALL_SUBSETS_RULES {
                    return Err(SupportError::TooManyRules(n));
                }
                (0..1usize << n)
                    .map(|mask| {
                        let mut bits = FixedBitSet::with_capacity(n);
                        for j in 0..n {
                            bits.set(j, mask >> j & 1 == 1);
                        }
                        bits
                    })
                    .collect()
            }
            BaseFamily::Explicit(list) => {
                let mut out = Vec::with_capacity(list.len());
                for ws in list {
                    let mut bits = FixedBitSet::with_capacity(n);
                    for &j in ws {
                        if j >= n {
                            return Err(SupportError::RuleIndex(j));
                        }
                        bits.insert(j);
                    }
                    out.push(bits);
                }
                out
            }
        };
        if worlds.is_empty() {
            return Err(SupportError::NoWorlds);
        }
        let mut index = HashMap::with_capacity(worlds.len());
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(SupportError::DuplicateWorld(render_world(w)));
            }
        }
        if matches!(family, BaseFamily::Explicit(_)) {
            // closure under adding one rule gives closure under all supersets
            for w in &worlds {
                for j in 0..n {
                    if !w.contains(j) {
                        let mut up = w.clone();
                        up.insert(j);
                        if !index.contains_key(&up) {
                            return Err(SupportError::NotUpwardClosed(
                                render_world(w),
                                render_world(&up),
                            ));
                        }
                    }
                }
            }
        }
        let bases: Vec<Base> = worlds
            .iter()
            .map(|w| Base::new(atoms.clone(), w.ones().map(|j| rules[j].clone())))
            .collect::<Result<_, _>>()?;
        let extensions: Vec<Vec<usize>> = worlds
            .iter()
            .map(|b| {
                worlds
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| b.is_subset(c))
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect();
        let extension_bits = extensions
            .iter()
            .map(|ext| {
                let mut bits = FixedBitSet::with_capacity(worlds.len());
                bits.extend(ext.iter().copied());
                bits
            })
            .collect();
        let derivable = bases
            .iter()
            .map(|b| bases::consequences(b, AtomSet::EMPTY))
            .collect();
        Ok(WorldUniverse {
            atoms,
            rules,
            family,
            worlds,
            index,
            bases,
            extension_bits,
            extensions,
            derivable,
        })
    }

    pub fn all_subsets(
        atoms: Arc<AtomUniverse>,
        rules: Vec<AtomicRule>,
    ) -> Result<WorldUniverse, SupportError> {
        WorldUniverse::new(atoms, rules, BaseFamily::AllSubsets)
    }

    pub fn atoms(&self) -> &Arc<AtomUniverse> {
        &self.atoms
    }

    pub fn rules(&self) -> &[AtomicRule] {
        &self.rules
    }

    pub fn family(&self) -> &BaseFamily {
        &self.family
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn base(&self, world: usize) -> &Base {
        &self.bases[world]
    }

    pub fn bases(&self) -> &[Base] {
        &self.bases
    }

    /// Rule indices of a world.
    pub fn world_rules(&self, world: usize) -> Vec<usize> {
        self.worlds[world].ones().collect()
    }

    pub(crate) fn world_bits(&self, world: usize) -> &FixedBitSet {
        &self.worlds[world]
    }

    /// The world whose rule set is exactly `rule_indices`.
    pub fn world_of(&self, rule_indices: &[usize]) -> Result<usize, SupportError> {
        let mut bits = FixedBitSet::with_capacity(self.rules.len());
        for &j in rule_indices {
            if j >= self.rules.len() {
                return Err(SupportError::RuleIndex(j));
            }
            bits.insert(j);
        }
        self.index
            .get(&bits)
            .copied()
            .ok_or_else(|| SupportError::NotAWorld(render_world(&bits)))
    }

    /// The world whose rules are those of `base`.
    pub fn world_of_base(&self, base: &Base) -> Result<usize, SupportError> {
        let mut idx = Vec::with_capacity(base.rules().len());
        for r in base.rules() {
            match self.rules.iter().position(|x| x == r) {
                Some(j) => idx.push(j),
                None => return Err(SupportError::NotAWorld(format!("{base:?}"))),
            }
        }
        self.world_of(&idx)
    }

    pub fn world_name(&self, world: usize) -> String {
        render_world(&self.worlds[world])
    }

    /// Worlds `C` with `B ⊆ C`, including `B` itself.
    pub fn extensions(&self, world: usize) -> &[usize] {
        &self.extensions[world]
    }

    /// Atoms derivable from no hypotheses at `world`.
    pub fn derivable_atoms(&self, world: usize) -> AtomSet {
        self.derivable[world]
    }

    pub fn check_formula(&self, phi: &Formula) -> Result<(), SupportError> {
        for a in phi.atoms() {
            if !self.atoms.contains(&a) {
                return Err(SupportError::UnknownAtom(a));
            }
        }
        Ok(())
    }

    fn check_world(&self, world: usize) -> Result<(), SupportError> {
        if world < self.worlds.len() {
            Ok(())
        } else {
            Err(SupportError::NotAWorld(format!("#{world}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Atom(usize),
    Top,
    Bot,
    And(u32, u32),
    Or(u32, u32),
    Imp(u32, u32),
}

const UNKNOWN: u8 = 0;
const NO: u8 = 1;
const YES: u8 = 2;

/// Memoizing evaluator of support over one universe.
///
/// [`SupportCache::supports`] evaluates lazily at single worlds;
/// [`SupportCache::denotation`] evaluates the same clauses for all worlds at
/// once. Formulas are hash-consed; [`SupportCache::checkpoint`] and
/// [`SupportCache::rollback`] forget everything interned in between.
pub struct SupportCache<'w> {
    w: &'w WorldUniverse,
    nodes: Vec<Node>,
    formulas: Vec<Formula>,
    ids: HashMap<Formula, u32>,
    /// per node, per world
    memo: Vec<Vec<u8>>,
    /// per node, per atom and world: `phi |=_C a`
    atom_inference: Vec<Vec<u8>>,
    dens: Vec<Option<FixedBitSet>>,
    /// per node, per atom: `{C | phi |=_C a}`
    atom_imps: Vec<Option<Vec<FixedBitSet>>>,
}

/// A point [`SupportCache::rollback`] can return to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint(usize);

impl<'w> SupportCache<'w> {
    pub fn new(w: &'w WorldUniverse) -> SupportCache<'w> {
        SupportCache {
            w,
            nodes: Vec::new(),
            formulas: Vec::new(),
            ids: HashMap::new(),
            memo: Vec::new(),
            atom_inference: Vec::new(),
            dens: Vec::new(),
            atom_imps: Vec::new(),
        }
    }

    pub fn universe(&self) -> &'w WorldUniverse {
        self.w
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint(self.nodes.len())
    }

    /// Forgets every formula interned since `c`.
    pub fn rollback(&mut self, c: Checkpoint) {
        for f in self.formulas.drain(c.0..) {
            self.ids.remove(&f);
        }
        self.nodes.truncate(c.0);
        self.memo.truncate(c.0);
        self.atom_inference.truncate(c.0);
        self.dens.truncate(c.0);
        self.atom_imps.truncate(c.0);
    }

    fn intern(&mut self, phi: &Formula) -> Result<u32, SupportError> {
        if let Some(&id) = self.ids.get(phi) {
            return Ok(id);
        }
        let node = match phi {
            Formula::Atom(a) => Node::Atom(
                self.w
                    .atoms
                    .index(a)
                    .map_err(|_| SupportError::UnknownAtom(a.clone()))?,
            ),
            Formula::Top => Node::Top,
            Formula::Bot => Node::Bot,
            Formula::And(l, r) => Node::And(self.intern(l)?, self.intern(r)?),
            Formula::Or(l, r) => Node::Or(self.intern(l)?, self.intern(r)?),
            Formula::Imp(l, r) => Node::Imp(self.intern(l)?, self.intern(r)?),
        };
        let id = self.nodes.len() as u32;
        self.nodes.push(node);
        self.formulas.push(phi.clone());
        self.memo.push(Vec::new());
        self.atom_inference.push(Vec::new());
        self.dens.push(None);
        self.atom_imps.push(None);
        self.ids.insert(phi.clone(), id);
        Ok(id)
    }

    /// `|=_B phi` for the world `B`.
    pub fn supports(&mut self, world: usize, phi: &Formula) -> Result<bool, SupportError> {
        self.w.check_world(world)?;
        let id = self.intern(phi)?;
        Ok(self.eval(world, id))
    }

    /// `Theta |=_B phi`; an empty `Theta` reduces to support at every extension.
    pub fn infers(
        &mut self,
        world: usize,
        theta: &[Formula],
        phi: &Formula,
    ) -> Result<bool, SupportError> {
        self.w.check_world(world)?;
        let hyps: Vec<u32> = theta
            .iter()
            .map(|t| self.intern(t))
            .collect::<Result<_, _>>()?;
        let goal = self.intern(phi)?;
        Ok(self.w.extensions[world]
            .iter()
            .all(|&c| !hyps.iter().all(|&h| self.eval(c, h)) || self.eval(c, goal)))
    }

    /// `phi |=_C a`, memoized.
    fn infers_atom(&mut self, world: usize, hyp: u32, a: usize) -> bool {
        let n = self.w.len();
        if self.atom_inference[hyp as usize].is_empty() {
            self.atom_inference[hyp as usize] = vec![UNKNOWN; n * self.w.atoms.len()];
        }
        match self.atom_inference[hyp as usize][a * n + world] {
            YES => return true,
            NO => return false,
            _ => {}
        }
        let w = self.w;
        let v = w.extensions[world]
            .iter()
            .all(|&c| !self.eval(c, hyp) || w.derivable[c].contains(a));
        self.atom_inference[hyp as usize][a * n + world] = if v { YES } else { NO };
        v
    }

    fn eval(&mut self, world: usize, id: u32) -> bool {
        if self.memo[id as usize].is_empty() {
            self.memo[id as usize] = vec![UNKNOWN; self.w.len()];
        }
        match self.memo[id as usize][world] {
            YES => return true,
            NO => return false,
            _ => {}
        }
        let w = self.w;
        let v = match self.nodes[id as usize] {
            Node::Atom(a) => w.derivable[world].contains(a),
            Node::Top => true,
            // every atom of the universe is supported
            Node::Bot => (0..w.atoms.len()).all(|a| w.derivable[world].contains(a)),
            Node::And(l, r) => self.eval(world, l) && self.eval(world, r),
            Node::Imp(l, r) => w.extensions[world]
                .iter()
                .all(|&c| !self.eval(c, l) || self.eval(c, r)),
            Node::Or(l, r) => {
                let mut ok = true;
                'atoms: for a in 0..w.atoms.len() {
                    for &c in &w.extensions[world] {
                        if self.infers_atom(c, l, a)
                            && self.infers_atom(c, r, a)
                            && !w.derivable[c].contains(a)
                        {
                            ok = false;
                            break 'atoms;
                        }
                    }
                }
                ok
            }
        };
        self.memo[id as usize][world] = if v { YES } else { NO };
        v
    }

    /// The set of worlds supporting `phi`.
    pub fn denotation(&mut self, phi: &Formula) -> Result<FixedBitSet, SupportError> {
        let id = self.intern(phi)?;
        Ok(self.den(id).clone())
    }

    /// Worlds all of whose extensions avoid `bad`.
    fn avoiding(&self, bad: &FixedBitSet) -> FixedBitSet {
        let n = self.w.len();
        let mut out = FixedBitSet::with_capacity(n);
        for b in 0..n {
            out.set(b, self.w.extension_bits[b].is_disjoint(bad));
        }
        out
    }

    fn atom_set(&self, a: usize) -> FixedBitSet {
        let n = self.w.len();
        let mut out = FixedBitSet::with_capacity(n);
        for b in 0..n {
            out.set(b, self.w.derivable[b].contains(a));
        }
        out
    }

    fn den(&mut self, id: u32) -> &FixedBitSet {
        if self.dens[id as usize].is_none() {
            let n = self.w.len();
            let atoms = self.w.atoms.len();
            let d = match self.nodes[id as usize] {
                Node::Atom(a) => self.atom_set(a),
                Node::Top => {
                    let mut all = FixedBitSet::with_capacity(n);
                    all.insert_range(..);
                    all
                }
                Node::Bot => {
                    let mut all = FixedBitSet::with_capacity(n);
                    all.insert_range(..);
                    for a in 0..atoms {
                        all.intersect_with(&self.atom_set(a));
                    }
                    all
                }
                Node::And(l, r) => {
                    let mut d = self.den(l).clone();
                    d.intersect_with(self.den(r));
                    d
                }
                Node::Imp(l, r) => {
                    let mut bad = self.den(l).clone();
                    bad.difference_with(self.den(r));
                    self.avoiding(&bad)
                }
                Node::Or(l, r) => {
                    let mut out = FixedBitSet::with_capacity(n);
                    out.insert_range(..);
                    for a in 0..atoms {
                        // C where both disjuncts yield a but a is not derivable
                        let mut bad = self.atom_imps(l)[a].clone();
                        bad.intersect_with(&self.atom_imps(r)[a]);
                        bad.difference_with(&self.atom_set(a));
                        out.intersect_with(&self.avoiding(&bad));
                    }
                    out
                }
            };
            self.dens[id as usize] = Some(d);
        }
        self.dens[id as usize].as_ref().expect("just computed")
    }

    fn atom_imps(&mut self, id: u32) -> &[FixedBitSet] {
        if self.atom_imps[id as usize].is_none() {
            let d = self.den(id).clone();
            let v = (0..self.w.atoms.len())
                .map(|a| {
                    let mut bad = d.clone();
                    bad.difference_with(&self.atom_set(a));
                    self.avoiding(&bad)
                })
                .collect();
            self.atom_imps[id as usize] = Some(v);
        }
        self.atom_imps[id as usize].as_ref().expect("just computed")
    }
}

/// `|=_B phi` for world `world` of `w`.
pub fn supports(w: &WorldUniverse, world: usize, phi: &Formula) -> Result<bool, SupportError> {
    SupportCache::new(w).supports(world, phi)
}

/// `Theta |=_B phi` for world `world` of `w`.
pub fn infers(
    w: &WorldUniverse,
    world: usize,
    theta: &[Formula],
    phi: &Formula,
) -> Result<bool, SupportError> {
    SupportCache::new(w).infers(world, theta, phi)
}

/// `Gamma |= phi`: inference holds at every world.
pub fn valid(w: &WorldUniverse, gamma: &[Formula], phi: &Formula) -> Result<bool, SupportError> {
    let mut cache = SupportCache::new(w);
    for b in 0..w.len() {
        if !cache.infers(b, gamma, phi)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `P |=_B a` for a set of atoms `P`. Errors unless `B ∪ {(=> p) | p ∈ P}` is
/// itself a world, since the agreement with `P |-_B a` depends on it.
pub fn atomic_inference(
    w: &WorldUniverse,
    world: usize,
    premises: &[Atom],
    goal: &Atom,
) -> Result<bool, SupportError> {
    w.check_world(world)?;
    let promoted = bases::promote_context(w.base(world), premises)?;
    if w.world_of_base(&promoted).is_err() {
        return Err(SupportError::MissingPromotion(
            premises.to_vec(),
            w.world_name(world),
        ));
    }
    let theta: Vec<Formula> = premises.iter().cloned().map(Formula::Atom).collect();
    infers(w, world, &theta, &Formula::Atom(goal.clone()))
}

/// Reads the universe-file format:
///
/// ```text
/// atoms: a, b
/// rules:
///   0: => a
///   1: ([a] => b) => b
/// bases: all-subsets
/// ```
///
/// or an explicit `bases:` block with one rule-index set such as `{0,1}` per line.
pub fn parse_universe_file(text: &str) -> Result<WorldUniverse, SupportError> {
    #[derive(PartialEq)]
    enum Section {
        Start,
        Rules,
        Bases,
    }
    let file_err = |line: usize, msg: String| SupportError::File { line, msg };
    let mut atoms = None;
    let mut rules = Vec::new();
    let mut family: Option<BaseFamily> = None;
    let mut explicit = Vec::new();
    let mut section = Section::Start;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if let Some(rest) = t.strip_prefix("atoms:") {
            let list = bases::parse_atom_list(rest).map_err(|e| file_err(line, e.to_string()))?;
            atoms = Some(AtomUniverse::new(list).map_err(|e| file_err(line, e.to_string()))?);
            section = Section::Start;
        } else if t == "rules:" {
            section = Section::Rules;
        } else if let Some(rest) = t.strip_prefix("bases:") {
            match rest.trim() {
                "all-subsets" => {
                    family = Some(BaseFamily::AllSubsets);
                    section = Section::Start;
                }
                "" => {
                    family = Some(BaseFamily::Explicit(Vec::new()));
                    section = Section::Bases;
                }
                other => return Err(file_err(line, format!("unknown bases mode `{other}`"))),
            }
        } else if section == Section::Rules {
            let body = match t.split_once(':') {
                Some((idx, body)) if idx.trim().bytes().all(|b| b.is_ascii_digit()) => {
                    let k: usize = idx.trim().parse().map_err(|_| file_err(line, "bad index".into()))?;
                    if k != rules.len() {
                        return Err(file_err(line, format!("expected rule index {}, got {k}", rules.len())));
                    }
                    body
                }
                _ => t,
            };
            rules.push(bases::parse_rule(body.trim()).map_err(|e| file_err(line, e.to_string()))?);
        } else if section == Section::Bases {
            let inner = t
                .strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .ok_or_else(|| file_err(line, format!("expected a rule-index set, got `{t}`")))?;
            let idx = inner
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|_| file_err(line, format!("bad rule index `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            explicit.push(idx);
        } else {
            return Err(file_err(line, format!("unexpected line `{t}`")));
        }
    }
    let atoms = atoms.ok_or_else(|| file_err(0, "missing `atoms:` line".into()))?;
    let family = match family {
        Some(BaseFamily::Explicit(_)) => BaseFamily::Explicit(explicit),
        Some(f) => f,
        None => return Err(file_err(0, "missing `bases:` line".into())),
    };
    WorldUniverse::new(atoms, rules, family)
}

/// Parses a rule-index set written `{0,2}` or `0,2`.
pub fn parse_index_set(text: &str) -> Result<Vec<usize>, String> {
    let t = text.trim();
    let inner = t
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .unwrap_or(t);
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad rule index `{s}`")))
        .collect()
}
