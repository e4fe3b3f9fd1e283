//! The completeness pipeline: flattening a sequent, the base `N` of
//! natural-deduction translates, proving through `N`, turning derivations back
//! into natural-deduction proofs, and checking that flattening preserves support.

mod dagger;
mod g4ip;
mod nd;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::bases::{derive_tree, AtomUniverse, AtomicRule, Base, BaseError, Clause, DerivationTree};
use crate::support::SupportError;
use crate::syntax::{subformulas, Atom, Formula, Sequent};

pub use dagger::{check_dagger, promotion_axioms, DaggerCounterexample, DaggerReport, MAX_DAGGER_WORLDS};
pub use g4ip::g4ip_provable;
pub use nd::{derivation_to_nd, nd_check, NDProof, NdRule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompletenessError {
    #[error("atom `{0}` uses the reserved `#` prefix")]
    ReservedAtom(Atom),
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error(transparent)]
    Support(#[from] SupportError),
    #[error("rule {0} is not a translate of a natural-deduction rule")]
    UnknownRule(AtomicRule),
    #[error("atom `{0}` does not stand for a subformula")]
    UnmappedAtom(Atom),
    #[error("extra rule mentions atom `{0}` outside the flattened atoms")]
    ExtraRuleAtom(Atom),
    #[error("{0} worlds exceed the limit of {MAX_DAGGER_WORLDS}")]
    TooManyWorlds(u128),
}

/// The flattening of a sequent: every subformula gets an atom, atoms stand for
/// themselves and every other subformula gets a fresh `#k`, numbered in
/// subformula order.
#[derive(Clone, PartialEq, Eq)]
pub struct FlatMap {
    subformulas: Vec<Formula>,
    forward: HashMap<Formula, Atom>,
    backward: HashMap<Atom, Formula>,
    at_star: Vec<Atom>,
}

impl FlatMap {
    /// The atom standing for `phi`, if `phi` is a subformula.
    pub fn flat(&self, phi: &Formula) -> Option<&Atom> {
        self.forward.get(phi)
    }

    /// The subformula an atom stands for.
    pub fn preimage(&self, a: &Atom) -> Option<&Formula> {
        self.backward.get(a)
    }

    /// Subformulas of the sequent in flattening order.
    pub fn subformulas(&self) -> &[Formula] {
        &self.subformulas
    }

    /// Original atoms followed by the fresh ones.
    pub fn at_star(&self) -> &[Atom] {
        &self.at_star
    }

    /// `(#k, formula)` for each fresh atom, in order.
    pub fn fresh_table(&self) -> Vec<(Atom, Formula)> {
        self.subformulas
            .iter()
            .filter(|f| !f.is_atom())
            .map(|f| (self.forward[f].clone(), f.clone()))
            .collect()
    }

    fn flat_sequent(&self, s: &Sequent) -> (Vec<Atom>, Atom) {
        let ctx = s.antecedents().iter().map(|f| self.forward[f].clone()).collect();
        (ctx, self.forward[s.succedent()].clone())
    }
}

impl fmt::Debug for FlatMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.fresh_table()).finish()
    }
}

/// Assigns atoms to all subformulas of `s`.
pub fn flatten(s: &Sequent) -> Result<FlatMap, CompletenessError> {
    let subformulas = subformulas(s);
    let mut forward = HashMap::new();
    let mut backward = HashMap::new();
    let mut originals = Vec::new();
    let mut fresh = Vec::new();
    for f in &subformulas {
        let a = match f {
            Formula::Atom(a) => {
                if a.is_fresh() {
                    return Err(CompletenessError::ReservedAtom(a.clone()));
                }
                originals.push(a.clone());
                a.clone()
            }
            _ => {
                let a = Atom::fresh(fresh.len());
                fresh.push(a.clone());
                a
            }
        };
        forward.insert(f.clone(), a.clone());
        backward.insert(a, f.clone());
    }
    originals.extend(fresh);
    Ok(FlatMap {
        subformulas,
        forward,
        backward,
        at_star: originals,
    })
}

/// The natural-deduction rule instance an `N` rule translates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NjInstance {
    AndI(Formula, Formula),
    AndE1(Formula, Formula),
    AndE2(Formula, Formula),
    ImpI(Formula, Formula),
    ImpE(Formula, Formula),
    OrI1(Formula, Formula),
    OrI2(Formula, Formula),
    /// Elimination of `l | r` into the subformula at the target atom.
    OrE(Formula, Formula, Formula),
    /// Ex falso into the subformula at the target atom.
    BotE(Formula),
    TopI,
}

/// The base `N` for a sequent together with its flattening.
#[derive(Clone, Debug)]
pub struct NBase {
    pub base: Base,
    pub flat: FlatMap,
    origin: HashMap<AtomicRule, NjInstance>,
}

impl NBase {
    /// The rule instance a rule of `N` came from.
    pub fn origin(&self, r: &AtomicRule) -> Option<&NjInstance> {
        self.origin.get(r)
    }

    /// Base-file text for `N`, preceded by the fresh-atom table as comments.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (a, f) in self.flat.fresh_table() {
            out.push_str(&format!("# {a} = {f}\n"));
        }
        out.push_str(&self.base.to_file_string());
        out
    }
}

/// Builds `N`: translates of the introduction and elimination rules for every
/// subformula, with `|`-elimination and ex falso targeting every atom of `At*`.
pub fn build_base_n(s: &Sequent) -> Result<NBase, CompletenessError> {
    let flat = flatten(s)?;
    let fl = |f: &Formula| flat.forward[f].clone();
    let plain = |f: &Formula| Clause::plain(fl(f));
    let mut rules: Vec<(AtomicRule, NjInstance)> = Vec::new();
    for f in &flat.subformulas {
        let (l, r) = match f {
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => ((**l).clone(), (**r).clone()),
            _ => (Formula::Top, Formula::Top),
        };
        match f {
            Formula::Atom(_) => {}
            Formula::Top => rules.push((AtomicRule::axiom(fl(f)), NjInstance::TopI)),
            Formula::Bot => {
                for p in &flat.at_star {
                    let target = flat.backward[p].clone();
                    rules.push((AtomicRule::new([plain(f)], p.clone()), NjInstance::BotE(target)));
                }
            }
            Formula::And(..) => {
                rules.push((AtomicRule::new([plain(&l), plain(&r)], fl(f)), NjInstance::AndI(l.clone(), r.clone())));
                rules.push((AtomicRule::new([plain(f)], fl(&l)), NjInstance::AndE1(l.clone(), r.clone())));
                rules.push((AtomicRule::new([plain(f)], fl(&r)), NjInstance::AndE2(l, r)));
            }
            Formula::Imp(..) => {
                rules.push((
                    AtomicRule::new([Clause::new([fl(&l)], fl(&r))], fl(f)),
                    NjInstance::ImpI(l.clone(), r.clone()),
                ));
                rules.push((AtomicRule::new([plain(f), plain(&l)], fl(&r)), NjInstance::ImpE(l, r)));
            }
            Formula::Or(..) => {
                rules.push((AtomicRule::new([plain(&l)], fl(f)), NjInstance::OrI1(l.clone(), r.clone())));
                rules.push((AtomicRule::new([plain(&r)], fl(f)), NjInstance::OrI2(l.clone(), r.clone())));
                for p in &flat.at_star {
                    let target = flat.backward[p].clone();
                    let rule = AtomicRule::new(
                        [plain(f), Clause::new([fl(&l)], p.clone()), Clause::new([fl(&r)], p.clone())],
                        p.clone(),
                    );
                    rules.push((rule, NjInstance::OrE(l.clone(), r.clone(), target)));
                }
            }
        }
    }
    let mut origin = HashMap::new();
    for (r, inst) in &rules {
        origin.entry(r.clone()).or_insert_with(|| inst.clone());
    }
    let universe = AtomUniverse::new(flat.at_star.iter().cloned())?;
    let base = Base::new(universe, rules.into_iter().map(|(r, _)| r))?;
    Ok(NBase { base, flat, origin })
}

/// A derivation of `⌊s⌋` in `N`, if there is one.
pub fn derive_via_base(s: &Sequent) -> Result<(NBase, Option<DerivationTree>), CompletenessError> {
    let n = build_base_n(s)?;
    let (ctx, goal) = n.flat.flat_sequent(s);
    let tree = derive_tree(&n.base, &ctx, &goal)?;
    Ok((n, tree))
}

/// Whether `⌊antecedents⌋ |-_N ⌊succedent⌋`.
pub fn prove_via_base(s: &Sequent) -> Result<bool, CompletenessError> {
    Ok(derive_via_base(s)?.1.is_some())
}

/// Counts of `N` rules by kind, for size bounds.
pub fn rule_counts(n: &NBase) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for r in n.base.rules() {
        let k = match &n.origin[r] {
            NjInstance::AndI(..) => "and-intro",
            NjInstance::AndE1(..) | NjInstance::AndE2(..) => "and-elim",
            NjInstance::ImpI(..) => "imp-intro",
            NjInstance::ImpE(..) => "imp-elim",
            NjInstance::OrI1(..) | NjInstance::OrI2(..) => "or-intro",
            NjInstance::OrE(..) => "or-elim",
            NjInstance::BotE(..) => "bot-elim",
            NjInstance::TopI => "top-intro",
        };
        *out.entry(k).or_insert(0) += 1;
    }
    out
}
