//! Natural-deduction proofs, their checker, and the translation from
//! derivations in `N`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::bases::{Clause, DerivationTree};
use crate::syntax::{Formula, Sequent};

use super::{CompletenessError, NBase, NjInstance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NdRule {
    Hyp,
    AndI,
    AndE1,
    AndE2,
    /// Discharges the given hypothesis.
    ImpI(Formula),
    ImpE,
    OrI1,
    OrI2,
    /// Discharges the left disjunct in the second premise and the right in the third.
    OrE(Formula, Formula),
    BotE,
    TopI,
}

/// A natural-deduction proof tree. Each node records its conclusion and the
/// multiset of hypotheses still open below it.
#[derive(Clone, PartialEq, Eq)]
pub struct NDProof {
    pub rule: NdRule,
    pub conclusion: Formula,
    pub premises: Vec<NDProof>,
    pub open: BTreeMap<Formula, usize>,
}

fn discharge(mut open: BTreeMap<Formula, usize>, f: &Formula) -> BTreeMap<Formula, usize> {
    open.remove(f);
    open
}

fn merge(parts: impl IntoIterator<Item = BTreeMap<Formula, usize>>) -> BTreeMap<Formula, usize> {
    let mut out = BTreeMap::new();
    for p in parts {
        for (f, k) in p {
            *out.entry(f).or_insert(0) += k;
        }
    }
    out
}

fn open_of(rule: &NdRule, conclusion: &Formula, premises: &[NDProof]) -> BTreeMap<Formula, usize> {
    match rule {
        NdRule::Hyp => BTreeMap::from([(conclusion.clone(), 1)]),
        NdRule::ImpI(h) if premises.len() == 1 => discharge(premises[0].open.clone(), h),
        NdRule::OrE(l, r) if premises.len() == 3 => merge([
            premises[0].open.clone(),
            discharge(premises[1].open.clone(), l),
            discharge(premises[2].open.clone(), r),
        ]),
        _ => merge(premises.iter().map(|p| p.open.clone())),
    }
}

impl NDProof {
    /// A node concluding `conclusion` by `rule`; nothing is checked here.
    pub fn new(rule: NdRule, conclusion: Formula, premises: Vec<NDProof>) -> NDProof {
        let open = open_of(&rule, &conclusion, &premises);
        NDProof {
            rule,
            conclusion,
            premises,
            open,
        }
    }

    pub fn hyp(f: Formula) -> NDProof {
        NDProof::new(NdRule::Hyp, f, vec![])
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    fn fmt_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let name = match &self.rule {
            NdRule::Hyp => "hyp".to_string(),
            NdRule::AndI => "&I".into(),
            NdRule::AndE1 => "&E1".into(),
            NdRule::AndE2 => "&E2".into(),
            NdRule::ImpI(h) => format!("->I [{h}]"),
            NdRule::ImpE => "->E".into(),
            NdRule::OrI1 => "|I1".into(),
            NdRule::OrI2 => "|I2".into(),
            NdRule::OrE(l, r) => format!("|E [{l}] [{r}]"),
            NdRule::BotE => "botE".into(),
            NdRule::TopI => "topI".into(),
        };
        writeln!(f, "{:indent$}{}  by {}", "", self.conclusion, name, indent = 2 * depth)?;
        for p in &self.premises {
            p.fmt_indented(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for NDProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_indented(f, 0)
    }
}

impl fmt::Debug for NDProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn locally_ok(p: &NDProof) -> bool {
    let c = |i: usize| &p.premises[i].conclusion;
    let arity = match p.rule {
        NdRule::Hyp | NdRule::TopI => 0,
        NdRule::AndE1 | NdRule::AndE2 | NdRule::ImpI(_) | NdRule::OrI1 | NdRule::OrI2 | NdRule::BotE => 1,
        NdRule::AndI | NdRule::ImpE => 2,
        NdRule::OrE(..) => 3,
    };
    if p.premises.len() != arity || p.open != open_of(&p.rule, &p.conclusion, &p.premises) {
        return false;
    }
    match (&p.rule, &p.conclusion) {
        (NdRule::Hyp, _) => true,
        (NdRule::TopI, Formula::Top) => true,
        (NdRule::AndI, Formula::And(l, r)) => **l == *c(0) && **r == *c(1),
        (NdRule::AndE1, x) => matches!(c(0), Formula::And(l, _) if **l == *x),
        (NdRule::AndE2, x) => matches!(c(0), Formula::And(_, r) if **r == *x),
        (NdRule::ImpI(h), Formula::Imp(l, r)) => **l == *h && **r == *c(0),
        (NdRule::ImpE, x) => matches!(c(0), Formula::Imp(l, r) if **l == *c(1) && **r == *x),
        (NdRule::OrI1, Formula::Or(l, _)) => **l == *c(0),
        (NdRule::OrI2, Formula::Or(_, r)) => **r == *c(0),
        (NdRule::OrE(a, b), x) => {
            matches!(c(0), Formula::Or(l, r) if **l == *a && **r == *b) && c(1) == x && c(2) == x
        }
        (NdRule::BotE, _) => *c(0) == Formula::Bot,
        _ => false,
    }
}

/// Whether `p` is a correct proof of `s`: every node is a well-formed rule
/// application, the root concludes the succedent, and every open hypothesis is
/// an antecedent.
pub fn nd_check(p: &NDProof, s: &Sequent) -> bool {
    fn all_ok(p: &NDProof) -> bool {
        locally_ok(p) && p.premises.iter().all(all_ok)
    }
    all_ok(p)
        && p.conclusion == *s.succedent()
        && p.open.keys().all(|h| s.antecedents().contains(h))
}

/// Reads a derivation in `N` as a natural-deduction proof: each rule becomes
/// the rule it translates and each atom the subformula it names.
pub fn derivation_to_nd(d: &DerivationTree, n: &NBase) -> Result<NDProof, CompletenessError> {
    let pre = |a| {
        n.flat
            .preimage(a)
            .cloned()
            .ok_or_else(|| CompletenessError::UnmappedAtom(a.clone()))
    };
    match d {
        DerivationTree::Ref { atom, .. } => Ok(NDProof::hyp(pre(atom)?)),
        DerivationTree::App { rule, premises, .. } => {
            let inst = n
                .origin(rule)
                .filter(|_| n.base.contains_rule(rule))
                .ok_or_else(|| CompletenessError::UnknownRule(rule.clone()))?;
            let by_clause: HashMap<&Clause, &DerivationTree> = rule.clauses().iter().zip(premises).collect();
            let fl = |f: &Formula| n.flat.flat(f).cloned().expect("instances use subformulas");
            let sub = |prem: &[&Formula], concl: &Formula| -> Result<NDProof, CompletenessError> {
                let clause = Clause::new(prem.iter().map(|f| fl(f)), fl(concl));
                let t = by_clause
                    .get(&clause)
                    .ok_or_else(|| CompletenessError::UnknownRule(rule.clone()))?;
                derivation_to_nd(t, n)
            };
            let concl = pre(rule.conclusion())?;
            let (r, ps) = match inst {
                NjInstance::AndI(l, r) => (NdRule::AndI, vec![sub(&[], l)?, sub(&[], r)?]),
                NjInstance::AndE1(l, r) => (NdRule::AndE1, vec![sub(&[], &Formula::and(l.clone(), r.clone()))?]),
                NjInstance::AndE2(l, r) => (NdRule::AndE2, vec![sub(&[], &Formula::and(l.clone(), r.clone()))?]),
                NjInstance::ImpI(l, r) => (NdRule::ImpI(l.clone()), vec![sub(&[l], r)?]),
                NjInstance::ImpE(l, r) => (
                    NdRule::ImpE,
                    vec![sub(&[], &Formula::imp(l.clone(), r.clone()))?, sub(&[], l)?],
                ),
                NjInstance::OrI1(l, _) => (NdRule::OrI1, vec![sub(&[], l)?]),
                NjInstance::OrI2(_, r) => (NdRule::OrI2, vec![sub(&[], r)?]),
                NjInstance::OrE(l, r, t) => (
                    NdRule::OrE(l.clone(), r.clone()),
                    vec![
                        sub(&[], &Formula::or(l.clone(), r.clone()))?,
                        sub(&[l], t)?,
                        sub(&[r], t)?,
                    ],
                ),
                NjInstance::BotE(_) => (NdRule::BotE, vec![sub(&[], &Formula::Bot)?]),
                NjInstance::TopI => (NdRule::TopI, vec![]),
            };
            Ok(NDProof::new(r, concl, ps))
        }
    }
}
