//! Checking that a subformula and the atom naming it are supported by the
//! same bases above `N`.

use std::fmt;

use crate::bases::AtomicRule;
use crate::support::{BaseFamily, SupportCache, WorldUniverse};
use crate::syntax::{Formula, Sequent};

use super::{build_base_n, CompletenessError};

/// Largest family of bases [`check_dagger`] will build.
pub const MAX_DAGGER_WORLDS: u128 = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaggerCounterexample {
    /// Extra rules added to `N` at this base.
    pub extras: Vec<AtomicRule>,
    pub formula: Formula,
    pub formula_supported: bool,
    pub flat_supported: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DaggerReport {
    pub worlds: usize,
    pub checks: usize,
    pub counterexamples: Vec<DaggerCounterexample>,
}

impl DaggerReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

impl fmt::Display for DaggerReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} worlds, {} checks, {} counterexamples", self.worlds, self.checks, self.counterexamples.len())?;
        for c in &self.counterexamples {
            let extras: Vec<String> = c.extras.iter().map(|r| r.to_string()).collect();
            writeln!(
                f,
                "  N + {{{}}}: {} is {}supported but its atom is {}supported",
                extras.join("; "),
                c.formula,
                if c.formula_supported { "" } else { "not " },
                if c.flat_supported { "" } else { "not " },
            )?;
        }
        Ok(())
    }
}

/// `(=> p)` for every atom `p` of the flattening of `s`. Adding these to the
/// extras closes the family under the promotions atomic inference relies on;
/// without them a finite family can make an implication or disjunction hold
/// vacuously while its atom does not.
pub fn promotion_axioms(s: &Sequent) -> Result<Vec<AtomicRule>, CompletenessError> {
    Ok(super::flatten(s)?.at_star().iter().cloned().map(AtomicRule::axiom).collect())
}

/// For every base `B` with `N ⊆ B ⊆ N ∪ extras` and every subformula `phi`
/// of `s`, compares support of `phi` with support of its flattened atom.
pub fn check_dagger(s: &Sequent, extras: &[AtomicRule]) -> Result<DaggerReport, CompletenessError> {
    let n = build_base_n(s)?;
    let atoms = n.base.universe().clone();
    for r in extras {
        if let Some(a) = r.atoms().find(|a| !atoms.contains(a)) {
            return Err(CompletenessError::ExtraRuleAtom(a.clone()));
        }
    }
    let mut rules: Vec<AtomicRule> = n.base.rules().to_vec();
    let core = rules.len();
    for r in extras {
        if !rules.contains(r) {
            rules.push(r.clone());
        }
    }
    let k = rules.len() - core;
    if k >= 128 || 1u128 << k > MAX_DAGGER_WORLDS {
        return Err(CompletenessError::TooManyWorlds(if k >= 128 { u128::MAX } else { 1 << k }));
    }
    let family: Vec<Vec<usize>> = (0..1usize << k)
        .map(|mask| {
            (0..core)
                .chain((0..k).filter(|j| mask >> j & 1 == 1).map(|j| core + j))
                .collect()
        })
        .collect();
    let w = WorldUniverse::new(atoms, rules.clone(), BaseFamily::Explicit(family))?;
    let mut cache = SupportCache::new(&w);
    let mut report = DaggerReport {
        worlds: w.len(),
        checks: 0,
        counterexamples: Vec::new(),
    };
    for b in 0..w.len() {
        for phi in n.flat.subformulas() {
            let flat = Formula::Atom(n.flat.flat(phi).expect("subformula").clone());
            let (x, y) = (cache.supports(b, phi)?, cache.supports(b, &flat)?);
            report.checks += 1;
            if x != y {
                report.counterexamples.push(DaggerCounterexample {
                    extras: w.world_rules(b).into_iter().filter(|&j| j >= core).map(|j| rules[j].clone()).collect(),
                    formula: phi.clone(),
                    formula_supported: x,
                    flat_supported: y,
                });
            }
        }
    }
    Ok(report)
}
