//! Nuclei on finite up-set algebras and the j-interpretation of formulas.
//!
//! A nucleus is monotone, increasing, idempotent and preserves binary meets.
//! Nuclei are kept symbolic (identity, `a ↦ (a→h)→h`, finite meets, or an
//! explicit table) so they can be applied on algebras far too large to
//! tabulate; [`check_nucleus_laws`] tabulates on demand.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::heyting::{CanonicalInterp, HeytingError, Poset, UpSet};
use crate::support::{SupportCache, SupportError, WorldUniverse};
use crate::syntax::Formula;

/// Largest number of up-sets [`check_nucleus_laws`] and [`FixSubalgebra`] will enumerate.
pub const MAX_TABULATED_UPSETS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NucleusError {
    #[error(transparent)]
    Heyting(#[from] HeytingError),
    #[error("table has no entry for up-set {0:?}")]
    PartialTable(Vec<usize>),
    #[error("nuclei live on different posets")]
    MismatchedPosets,
    #[error("meet of an empty list of nuclei")]
    EmptyMeet,
    #[error("the atom universe is empty")]
    NoAtoms,
    #[error("poset has more than {MAX_TABULATED_UPSETS} up-sets")]
    TooManyUpSets,
    #[error(transparent)]
    Support(#[from] SupportError),
}

#[derive(Clone, Debug)]
enum Repr {
    Identity,
    /// `a ↦ (a→h)→h`
    DoubleDual(UpSet),
    Meet(Vec<Nucleus>),
    Table(Arc<HashMap<UpSet, UpSet>>),
}

/// A closure operator on the up-sets of a fixed poset.
#[derive(Clone, Debug)]
pub struct Nucleus {
    poset: Arc<Poset>,
    repr: Repr,
}

impl Nucleus {
    pub fn identity(poset: Arc<Poset>) -> Nucleus {
        Nucleus {
            poset,
            repr: Repr::Identity,
        }
    }

    pub fn constant_top(poset: Arc<Poset>) -> Nucleus {
        let top = poset.top();
        Nucleus {
            poset,
            repr: Repr::DoubleDual(top),
        }
    }

    /// An explicit map, which must be defined on every up-set of `poset`.
    pub fn from_table(poset: Arc<Poset>, table: HashMap<UpSet, UpSet>) -> Result<Nucleus, NucleusError> {
        let ups = poset
            .up_sets_bounded(MAX_TABULATED_UPSETS)
            .ok_or(NucleusError::TooManyUpSets)?;
        for u in &ups {
            let image = table
                .get(u)
                .ok_or_else(|| NucleusError::PartialTable(u.members()))?;
            poset.check(image)?;
        }
        Ok(Nucleus {
            poset,
            repr: Repr::Table(Arc::new(table)),
        })
    }

    /// Tabulates `f` over every up-set of `poset`.
    pub fn from_fn(poset: Arc<Poset>, f: impl Fn(&UpSet) -> UpSet) -> Result<Nucleus, NucleusError> {
        let ups = poset
            .up_sets_bounded(MAX_TABULATED_UPSETS)
            .ok_or(NucleusError::TooManyUpSets)?;
        let table = ups.into_iter().map(|u| {
            let v = f(&u);
            (u, v)
        });
        Nucleus::from_table(poset, table.collect())
    }

    pub fn poset(&self) -> &Arc<Poset> {
        &self.poset
    }

    pub fn apply(&self, a: &UpSet) -> UpSet {
        let p = &*self.poset;
        match &self.repr {
            Repr::Identity => a.clone(),
            Repr::DoubleDual(h) => p.imp(&p.imp(a, h), h),
            Repr::Meet(js) => js
                .iter()
                .map(|j| j.apply(a))
                .reduce(|x, y| p.meet(&x, &y))
                .expect("meets are nonempty"),
            Repr::Table(t) => t[a].clone(),
        }
    }

    /// The table of `j` over every up-set.
    pub fn tabulate(&self) -> Result<Vec<(UpSet, UpSet)>, NucleusError> {
        let ups = self
            .poset
            .up_sets_bounded(MAX_TABULATED_UPSETS)
            .ok_or(NucleusError::TooManyUpSets)?;
        Ok(ups
            .into_iter()
            .map(|u| {
                let v = self.apply(&u);
                (u, v)
            })
            .collect())
    }
}

/// `a ↦ (a→h)→h`.
pub fn nucleus_from_element(poset: Arc<Poset>, h: UpSet) -> Result<Nucleus, NucleusError> {
    poset.check(&h)?;
    Ok(Nucleus {
        poset,
        repr: Repr::DoubleDual(h),
    })
}

/// Pointwise intersection of nuclei on the same poset.
pub fn meet_nuclei(js: Vec<Nucleus>) -> Result<Nucleus, NucleusError> {
    let first = js.first().ok_or(NucleusError::EmptyMeet)?;
    let poset = first.poset.clone();
    if js.iter().any(|j| !Arc::ptr_eq(&j.poset, &poset) && *j.poset != *poset) {
        return Err(NucleusError::MismatchedPosets);
    }
    if js.len() == 1 {
        return Ok(js.into_iter().next().unwrap());
    }
    Ok(Nucleus {
        poset,
        repr: Repr::Meet(js),
    })
}

/// `J(a) = ⋀_b (a→⟦b⟧)→⟦b⟧` over the atoms `b` of `w`, with `⟦b⟧` the bases deriving `b`.
pub fn sandqvist_nucleus(w: &WorldUniverse) -> Result<Nucleus, NucleusError> {
    sandqvist_nucleus_on(Arc::new(Poset::of_universe(w)), &CanonicalInterp::from_derivability(w))
}

/// [`sandqvist_nucleus`] for a poset and interpretation already in hand.
pub fn sandqvist_nucleus_on(poset: Arc<Poset>, sigma: &CanonicalInterp) -> Result<Nucleus, NucleusError> {
    let js = sigma
        .atoms()
        .map(|b| nucleus_from_element(poset.clone(), sigma.get(b)?.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    if js.is_empty() {
        return Err(NucleusError::NoAtoms);
    }
    meet_nuclei(js)
}

/// First counterexample to each nucleus law, if any.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LawReport {
    /// `a ⊆ b` but `j(a) ⊄ j(b)`.
    pub order_preserving: Option<(UpSet, UpSet)>,
    /// `a ⊄ j(a)`.
    pub increasing: Option<UpSet>,
    /// `j(j(a)) ≠ j(a)`.
    pub idempotent: Option<UpSet>,
    /// `j(a ∩ b) ≠ j(a) ∩ j(b)`.
    pub meet_preserving: Option<(UpSet, UpSet)>,
    /// An image that is not up-closed.
    pub closed: Option<UpSet>,
}

impl LawReport {
    pub fn all_pass(&self) -> bool {
        *self == LawReport::default()
    }
}

/// Checks the nucleus laws on every up-set (and pair of up-sets) of `p`.
pub fn check_nucleus_laws(p: &Poset, j: &Nucleus) -> Result<LawReport, NucleusError> {
    if *j.poset != *p {
        return Err(NucleusError::MismatchedPosets);
    }
    let table = j.tabulate()?;
    let image: HashMap<&UpSet, &UpSet> = table.iter().map(|(u, v)| (u, v)).collect();
    let jj = |u: &UpSet| -> Result<&UpSet, NucleusError> {
        image
            .get(u)
            .copied()
            .ok_or_else(|| NucleusError::PartialTable(u.members()))
    };
    let mut report = LawReport::default();
    for (a, ja) in &table {
        if report.closed.is_none() && p.check(ja).is_err() {
            report.closed = Some(a.clone());
            continue;
        }
        if report.increasing.is_none() && !a.is_subset(ja) {
            report.increasing = Some(a.clone());
        }
        if report.idempotent.is_none() && jj(ja)? != ja {
            report.idempotent = Some(a.clone());
        }
    }
    if report.closed.is_some() {
        return Ok(report);
    }
    for (a, ja) in &table {
        for (b, jb) in &table {
            if report.order_preserving.is_none() && a.is_subset(b) && !ja.is_subset(jb) {
                report.order_preserving = Some((a.clone(), b.clone()));
            }
            if report.meet_preserving.is_none() && *jj(&p.meet(a, b))? != p.meet(ja, jb) {
                report.meet_preserving = Some((a.clone(), b.clone()));
            }
        }
    }
    Ok(report)
}

/// The fixpoints of a nucleus with the operations they inherit.
#[derive(Clone, Debug)]
pub struct FixSubalgebra {
    j: Nucleus,
    carrier: Vec<UpSet>,
}

impl FixSubalgebra {
    pub fn new(j: Nucleus) -> Result<FixSubalgebra, NucleusError> {
        let mut carrier: Vec<UpSet> = j.tabulate()?.into_iter().map(|(_, v)| v).collect();
        carrier.sort();
        carrier.dedup();
        Ok(FixSubalgebra { j, carrier })
    }

    pub fn carrier(&self) -> &[UpSet] {
        &self.carrier
    }

    pub fn contains(&self, a: &UpSet) -> bool {
        self.carrier.binary_search(a).is_ok()
    }

    pub fn top(&self) -> UpSet {
        self.j.poset.top()
    }

    pub fn bot(&self) -> UpSet {
        self.j.apply(&self.j.poset.bottom())
    }

    pub fn meet(&self, a: &UpSet, b: &UpSet) -> UpSet {
        self.j.poset.meet(a, b)
    }

    pub fn join(&self, a: &UpSet, b: &UpSet) -> UpSet {
        self.j.apply(&self.j.poset.join(a, b))
    }

    pub fn imp(&self, a: &UpSet, b: &UpSet) -> UpSet {
        self.j.poset.imp(a, b)
    }

    /// Verifies that the carrier is closed under its operations, that
    /// implication lands in the carrier whenever its consequent does, and
    /// that the carrier is a distributive lattice with a Heyting implication.
    pub fn check(&self) -> Result<(), String> {
        let p = &*self.j.poset;
        let show = |u: &UpSet| format!("{:?}", u);
        if !self.contains(&self.top()) {
            return Err("top is not a fixpoint".into());
        }
        if !self.contains(&self.bot()) {
            return Err("j(bot) is not a fixpoint".into());
        }
        for a in p.up_sets_bounded(MAX_TABULATED_UPSETS).ok_or("too many up-sets")? {
            for b in &self.carrier {
                let imp = self.imp(&a, b);
                if !self.contains(&imp) {
                    return Err(format!("{} -> {} is not a fixpoint", show(&a), show(b)));
                }
            }
        }
        for a in &self.carrier {
            if !self.bot().is_subset(a) {
                return Err(format!("j(bot) is not below {}", show(a)));
            }
            for b in &self.carrier {
                let (m, jn) = (self.meet(a, b), self.join(a, b));
                if !self.contains(&m) || !self.contains(&jn) {
                    return Err(format!("{} and {} leave the carrier", show(a), show(b)));
                }
                let imp = self.imp(a, b);
                for x in &self.carrier {
                    if x.is_subset(&imp) != self.meet(x, a).is_subset(b) {
                        return Err(format!("adjunction fails at {} {} {}", show(x), show(a), show(b)));
                    }
                    let lhs = self.meet(a, &self.join(b, x));
                    let rhs = self.join(&self.meet(a, b), &self.meet(a, x));
                    if lhs != rhs {
                        return Err(format!("distributivity fails at {} {} {}", show(a), show(b), show(x)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `⟦phi⟧_j` over the worlds of `w`, with atoms read off derivability.
pub fn interpret_j(w: &WorldUniverse, j: &Nucleus, phi: &Formula) -> Result<UpSet, NucleusError> {
    if j.poset.len() != w.len() {
        return Err(NucleusError::MismatchedPosets);
    }
    interpret_j_with(j, &CanonicalInterp::from_derivability(w), phi)
}

/// `⟦phi⟧_j` for an arbitrary interpretation of atoms.
///
/// `j` is applied at atoms, `bot` and `|`; the other clauses already land on fixpoints.
pub fn interpret_j_with(j: &Nucleus, sigma: &CanonicalInterp, phi: &Formula) -> Result<UpSet, NucleusError> {
    j_clause(j, sigma, phi, &mut |f| interpret_j_with(j, sigma, f))
}

/// One clause of the j-interpretation, with `sub` giving the values of the
/// immediate subformulas.
fn j_clause(
    j: &Nucleus,
    sigma: &CanonicalInterp,
    phi: &Formula,
    sub: &mut dyn FnMut(&Formula) -> Result<UpSet, NucleusError>,
) -> Result<UpSet, NucleusError> {
    let p = &*j.poset;
    Ok(match phi {
        Formula::Atom(a) => j.apply(sigma.get(a)?),
        Formula::Top => p.top(),
        Formula::Bot => j.apply(&p.bottom()),
        Formula::And(l, r) => p.meet(&sub(l)?, &sub(r)?),
        Formula::Or(l, r) => j.apply(&p.join(&sub(l)?, &sub(r)?)),
        Formula::Imp(l, r) => p.imp(&sub(l)?, &sub(r)?),
    })
}

/// A world where support and the `J`-interpretation disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivCounterexample {
    pub world: usize,
    pub formula: Formula,
    pub supported: bool,
    pub interpreted: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivReport {
    pub max_depth: usize,
    /// Formulas actually evaluated.
    pub formulas: usize,
    /// Distinct pairs of denotations among formulas below the maximum depth.
    pub classes: usize,
    pub counterexamples: Vec<EquivCounterexample>,
    /// `&`, `->` or `top` formulas whose interpretation `J` moves.
    pub not_fixed: Vec<Formula>,
}

impl EquivReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.not_fixed.is_empty()
    }
}

/// Compares support with the `J`-interpretation at every world, for every
/// formula over the universe's atoms, `top` and `bot` of depth at most `max_depth`.
///
/// Both semantics see a subformula only through its denotation, so formulas
/// whose (support, interpretation) denotations coincide are interchangeable
/// as subformulas. Each depth is built from one representative per class of
/// the depths below, which covers every formula up to that congruence.
pub fn check_main_equivalence(
    w: &WorldUniverse,
    max_depth: usize,
    max_counterexamples: usize,
) -> Result<EquivReport, NucleusError> {
    let poset = Arc::new(Poset::of_universe(w));
    let sigma = CanonicalInterp::from_derivability(w);
    let j = sandqvist_nucleus_on(poset.clone(), &sigma)?;
    let mut cache = SupportCache::new(w);
    let mut report = EquivReport {
        max_depth,
        ..EquivReport::default()
    };
    let mut reps: Vec<(Formula, usize)> = Vec::new();
    let mut interp: HashMap<Formula, UpSet> = HashMap::new();
    let mut seen: HashSet<(FixedBitSet, UpSet)> = HashSet::new();

    let mut visit = |phi: Formula,
                     depth: usize,
                     keep: bool,
                     cache: &mut SupportCache,
                     reps: &mut Vec<(Formula, usize)>,
                     interp: &mut HashMap<Formula, UpSet>,
                     report: &mut EquivReport|
     -> Result<(), NucleusError> {
        let mark = cache.checkpoint();
        let supported = cache.denotation(&phi)?;
        let interpreted = j_clause(&j, &sigma, &phi, &mut |f| Ok(interp[f].clone()))?;
        report.formulas += 1;
        if matches!(phi, Formula::And(..) | Formula::Imp(..) | Formula::Top) && j.apply(&interpreted) != interpreted {
            report.not_fixed.push(phi.clone());
        }
        if supported != *interpreted.bits() {
            for b in 0..w.len() {
                if supported.contains(b) != interpreted.contains(b)
                    && report.counterexamples.len() < max_counterexamples
                {
                    report.counterexamples.push(EquivCounterexample {
                        world: b,
                        formula: phi.clone(),
                        supported: supported.contains(b),
                        interpreted: interpreted.contains(b),
                    });
                }
            }
        }
        if keep && seen.insert((supported, interpreted.clone())) {
            interp.insert(phi.clone(), interpreted);
            reps.push((phi, depth));
        } else {
            cache.rollback(mark);
        }
        Ok(())
    };

    let leaves = w
        .atoms()
        .atoms()
        .iter()
        .map(|a| Formula::Atom(a.clone()))
        .chain([Formula::Top, Formula::Bot]);
    for phi in leaves {
        visit(phi, 0, max_depth > 0, &mut cache, &mut reps, &mut interp, &mut report)?;
    }
    for depth in 1..=max_depth {
        let keep = depth < max_depth;
        let snapshot = reps.clone();
        for (x, dx) in &snapshot {
            for (y, dy) in &snapshot {
                if (*dx).max(*dy) + 1 != depth {
                    continue;
                }
                for phi in [
                    Formula::and(x.clone(), y.clone()),
                    Formula::or(x.clone(), y.clone()),
                    Formula::imp(x.clone(), y.clone()),
                ] {
                    visit(phi, depth, keep, &mut cache, &mut reps, &mut interp, &mut report)?;
                }
            }
        }
    }
    report.classes = reps.len();
    Ok(report)
}
