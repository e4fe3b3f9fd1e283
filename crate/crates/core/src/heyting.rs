//! Finite posets and the complete Heyting algebra of their up-closed subsets.
//!
//! For a universe of bases ordered by inclusion, the up-sets are the possible
//! denotations of formulas. Meet is intersection, join is union, and
//! `U -> V = {x | every y >= x in U is in V}`.

use std::collections::BTreeMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::support::WorldUniverse;
use crate::syntax::{Atom, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeytingError {
    #[error("relation is not a partial order: {0}")]
    NotAnOrder(String),
    #[error("set {0:?} is not upward closed")]
    NotUpClosed(Vec<usize>),
    #[error("set of size {got} does not match poset of size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("no interpretation for atom `{0}`")]
    UnknownAtom(Atom),
}

/// A finite partial order on `0..n`, stored as up- and down-closures of points.
#[derive(Clone, PartialEq, Eq)]
pub struct Poset {
    up: Vec<FixedBitSet>,
    down: Vec<FixedBitSet>,
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<(usize, usize)> = (0..self.len())
            .flat_map(|i| self.up[i].ones().filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        write!(f, "Poset({} points, < {:?})", self.len(), pairs)
    }
}

impl Poset {
    /// Builds the order `leq` on `0..n`, checking reflexivity, antisymmetry and transitivity.
    pub fn from_relation(n: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Poset, HeytingError> {
        let mut up = vec![FixedBitSet::with_capacity(n); n];
        let mut down = vec![FixedBitSet::with_capacity(n); n];
        for i in 0..n {
            for j in 0..n {
                if leq(i, j) {
                    up[i].insert(j);
                    down[j].insert(i);
                }
            }
        }
        for i in 0..n {
            if !up[i].contains(i) {
                return Err(HeytingError::NotAnOrder(format!("{i} is not below itself")));
            }
            for j in up[i].ones() {
                if j != i && up[j].contains(i) {
                    return Err(HeytingError::NotAnOrder(format!("{i} and {j} are below each other")));
                }
                if !up[j].is_subset(&up[i]) {
                    return Err(HeytingError::NotAnOrder(format!("not transitive through {i} <= {j}")));
                }
            }
        }
        Ok(Poset { up, down })
    }

    /// The worlds of a universe under rule-set inclusion.
    pub fn of_universe(w: &WorldUniverse) -> Poset {
        Poset::from_relation(w.len(), |i, j| w.world_bits(i).is_subset(w.world_bits(j)))
            .expect("inclusion of distinct rule sets is a partial order")
    }

    pub fn chain(n: usize) -> Poset {
        Poset::from_relation(n, |i, j| i <= j).unwrap()
    }

    pub fn antichain(n: usize) -> Poset {
        Poset::from_relation(n, |i, j| i == j).unwrap()
    }

    /// Every partial order on `0..n` (labelled, so isomorphic copies repeat).
    pub fn enumerate(n: usize) -> Vec<Poset> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        assert!(pairs.len() < 32, "too many points to enumerate");
        (0u32..1 << pairs.len())
            .filter_map(|mask| {
                Poset::from_relation(n, |i, j| {
                    i == j || pairs.iter().position(|&p| p == (i, j)).is_some_and(|k| mask >> k & 1 == 1)
                })
                .ok()
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.up.len()
    }

    pub fn is_empty(&self) -> bool {
        self.up.is_empty()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.up[i].contains(j)
    }

    /// `{j | i <= j}`.
    pub fn above(&self, i: usize) -> &FixedBitSet {
        &self.up[i]
    }

    pub fn is_up_closed(&self, bits: &FixedBitSet) -> bool {
        bits.ones().all(|i| self.up[i].is_subset(bits))
    }

    pub fn top(&self) -> UpSet {
        let mut bits = FixedBitSet::with_capacity(self.len());
        bits.insert_range(..);
        UpSet(bits)
    }

    pub fn bottom(&self) -> UpSet {
        UpSet(FixedBitSet::with_capacity(self.len()))
    }

    /// The up-set with the given members; errors if they are not upward closed.
    pub fn up_set(&self, members: impl IntoIterator<Item = usize>) -> Result<UpSet, HeytingError> {
        let mut bits = FixedBitSet::with_capacity(self.len());
        for i in members {
            if i >= self.len() {
                return Err(HeytingError::SizeMismatch {
                    expected: self.len(),
                    got: i + 1,
                });
            }
            bits.insert(i);
        }
        self.check(&UpSet(bits.clone()))?;
        Ok(UpSet(bits))
    }

    /// Smallest up-set containing the given points.
    pub fn up_closure(&self, members: impl IntoIterator<Item = usize>) -> UpSet {
        let mut bits = FixedBitSet::with_capacity(self.len());
        for i in members {
            bits.union_with(&self.up[i]);
        }
        UpSet(bits)
    }

    pub fn check(&self, u: &UpSet) -> Result<(), HeytingError> {
        if u.0.len() != self.len() {
            return Err(HeytingError::SizeMismatch {
                expected: self.len(),
                got: u.0.len(),
            });
        }
        if !self.is_up_closed(&u.0) {
            return Err(HeytingError::NotUpClosed(u.members()));
        }
        Ok(())
    }

    /// All up-sets, produced by deciding points from the top of a linear extension down.
    pub fn up_sets(&self) -> Vec<UpSet> {
        self.up_sets_bounded(usize::MAX).expect("unbounded")
    }

    /// Like [`Poset::up_sets`], but gives up with `None` past `limit` up-sets.
    pub fn up_sets_bounded(&self, limit: usize) -> Option<Vec<UpSet>> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        // fewer points above means decided earlier
        order.sort_by_key(|&i| self.up[i].count_ones(..));
        let mut out = Vec::new();
        let mut cur = FixedBitSet::with_capacity(self.len());
        if !self.up_sets_from(&order, 0, &mut cur, &mut out, limit) {
            return None;
        }
        out.sort();
        Some(out)
    }

    fn up_sets_from(
        &self,
        order: &[usize],
        k: usize,
        cur: &mut FixedBitSet,
        out: &mut Vec<UpSet>,
        limit: usize,
    ) -> bool {
        if k == order.len() {
            out.push(UpSet(cur.clone()));
            return out.len() <= limit;
        }
        let x = order[k];
        if !self.up_sets_from(order, k + 1, cur, out, limit) {
            return false;
        }
        // x may join only if everything strictly above it already has
        if self.up[x].ones().all(|y| y == x || cur.contains(y)) {
            cur.insert(x);
            let ok = self.up_sets_from(order, k + 1, cur, out, limit);
            cur.set(x, false);
            return ok;
        }
        true
    }

    pub fn meet(&self, u: &UpSet, v: &UpSet) -> UpSet {
        let mut bits = u.0.clone();
        bits.intersect_with(&v.0);
        UpSet(bits)
    }

    pub fn join(&self, u: &UpSet, v: &UpSet) -> UpSet {
        let mut bits = u.0.clone();
        bits.union_with(&v.0);
        UpSet(bits)
    }

    /// `u -> v` without validating the inputs.
    pub(crate) fn imp(&self, u: &UpSet, v: &UpSet) -> UpSet {
        // x fails exactly when some y >= x is in u but not in v
        let mut bad = FixedBitSet::with_capacity(self.len());
        for y in u.0.difference(&v.0) {
            bad.union_with(&self.down[y]);
        }
        bad.toggle_range(..);
        UpSet(bad)
    }
}

/// An upward-closed set of points of some [`Poset`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UpSet(FixedBitSet);

impl UpSet {
    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(i)
    }

    pub fn members(&self) -> Vec<usize> {
        self.0.ones().collect()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_clear()
    }

    pub fn is_subset(&self, other: &UpSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.0
    }
}

impl fmt::Debug for UpSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.ones()).finish()
    }
}

/// `u -> v` in the up-set algebra of `p`.
pub fn heyting_imp(p: &Poset, u: &UpSet, v: &UpSet) -> Result<UpSet, HeytingError> {
    p.check(u)?;
    p.check(v)?;
    Ok(p.imp(u, v))
}

/// An assignment of up-sets to atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalInterp {
    sigma: BTreeMap<Atom, UpSet>,
}

impl CanonicalInterp {
    pub fn new(p: &Poset, sigma: BTreeMap<Atom, UpSet>) -> Result<CanonicalInterp, HeytingError> {
        for u in sigma.values() {
            p.check(u)?;
        }
        Ok(CanonicalInterp { sigma })
    }

    /// `a ↦ {B | |-_B a}` over the worlds of `w`.
    pub fn from_derivability(w: &WorldUniverse) -> CanonicalInterp {
        let sigma = w
            .atoms()
            .atoms()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut bits = FixedBitSet::with_capacity(w.len());
                for b in 0..w.len() {
                    bits.set(b, w.derivable_atoms(b).contains(i));
                }
                (a.clone(), UpSet(bits))
            })
            .collect();
        CanonicalInterp { sigma }
    }

    pub fn get(&self, a: &Atom) -> Result<&UpSet, HeytingError> {
        self.sigma
            .get(a)
            .ok_or_else(|| HeytingError::UnknownAtom(a.clone()))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.sigma.keys()
    }
}

/// `{B | B forces phi}` under the Kripke clauses, evaluated world by world:
/// atoms by derivability, `bot` nowhere, `|` pointwise, `->` over all extensions.
pub fn denote_kripke(w: &WorldUniverse, phi: &Formula) -> Result<UpSet, HeytingError> {
    let n = w.len();
    let bits = match phi {
        Formula::Atom(a) => {
            let i = w
                .atoms()
                .index(a)
                .map_err(|_| HeytingError::UnknownAtom(a.clone()))?;
            let mut bits = FixedBitSet::with_capacity(n);
            for b in 0..n {
                bits.set(b, w.derivable_atoms(b).contains(i));
            }
            bits
        }
        Formula::Top => {
            let mut bits = FixedBitSet::with_capacity(n);
            bits.insert_range(..);
            bits
        }
        Formula::Bot => FixedBitSet::with_capacity(n),
        Formula::And(l, r) | Formula::Or(l, r) => {
            let (l, r) = (denote_kripke(w, l)?, denote_kripke(w, r)?);
            let is_and = matches!(phi, Formula::And(..));
            let mut bits = FixedBitSet::with_capacity(n);
            for b in 0..n {
                let v = if is_and {
                    l.contains(b) && r.contains(b)
                } else {
                    l.contains(b) || r.contains(b)
                };
                bits.set(b, v);
            }
            bits
        }
        Formula::Imp(l, r) => {
            let (l, r) = (denote_kripke(w, l)?, denote_kripke(w, r)?);
            let mut bits = FixedBitSet::with_capacity(n);
            for b in 0..n {
                let v = w
                    .extensions(b)
                    .iter()
                    .all(|&c| !l.contains(c) || r.contains(c));
                bits.set(b, v);
            }
            bits
        }
    };
    Ok(UpSet(bits))
}

/// The canonical interpretation of `phi` in the up-set algebra of `p`.
pub fn denote_algebraic(
    p: &Poset,
    sigma: &CanonicalInterp,
    phi: &Formula,
) -> Result<UpSet, HeytingError> {
    Ok(match phi {
        Formula::Atom(a) => sigma.get(a)?.clone(),
        Formula::Top => p.top(),
        Formula::Bot => p.bottom(),
        Formula::And(l, r) => p.meet(&denote_algebraic(p, sigma, l)?, &denote_algebraic(p, sigma, r)?),
        Formula::Or(l, r) => p.join(&denote_algebraic(p, sigma, l)?, &denote_algebraic(p, sigma, r)?),
        Formula::Imp(l, r) => p.imp(&denote_algebraic(p, sigma, l)?, &denote_algebraic(p, sigma, r)?),
    })
}
