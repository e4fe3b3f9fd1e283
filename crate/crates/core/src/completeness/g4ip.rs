//! Dyckhoff's contraction-free sequent calculus G4ip.
//!
//! Invertible rules are applied eagerly; left implications are split on the
//! shape of their antecedent:
//!
//! ```text
//! p, B, G => E              / p, p -> B, G => E
//! C -> (D -> B), G => E     / (C & D) -> B, G => E
//! C -> B, D -> B, G => E    / (C | D) -> B, G => E
//! B, G => E                 / top -> B, G => E
//! G => E                    / bot -> B, G => E
//! D -> B, G => C -> D   B, G => E
//! ---------------------------------
//!        (C -> D) -> B, G => E
//! ```
//!
//! Only `|`-right and the last rule branch; every premise is smaller in the
//! multiset ordering, so the search terminates without loop checks.

use std::collections::{BTreeSet, HashMap};

use crate::syntax::Formula;

type Ctx = BTreeSet<Formula>;

/// Whether `gamma |- phi` holds in intuitionistic propositional logic.
pub fn g4ip_provable(gamma: &[Formula], phi: &Formula) -> bool {
    let mut memo = HashMap::new();
    prove(gamma.iter().cloned().collect(), phi.clone(), &mut memo)
}

fn without(ctx: &Ctx, f: &Formula) -> Ctx {
    let mut c = ctx.clone();
    c.remove(f);
    c
}

fn with(mut ctx: Ctx, fs: impl IntoIterator<Item = Formula>) -> Ctx {
    ctx.extend(fs);
    ctx
}

fn prove(ctx: Ctx, goal: Formula, memo: &mut HashMap<(Ctx, Formula), bool>) -> bool {
    if let Some(&v) = memo.get(&(ctx.clone(), goal.clone())) {
        return v;
    }
    let v = search(&ctx, &goal, memo);
    memo.insert((ctx, goal), v);
    v
}

fn search(ctx: &Ctx, goal: &Formula, memo: &mut HashMap<(Ctx, Formula), bool>) -> bool {
    if ctx.contains(goal) || ctx.contains(&Formula::Bot) || *goal == Formula::Top {
        return true;
    }
    // invertible left rules
    for f in ctx {
        let rest = || without(ctx, f);
        match f {
            Formula::Top => return prove(rest(), goal.clone(), memo),
            Formula::And(l, r) => {
                return prove(with(rest(), [(**l).clone(), (**r).clone()]), goal.clone(), memo)
            }
            Formula::Or(l, r) => {
                return prove(with(rest(), [(**l).clone()]), goal.clone(), memo)
                    && prove(with(rest(), [(**r).clone()]), goal.clone(), memo)
            }
            Formula::Imp(a, b) => {
                let b = (**b).clone();
                match &**a {
                    Formula::Atom(_) if ctx.contains(a) => {
                        return prove(with(rest(), [b]), goal.clone(), memo)
                    }
                    Formula::Top => return prove(with(rest(), [b]), goal.clone(), memo),
                    Formula::Bot => return prove(rest(), goal.clone(), memo),
                    Formula::And(c, d) => {
                        let f2 = Formula::imp((**c).clone(), Formula::imp((**d).clone(), b));
                        return prove(with(rest(), [f2]), goal.clone(), memo);
                    }
                    Formula::Or(c, d) => {
                        let f1 = Formula::imp((**c).clone(), b.clone());
                        let f2 = Formula::imp((**d).clone(), b);
                        return prove(with(rest(), [f1, f2]), goal.clone(), memo);
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    }
    // invertible right rules
    match goal {
        Formula::And(l, r) => {
            return prove(ctx.clone(), (**l).clone(), memo) && prove(ctx.clone(), (**r).clone(), memo)
        }
        Formula::Imp(l, r) => return prove(with(ctx.clone(), [(**l).clone()]), (**r).clone(), memo),
        _ => {}
    }
    if let Formula::Or(l, r) = goal {
        if prove(ctx.clone(), (**l).clone(), memo) || prove(ctx.clone(), (**r).clone(), memo) {
            return true;
        }
    }
    for f in ctx {
        if let Formula::Imp(a, b) = f {
            if let Formula::Imp(_, d) = &**a {
                let rest = without(ctx, f);
                let left = with(rest.clone(), [Formula::imp((**d).clone(), (**b).clone())]);
                if prove(left, (**a).clone(), memo)
                    && prove(with(rest, [(**b).clone()]), goal.clone(), memo)
                {
                    return true;
                }
            }
        }
    }
    false
}
