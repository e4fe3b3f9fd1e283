mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use basext::bases::{derive_tree, derives, parse_base_file, promote_context, AtomicRule, Base, Clause};
use basext::syntax::{parse_formula, parse_sequent, subformulas, Atom, Formula};
use common::*;

const NAMES: [&str; 3] = ["a", "b", "c"];

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::Top),
        Just(Formula::Bot),
        prop::sample::select(NAMES.to_vec()).prop_map(Formula::atom),
    ];
    leaf.prop_recursive(5, 40, 2, |inner| {
        (inner.clone(), inner, 0..3u8).prop_map(|(l, r, k)| match k {
            0 => Formula::and(l, r),
            1 => Formula::or(l, r),
            _ => Formula::imp(l, r),
        })
    })
}

fn arb_atom() -> impl Strategy<Value = Atom> {
    prop::sample::select(NAMES.to_vec()).prop_map(atom)
}

fn arb_ctx() -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::btree_set(arb_atom(), 0..=3).prop_map(|s| s.into_iter().collect())
}

fn arb_rule() -> impl Strategy<Value = AtomicRule> {
    let clause = (prop::collection::btree_set(arb_atom(), 0..=2), arb_atom())
        .prop_map(|(p, c)| Clause::new(p, c));
    (prop::collection::vec(clause, 0..=3), arb_atom()).prop_map(|(cs, b)| AtomicRule::new(cs, b))
}

fn arb_base() -> impl Strategy<Value = Base> {
    prop::collection::vec(arb_rule(), 0..=5).prop_map(|rs| Base::new(universe(&NAMES), rs).unwrap())
}

fn is_subterm_closed(set: &[Formula]) -> bool {
    let members: BTreeSet<&Formula> = set.iter().collect();
    set.iter().all(|f| f.children().iter().all(|c| members.contains(c)))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn print_parse_round_trip(f in arb_formula()) {
        let printed = f.to_string();
        prop_assert_eq!(parse_formula(&printed).unwrap(), f);
    }

    #[test]
    fn subformulas_are_closed_and_distinct(fs in prop::collection::vec(arb_formula(), 1..4)) {
        let text = format!(
            "{} |- {}",
            fs[1..].iter().map(|f| format!("({f})")).collect::<Vec<_>>().join(", "),
            fs[0]
        );
        let s = parse_sequent(&text).unwrap();
        let xi = subformulas(&s);
        prop_assert!(is_subterm_closed(&xi));
        let distinct: BTreeSet<&Formula> = xi.iter().collect();
        prop_assert_eq!(distinct.len(), xi.len());
        for f in s.formulas() {
            prop_assert!(xi.contains(f));
        }
    }

    #[test]
    fn derives_matches_fixpoint_oracle(b in arb_base(), ctx in arb_ctx(), g in arb_atom()) {
        prop_assert_eq!(derives(&b, &ctx, &g).unwrap(), oracle_derives(&b, &ctx, &g));
    }

    #[test]
    fn trees_are_valid_and_exist_iff_derivable(b in arb_base(), ctx in arb_ctx(), g in arb_atom()) {
        let t = derive_tree(&b, &ctx, &g).unwrap();
        prop_assert_eq!(t.is_some(), oracle_derives(&b, &ctx, &g));
        if let Some(t) = t {
            prop_assert!(t.check(&b).is_ok(), "{}", t);
            prop_assert_eq!(t.conclusion(), &g);
            let want: BTreeSet<Atom> = ctx.iter().cloned().collect();
            prop_assert_eq!(t.context(), &want);
        }
    }

    #[test]
    fn reflexivity(b in arb_base(), a in arb_atom()) {
        prop_assert!(derives(&b, &[a.clone()], &a).unwrap());
    }

    #[test]
    fn weakening(b in arb_base(), p in arb_ctx(), q in arb_ctx(), a in arb_atom()) {
        if derives(&b, &p, &a).unwrap() {
            let pq: Vec<Atom> = p.iter().chain(&q).cloned().collect::<BTreeSet<_>>().into_iter().collect();
            prop_assert!(derives(&b, &pq, &a).unwrap());
        }
    }

    #[test]
    fn cut(b in arb_base(), p in arb_ctx(), q in arb_ctx(), a in arb_atom(), c in arb_atom()) {
        let mut aq: BTreeSet<Atom> = q.iter().cloned().collect();
        aq.insert(a.clone());
        let aq: Vec<Atom> = aq.into_iter().collect();
        if derives(&b, &p, &a).unwrap() && derives(&b, &aq, &c).unwrap() {
            let pq: Vec<Atom> = p.iter().chain(&q).cloned().collect::<BTreeSet<_>>().into_iter().collect();
            prop_assert!(derives(&b, &pq, &c).unwrap());
        }
    }

    #[test]
    fn base_monotonicity(b in arb_base(), extra in prop::collection::vec(arb_rule(), 0..3), p in arb_ctx(), a in arb_atom()) {
        let bigger = Base::new(b.universe().clone(), b.rules().iter().cloned().chain(extra)).unwrap();
        if derives(&b, &p, &a).unwrap() {
            prop_assert!(derives(&bigger, &p, &a).unwrap());
        }
    }

    #[test]
    fn deduction_theorem(b in arb_base(), p in arb_ctx(), q in arb_ctx(), a in arb_atom()) {
        let pq: Vec<Atom> = p.iter().chain(&q).cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let promoted = promote_context(&b, &p).unwrap();
        prop_assert_eq!(derives(&b, &pq, &a).unwrap(), derives(&promoted, &q, &a).unwrap());
    }

    #[test]
    fn base_file_round_trip(b in arb_base()) {
        let again = parse_base_file(&b.to_file_string()).unwrap();
        prop_assert_eq!(again.rules(), b.rules());
    }
}

#[test]
fn rule_enumeration_is_duplicate_free() {
    let rules = all_rules(&["a", "b"], 2);
    let set: BTreeSet<&AtomicRule> = rules.iter().collect();
    assert_eq!(set.len(), rules.len());
    // 8 clauses, at most 2 of them, times 2 conclusions
    assert_eq!(rules.len(), (1 + 8 + 28) * 2);
}
