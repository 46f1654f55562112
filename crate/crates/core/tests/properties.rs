mod common;

use std::collections::BTreeMap;

use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uniprod::ansatz::{enumerate_monomials, Pattern};
use uniprod::constraints::ConstraintSet;
use uniprod::derivations::{check_unit_consistency, explore, reproduce_paper, BranchChoice, DeriveOptions, Status};
use uniprod::expr::{
    canonicalize_word, rat, ratio, CoeffPoly, Letter, MomentSymbol, PolyExpr, Rational, SymmetryFlags, Unknown, Word,
};
use uniprod::free::{enumerate_nc, nc_moebius};
use uniprod::matrix_lab::{evaluate_rule, gue_fluctuation_moment, semicircle_moment};
use uniprod::report::{McRow, ReportDocument};
use uniprod::rules::RuleSet;
use uniprod::solver::{branch_contains, solve, verify_branch};

fn word_strategy(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..3usize, 1..=max).prop_map(|labels| {
        let s: String = labels.iter().map(|&i| ['a', 'b', 'c'][i]).collect();
        common::spelled(&s)
    })
}

proptest! {
    #[test]
    fn canonical_words_are_rotation_invariant(w in word_strategy(7), k in 0usize..7) {
        let c = canonicalize_word(&w, true);
        prop_assert_eq!(canonicalize_word(&c, true), c.clone());
        prop_assert_eq!(canonicalize_word(&w.rotated(k % w.len()), true), c);
    }

    #[test]
    fn enumerated_monomials_are_multilinear(w1 in word_strategy(3), w2 in word_strategy(3)) {
        let n1 = w1.len() as u32;
        let shifted: Word = w2.letters().iter().map(|l| Letter::new(l.algebra.label(), l.index + n1)).collect();
        let symbol = MomentSymbol::Phi2(w1, shifted);
        if let Ok(p) = Pattern::new(symbol, SymmetryFlags::default()) {
            let mut letters = p.letters();
            letters.sort();
            for m in enumerate_monomials(&p).unwrap() {
                let mut seen = m.letters();
                seen.sort();
                prop_assert_eq!(seen, letters.clone());
            }
        }
    }

    #[test]
    fn moebius_matches_lattice_recursion(n in 1usize..=5, i in 0usize..42, j in 0usize..42) {
        let all = enumerate_nc(n).unwrap();
        let (pi, sigma) = (&all[i % all.len()], &all[j % all.len()]);
        if pi.partition().refines(sigma.partition()) {
            prop_assert_eq!(nc_moebius(pi, sigma).unwrap(), common::lattice_moebius(pi, sigma, &all));
        } else {
            prop_assert!(nc_moebius(pi, sigma).is_err());
        }
    }

    #[test]
    fn constraint_normalization_ignores_scale(a in -5i64..=5, b in -5i64..=5, k in 1i64..=7, neg in any::<bool>()) {
        let p = &(&CoeffPoly::var(Unknown(1)) * &CoeffPoly::int(a)) + &CoeffPoly::int(b);
        let scale = if neg { -k } else { k };
        let mut x = ConstraintSet::new();
        x.insert(&p);
        let mut y = ConstraintSet::new();
        y.insert(&(&p * &CoeffPoly::int(scale)));
        prop_assert_eq!(x, y);
    }

    #[test]
    fn planted_solutions_survive(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(2..=5u32);
        let point: BTreeMap<Unknown, Rational> = (1..=k)
            .map(|i| (Unknown(i), if rng.random_bool(0.5) { rat(0) } else { ratio(rng.random_range(-4..=4), rng.random_range(1..=3)) }))
            .collect();
        let mut cs = ConstraintSet::new();
        for _ in 0..rng.random_range(0..k) {
            let mut c = CoeffPoly::zero();
            for (u, v) in &point {
                let w = CoeffPoly::int(rng.random_range(-2..=2));
                c = &c + &(&w * &(&CoeffPoly::var(*u) - &CoeffPoly::constant(v.clone())));
            }
            cs.insert(&c);
        }
        for (u, v) in &point {
            if v.is_zero() {
                let other = Unknown(rng.random_range(1..=k));
                cs.insert(&(&CoeffPoly::var(*u) * &CoeffPoly::var(other)));
            }
        }
        let branches = solve(&cs).unwrap();
        prop_assert!(branches.iter().all(|b| verify_branch(b, &cs)));
        prop_assert!(branches.iter().any(|b| branch_contains(b, &point)));
    }

    #[test]
    fn matrix_rows_round_trip(estimate in -1e6f64..1e6, stderr in 0f64..10.0, seed in any::<u64>(), n in 2usize..500) {
        let row = McRow {
            instance: "a2b2-a2b2".into(),
            n,
            samples: 2000,
            seed,
            estimate,
            stderr,
            a_priori_stderr: stderr,
            candidate_1_prediction: "5".into(),
            candidate_2_prediction: "8".into(),
            z: vec![estimate, -estimate],
            verdict: "consistent-with 2,2:branch-1".into(),
        };
        let doc = ReportDocument::new(
            uniprod::report::Invocation { command: "verify-mc".into(), args: vec![], seeds: vec![seed] },
            uniprod::report::Rendering::Structured,
            uniprod::report::Payload::MatrixLab(vec![row]),
        );
        prop_assert_eq!(ReportDocument::from_json(&doc.to_json()).unwrap(), doc);
    }

    #[test]
    fn candidate_one_is_the_transcribed_formula(values in prop::collection::vec((-9i64..=9, 1i64..=4), 8)) {
        let flags = SymmetryFlags::default();
        let derived = reproduce_paper().unwrap()[2].rules[0].rule.rhs.clone();
        let transcribed = uniprod::expr::parse_expr(
            "phi2(a1, a2)*phi1(b1)*phi1(b2) + phi1(a1)*phi1(a2)*phi2(b1, b2) + phi1(a1 a2)*phi1(b1 b2) \
             - phi1(a1 a2)*phi1(b1)*phi1(b2) - phi1(a1)*phi1(a2)*phi1(b1 b2) + phi1(a1)*phi1(a2)*phi1(b1)*phi1(b2)",
            flags,
        ).unwrap();
        let mut symbols: Vec<MomentSymbol> = derived.monomials().chain(transcribed.monomials()).flat_map(|m| m.symbols().to_vec()).collect();
        symbols.sort();
        symbols.dedup();
        let limits: BTreeMap<MomentSymbol, Rational> = symbols.into_iter().zip(&values).map(|(s, (p, q))| (s, ratio(*p, *q))).collect();
        prop_assert_eq!(evaluate_rule(&derived, &limits).unwrap(), evaluate_rule(&transcribed, &limits).unwrap());
        let zeros: BTreeMap<MomentSymbol, Rational> = limits.keys().map(|s| (s.clone(), rat(0))).collect();
        prop_assert!(evaluate_rule(&derived, &zeros).unwrap().is_zero());
    }
}

#[test]
fn semicircle_limits_count_pairings() {
    for k in 1..=10u32 {
        assert_eq!(semicircle_moment(k), rat(common::nc_pairings(k as usize) as i64), "k = {k}");
    }
    for p in 1..=5u32 {
        for q in 1..=5u32 {
            assert_eq!(
                gue_fluctuation_moment(p, q),
                rat(common::annular_pairings(p as usize, q as usize) as i64),
                "({p}, {q})"
            );
        }
    }
}

#[test]
fn derived_rules_are_unit_consistent() {
    let reports = reproduce_paper().unwrap();
    let mut ctx = RuleSet::free();
    for r in &reports {
        assert!(check_unit_consistency(r, &ctx).unwrap(), "{}", r.pattern);
        if let [only] = r.rules.as_slice() {
            ctx.insert(only.rule.clone());
        }
    }
}

#[test]
fn reproduction_is_idempotent() {
    let render = || {
        let docs = reproduce_paper().unwrap().iter().map(uniprod::report::DerivationDoc::from).collect::<Vec<_>>();
        serde_json::to_string(&docs).unwrap()
    };
    assert_eq!(render(), render());
}

#[test]
fn candidates_are_self_consistent() {
    let p = Pattern::parse("phi2(a1 b1, a2 b2)", SymmetryFlags::default()).unwrap();
    let reports = explore(&p, BranchChoice::All, &DeriveOptions::default()).unwrap();
    let cands = uniprod::derivations::candidates().unwrap();
    for (r, c) in reports.iter().zip(&cands) {
        assert_eq!(r.status, Status::Forced, "{}", r.context);
        assert_eq!(r.rules[0].rule.rhs, c.rhs);
    }
}

#[test]
fn zero_rule_evaluates_to_zero() {
    assert!(evaluate_rule(&PolyExpr::zero(), &BTreeMap::new()).unwrap().is_zero());
}
