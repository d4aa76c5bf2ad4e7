mod support;

use proptest::prelude::*;
use sgplan_core::ltl::CosafetyViolation;
use sgplan_core::{check_cosafe, eval_trace, parse_prefix, to_nnf, LtlFormula};
use support::{any_formula, alphabet, random_cosafe, rng, words};

/// Independent co-safety check: push negations down by hand and look for
/// `G` or `R` in the result.
fn cosafe_reference(f: &LtlFormula, negated: bool) -> bool {
    use LtlFormula as L;
    match f {
        L::True | L::False | L::Atom(_) => true,
        L::Not(a) => cosafe_reference(a, !negated),
        L::And(a, b) | L::Or(a, b) => cosafe_reference(a, negated) && cosafe_reference(b, negated),
        L::Imply(a, b) => cosafe_reference(a, !negated) && cosafe_reference(b, negated),
        L::Next(a) => cosafe_reference(a, negated),
        L::Until(a, b) => !negated && cosafe_reference(a, false) && cosafe_reference(b, false),
        L::Release(a, b) => negated && cosafe_reference(a, true) && cosafe_reference(b, true),
        L::Eventually(a) => !negated && cosafe_reference(a, false),
        L::Always(a) => negated && cosafe_reference(a, true),
    }
}

fn is_nnf(f: &LtlFormula) -> bool {
    match f {
        LtlFormula::Not(a) => matches!(**a, LtlFormula::Atom(_)),
        LtlFormula::Imply(..) => false,
        _ => f.children().into_iter().all(is_nnf),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn prefix_text_round_trips(f in any_formula(5)) {
        let text = f.to_prefix();
        prop_assert_eq!(parse_prefix(&text, &alphabet()).unwrap(), f);
    }

    #[test]
    fn nnf_is_normal_and_idempotent(f in any_formula(5)) {
        let n = to_nnf(&f);
        prop_assert!(is_nnf(&n));
        prop_assert_eq!(to_nnf(&n), n);
    }

    #[test]
    fn cosafety_matches_reference(f in any_formula(5)) {
        let v = check_cosafe(&f);
        prop_assert_eq!(v.is_cosafe, cosafe_reference(&f, false));
        if !v.is_cosafe {
            let path = v.offending_subformula.clone().unwrap();
            let sub = to_nnf(&f).subformula(&path).cloned().unwrap();
            match v.reason.unwrap() {
                CosafetyViolation::AlwaysOperator => prop_assert!(matches!(sub, LtlFormula::Always(_))),
                CosafetyViolation::NegationOnCompound => prop_assert!(matches!(sub, LtlFormula::Release(..) | LtlFormula::Not(_))),
            }
        }
    }
}

#[test]
fn nnf_preserves_finite_trace_semantics() {
    let mut r = rng(17);
    let all: Vec<_> = (0..=4).flat_map(words).collect();
    for _ in 0..150 {
        let f = random_cosafe(&mut r, 4);
        let n = to_nnf(&f);
        for w in &all {
            assert_eq!(eval_trace(&f, w), eval_trace(&n, w), "{}", f.to_prefix());
        }
    }
}

#[test]
fn satisfaction_is_prefix_closed_upwards() {
    // Extending a satisfying word keeps it satisfying.
    let mut r = rng(23);
    let short: Vec<_> = (0..=3).flat_map(words).collect();
    let letters = support::letters();
    for _ in 0..100 {
        let f = random_cosafe(&mut r, 4);
        for w in &short {
            if eval_trace(&f, w).unwrap() {
                for l in &letters {
                    let mut w2 = w.clone();
                    w2.push(l.clone());
                    assert!(eval_trace(&f, &w2).unwrap(), "{}", f.to_prefix());
                }
            }
        }
    }
}

#[test]
fn non_cosafe_formulas_are_rejected_by_eval() {
    let f = parse_prefix("G a", &alphabet()).unwrap();
    assert!(eval_trace(&f, &[]).is_err());
}
