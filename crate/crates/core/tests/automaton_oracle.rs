mod support;

use sgplan_core::automaton::{compile_with_cap, CompileError};
use sgplan_core::{accepts, compile, eval_trace, parse_prefix, Dfa, Label, LtlFormula, StateId, TraceEvaluator};
use support::{letters, random_cosafe, rng, words};

/// Walks every word up to `max_len` depth-first, tracking the automaton
/// state and prefix satisfaction together. Returns mismatching words.
pub fn word_tree_mismatches(f: &LtlFormula, dfa: &Dfa, max_len: usize) -> Vec<Vec<Label>> {
    #[allow(clippy::too_many_arguments)]
    fn walk(
        ev: &TraceEvaluator,
        dfa: &Dfa,
        letters: &[Label],
        word: &mut Vec<Label>,
        q: StateId,
        sat: bool,
        max_len: usize,
        bad: &mut Vec<Vec<Label>>,
    ) {
        let sat = sat || ev.holds(word);
        // The run so far has read the whole word; acceptance is membership in F.
        if dfa.is_accepting(q) != sat {
            bad.push(word.clone());
        }
        if word.len() == max_len {
            return;
        }
        for l in letters {
            word.push(l.clone());
            walk(ev, dfa, letters, word, dfa.step(q, l), sat, max_len, bad);
            word.pop();
        }
    }
    let ev = TraceEvaluator::new(f).unwrap();
    let mut bad = Vec::new();
    walk(&ev, dfa, &letters(), &mut Vec::new(), dfa.initial(), false, max_len, &mut bad);
    bad
}

#[test]
fn dfa_agrees_with_trace_semantics() {
    let mut r = rng(101);
    for _ in 0..200 {
        let f = random_cosafe(&mut r, 4);
        let dfa = compile(&f).unwrap();
        let bad = word_tree_mismatches(&f, &dfa, 5);
        assert!(bad.is_empty(), "{} on {:?}", f.to_prefix(), bad[0]);
    }
}

#[test]
fn word_tree_walk_matches_direct_calls() {
    let mut r = rng(5);
    let all: Vec<_> = (0..=3).flat_map(words).collect();
    for _ in 0..50 {
        let f = random_cosafe(&mut r, 4);
        let dfa = compile(&f).unwrap();
        for w in &all {
            assert_eq!(accepts(&dfa, w), eval_trace(&f, w).unwrap());
        }
    }
}

#[test]
fn accepting_and_sink_states_absorb() {
    let mut r = rng(7);
    for _ in 0..300 {
        let f = random_cosafe(&mut r, 4);
        let dfa = compile(&f).unwrap();
        for l in letters() {
            for q in dfa.accepting_states().collect::<Vec<_>>() {
                assert!(dfa.is_accepting(dfa.step(q, &l)));
            }
            if let Some(s) = dfa.sink() {
                assert_eq!(dfa.step(s, &l), s);
                assert!(!dfa.is_live(s));
            }
        }
    }
}

#[test]
fn live_states_reach_acceptance_with_a_shortest_path() {
    let mut r = rng(9);
    for _ in 0..300 {
        let f = random_cosafe(&mut r, 4);
        let dfa = compile(&f).unwrap();
        for q in 0..dfa.num_states() {
            match dfa.shortest_accepting_path(q) {
                Ok(steps) => {
                    assert!(dfa.is_live(q));
                    let end = dfa.run_from(q, steps.iter().map(|s| &s.label));
                    assert!(dfa.is_accepting(end));
                }
                Err(_) => assert!(!dfa.is_live(q)),
            }
        }
    }
}

#[test]
fn non_cosafe_and_oversized_inputs_fail() {
    let ab = support::alphabet();
    assert_eq!(compile(&parse_prefix("G a", &ab).unwrap()).unwrap_err(), CompileError::NotCosafe);
    let f = parse_prefix("& F a & F b F c", &ab).unwrap();
    assert!(matches!(compile_with_cap(&f, 2), Err(CompileError::StateBlowup { .. })));
    let many = (0..20).fold(LtlFormula::True, |acc, i| {
        LtlFormula::and(acc, LtlFormula::eventually(LtlFormula::atom(format!("x{i}"))))
    });
    assert!(matches!(compile(&many), Err(CompileError::TooManyAtoms { .. })));
}
