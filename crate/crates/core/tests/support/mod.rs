//! Shared generators for the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgplan_core::{Alphabet, Label, LtlFormula};

pub const ATOMS: [&str; 3] = ["a", "b", "c"];

pub fn alphabet() -> Alphabet {
    Alphabet::from_ids(ATOMS).unwrap()
}

/// Any formula over `ATOMS`, all operators included.
pub fn any_formula(depth: u32) -> impl Strategy<Value = LtlFormula> {
    let leaf = prop_oneof![
        Just(LtlFormula::True),
        Just(LtlFormula::False),
        (0..ATOMS.len()).prop_map(|i| LtlFormula::atom(ATOMS[i])),
    ];
    leaf.prop_recursive(depth, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(LtlFormula::not),
            inner.clone().prop_map(LtlFormula::next),
            inner.clone().prop_map(LtlFormula::eventually),
            inner.clone().prop_map(LtlFormula::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::imply(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LtlFormula::until(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| LtlFormula::release(a, b)),
        ]
    })
}

/// Random co-safe formula of depth at most `depth`, built directly from
/// co-safe constructors (negation only over atoms, `=>` with a literal or
/// constant antecedent).
pub fn random_cosafe(rng: &mut ChaCha8Rng, depth: usize) -> LtlFormula {
    let leaf = |rng: &mut ChaCha8Rng| match rng.gen_range(0..8) {
        0 => LtlFormula::True,
        1 => LtlFormula::False,
        2 | 3 => LtlFormula::not(LtlFormula::atom(ATOMS[rng.gen_range(0..3)])),
        _ => LtlFormula::atom(ATOMS[rng.gen_range(0..3)]),
    };
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng);
    }
    let d = depth - 1;
    match rng.gen_range(0..7) {
        0 => LtlFormula::and(random_cosafe(rng, d), random_cosafe(rng, d)),
        1 => LtlFormula::or(random_cosafe(rng, d), random_cosafe(rng, d)),
        2 => LtlFormula::next(random_cosafe(rng, d)),
        3 => LtlFormula::until(random_cosafe(rng, d), random_cosafe(rng, d)),
        4 | 5 => LtlFormula::eventually(random_cosafe(rng, d)),
        _ => LtlFormula::imply(
            LtlFormula::not(LtlFormula::atom(ATOMS[rng.gen_range(0..3)])),
            random_cosafe(rng, d),
        ),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All 2^|ATOMS| letters.
pub fn letters() -> Vec<Label> {
    (0..1u32 << ATOMS.len())
        .map(|m| {
            ATOMS
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, a)| *a)
                .collect()
        })
        .collect()
}

/// Every word of length exactly `len`, in lexicographic letter order.
pub fn words(len: usize) -> Vec<Vec<Label>> {
    let letters = letters();
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                letters.iter().map(move |l| {
                    let mut w2 = w.clone();
                    w2.push(l.clone());
                    w2
                })
            })
            .collect();
    }
    out
}
