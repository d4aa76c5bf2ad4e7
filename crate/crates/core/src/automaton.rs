//! Deterministic finite automata for co-safe formulas, built by formula
//! progression.
//!
//! Every automaton state is a normalized progressed formula. Normalization
//! flattens and sorts `And`/`Or`, folds constants and removes duplicate
//! operands, which is enough to keep the reachable state set finite. The only
//! accepting state is `true`; the state `false` (when reachable) is the sink.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::label::Label;
use crate::ltl::{check_cosafe, to_nnf, LtlFormula};

pub type StateId = usize;

/// Default ceiling on the number of automaton states.
pub const DEFAULT_STATE_CAP: usize = 10_000;

/// Progression reads at most this many atoms in a single state.
pub const MAX_READ_ATOMS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("formula is not co-safe")]
    NotCosafe,
    #[error("automaton exceeds {cap} states")]
    StateBlowup { cap: usize },
    #[error("a state depends on {count} atoms at once (limit {MAX_READ_ATOMS})")]
    TooManyAtoms { count: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("no accepting state is reachable from state {0}")]
    Unreachable(StateId),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Node {
    False,
    True,
    Lit(u32, bool),
    Next(Box<Node>),
    Until(Box<Node>, Box<Node>),
    Ev(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
}

/// Disjunction of cubes; each cube is a sorted conjunction of non-boolean
/// terms. `[]` is false and `[[]]` is true.
type Dnf = Vec<Vec<Node>>;

fn to_dnf(n: Node) -> Dnf {
    match n {
        Node::True => vec![Vec::new()],
        Node::False => Vec::new(),
        Node::Or(ps) => ps.into_iter().flat_map(to_dnf).collect(),
        Node::And(ps) => ps
            .into_iter()
            .map(to_dnf)
            .fold(vec![Vec::new()], |acc, d| {
                let mut out = Vec::with_capacity(acc.len() * d.len());
                for a in &acc {
                    for b in &d {
                        let mut c = a.clone();
                        c.extend(b.iter().cloned());
                        out.push(c);
                    }
                }
                out
            }),
        term => vec![vec![term]],
    }
}

/// Canonical node for a DNF: contradictory cubes dropped, subsumed cubes
/// absorbed, everything sorted.
fn from_dnf(cubes: Dnf) -> Node {
    let mut cubes: Vec<Vec<Node>> = cubes
        .into_iter()
        .filter_map(|mut c| {
            c.sort();
            c.dedup();
            // Sorted order puts Lit(p, false) right before Lit(p, true).
            let clash = c.windows(2).any(
                |w| matches!((&w[0], &w[1]), (Node::Lit(a, false), Node::Lit(b, true)) if a == b),
            );
            (!clash).then_some(c)
        })
        .collect();
    cubes.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    cubes.dedup();
    let mut kept: Vec<Vec<Node>> = Vec::with_capacity(cubes.len());
    for c in cubes {
        if !kept.iter().any(|k| is_subset(k, &c)) {
            kept.push(c);
        }
    }
    kept.sort();
    let mut ors: Vec<Node> = kept
        .into_iter()
        .map(|mut c| match c.len() {
            0 => Node::True,
            1 => c.pop().unwrap(),
            _ => Node::And(c),
        })
        .collect();
    match ors.len() {
        0 => Node::False,
        1 => ors.pop().unwrap(),
        _ => Node::Or(ors),
    }
}

/// `a ⊆ b` for sorted, deduplicated slices.
fn is_subset(a: &[Node], b: &[Node]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.by_ref().any(|y| y == x))
}

fn mk_and(parts: Vec<Node>) -> Node {
    if parts.contains(&Node::False) {
        return Node::False;
    }
    from_dnf(to_dnf(Node::And(parts)))
}

fn mk_or(parts: Vec<Node>) -> Node {
    if parts.contains(&Node::True) {
        return Node::True;
    }
    from_dnf(to_dnf(Node::Or(parts)))
}

fn mk_next(a: Node) -> Node {
    match a {
        Node::True | Node::False => a,
        other => Node::Next(Box::new(other)),
    }
}

fn mk_ev(a: Node) -> Node {
    match a {
        Node::True | Node::False | Node::Ev(_) => a,
        other => Node::Ev(Box::new(other)),
    }
}

fn mk_until(a: Node, b: Node) -> Node {
    match (a, b) {
        (_, Node::True) => Node::True,
        (_, Node::False) => Node::False,
        (Node::False, b) => b,
        (Node::True, b) => mk_ev(b),
        (a, b) => Node::Until(Box::new(a), Box::new(b)),
    }
}

fn from_formula(f: &LtlFormula, atoms: &[String]) -> Node {
    let idx = |p: &String| atoms.binary_search(p).expect("atom collected from formula") as u32;
    match f {
        LtlFormula::True => Node::True,
        LtlFormula::False => Node::False,
        LtlFormula::Atom(p) => Node::Lit(idx(p), true),
        LtlFormula::Not(a) => match &**a {
            LtlFormula::Atom(p) => Node::Lit(idx(p), false),
            _ => unreachable!("input is in NNF"),
        },
        LtlFormula::And(a, b) => mk_and(vec![from_formula(a, atoms), from_formula(b, atoms)]),
        LtlFormula::Or(a, b) => mk_or(vec![from_formula(a, atoms), from_formula(b, atoms)]),
        LtlFormula::Next(a) => mk_next(from_formula(a, atoms)),
        LtlFormula::Until(a, b) => mk_until(from_formula(a, atoms), from_formula(b, atoms)),
        LtlFormula::Eventually(a) => mk_ev(from_formula(a, atoms)),
        LtlFormula::Imply(..) | LtlFormula::Release(..) | LtlFormula::Always(_) => {
            unreachable!("rejected by the co-safety check")
        }
    }
}

fn to_formula(n: &Node, atoms: &[String]) -> LtlFormula {
    let fold = |parts: &[Node], join: fn(LtlFormula, LtlFormula) -> LtlFormula| {
        let mut it = parts.iter().map(|p| to_formula(p, atoms));
        let first = it.next().expect("normalized n-ary node has operands");
        it.fold(first, join)
    };
    match n {
        Node::True => LtlFormula::True,
        Node::False => LtlFormula::False,
        Node::Lit(i, true) => LtlFormula::atom(atoms[*i as usize].clone()),
        Node::Lit(i, false) => LtlFormula::not(LtlFormula::atom(atoms[*i as usize].clone())),
        Node::Next(a) => LtlFormula::next(to_formula(a, atoms)),
        Node::Until(a, b) => LtlFormula::until(to_formula(a, atoms), to_formula(b, atoms)),
        Node::Ev(a) => LtlFormula::eventually(to_formula(a, atoms)),
        Node::And(ps) => fold(ps, LtlFormula::and),
        Node::Or(ps) => fold(ps, LtlFormula::or),
    }
}

/// Atoms whose value in the current letter affects progression.
fn read_atoms(n: &Node, out: &mut Vec<u32>) {
    match n {
        Node::True | Node::False | Node::Next(_) => {}
        Node::Lit(i, _) => out.push(*i),
        Node::Until(a, b) => {
            read_atoms(a, out);
            read_atoms(b, out);
        }
        Node::Ev(a) => read_atoms(a, out),
        Node::And(ps) | Node::Or(ps) => ps.iter().for_each(|p| read_atoms(p, out)),
    }
}

fn progress(n: &Node, holds: &dyn Fn(u32) -> bool) -> Node {
    match n {
        Node::True | Node::False => n.clone(),
        Node::Lit(i, pos) => {
            if holds(*i) == *pos {
                Node::True
            } else {
                Node::False
            }
        }
        Node::Next(a) => (**a).clone(),
        Node::Until(a, b) => mk_or(vec![
            progress(b, holds),
            mk_and(vec![progress(a, holds), n.clone()]),
        ]),
        Node::Ev(a) => mk_or(vec![progress(a, holds), n.clone()]),
        Node::And(ps) => mk_and(ps.iter().map(|p| progress(p, holds)).collect()),
        Node::Or(ps) => mk_or(ps.iter().map(|p| progress(p, holds)).collect()),
    }
}

#[derive(Debug, Clone)]
struct DfaState {
    formula: Node,
    /// Indices into `Dfa::atoms`; bit `i` of a transition mask is `read[i]`.
    read: Vec<u32>,
    next: Vec<StateId>,
}

/// Deterministic automaton `(Q, 2^AP, T, F, q1)` over the formula's atoms.
///
/// Transitions are total: atoms a state does not read are ignored, so any
/// label over any alphabet can be fed to [`Dfa::step`].
#[derive(Debug, Clone)]
pub struct Dfa {
    atoms: Vec<String>,
    states: Vec<DfaState>,
    initial: StateId,
    accepting: Option<StateId>,
    sink: Option<StateId>,
    live: Vec<bool>,
}

/// One transition along an automaton path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStep {
    pub from: StateId,
    pub label: Label,
    pub to: StateId,
}

pub fn compile(f: &LtlFormula) -> Result<Dfa, CompileError> {
    compile_with_cap(f, DEFAULT_STATE_CAP)
}

pub fn compile_with_cap(f: &LtlFormula, cap: usize) -> Result<Dfa, CompileError> {
    if !check_cosafe(f).is_cosafe {
        return Err(CompileError::NotCosafe);
    }
    let nnf = to_nnf(f);
    let atoms: Vec<String> = nnf.props().into_iter().collect();
    let root = from_formula(&nnf, &atoms);

    let mut index: BTreeMap<Node, StateId> = BTreeMap::new();
    let mut states: Vec<DfaState> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |node: Node,
                      states: &mut Vec<DfaState>,
                      queue: &mut VecDeque<StateId>|
     -> Result<StateId, CompileError> {
        if let Some(&id) = index.get(&node) {
            return Ok(id);
        }
        if states.len() >= cap {
            return Err(CompileError::StateBlowup { cap });
        }
        let mut read = Vec::new();
        read_atoms(&node, &mut read);
        read.sort_unstable();
        read.dedup();
        if read.len() > MAX_READ_ATOMS {
            return Err(CompileError::TooManyAtoms { count: read.len() });
        }
        let id = states.len();
        index.insert(node.clone(), id);
        states.push(DfaState {
            formula: node,
            read,
            next: Vec::new(),
        });
        queue.push_back(id);
        Ok(id)
    };

    let initial = intern(root, &mut states, &mut queue)?;
    while let Some(q) = queue.pop_front() {
        let formula = states[q].formula.clone();
        let read = states[q].read.clone();
        let mut next = Vec::with_capacity(1 << read.len());
        for mask in 0u32..(1u32 << read.len()) {
            let holds = |atom: u32| {
                read.iter()
                    .position(|&r| r == atom)
                    .is_some_and(|bit| mask & (1 << bit) != 0)
            };
            let succ = progress(&formula, &holds);
            next.push(intern(succ, &mut states, &mut queue)?);
        }
        states[q].next = next;
    }

    let accepting = states.iter().position(|s| s.formula == Node::True);
    let sink = states.iter().position(|s| s.formula == Node::False);

    // Backward reachability of the accepting state.
    let mut live = vec![false; states.len()];
    if let Some(acc) = accepting {
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); states.len()];
        for (q, s) in states.iter().enumerate() {
            for &t in &s.next {
                preds[t].push(q);
            }
        }
        let mut stack = vec![acc];
        live[acc] = true;
        while let Some(q) = stack.pop() {
            for &p in &preds[q] {
                if !live[p] {
                    live[p] = true;
                    stack.push(p);
                }
            }
        }
    }

    Ok(Dfa {
        atoms,
        states,
        initial,
        accepting,
        sink,
        live,
    })
}

impl Dfa {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn is_accepting(&self, q: StateId) -> bool {
        Some(q) == self.accepting
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.accepting.into_iter()
    }

    pub fn sink(&self) -> Option<StateId> {
        self.sink
    }

    /// Whether an accepting state is reachable from `q`.
    pub fn is_live(&self, q: StateId) -> bool {
        self.live[q]
    }

    /// The progressed formula a state stands for.
    pub fn state_formula(&self, q: StateId) -> LtlFormula {
        to_formula(&self.states[q].formula, &self.atoms)
    }

    /// Atoms state `q` reads when stepping.
    pub fn relevant_atoms(&self, q: StateId) -> impl Iterator<Item = &str> + '_ {
        self.states[q]
            .read
            .iter()
            .map(move |&i| self.atoms[i as usize].as_str())
    }

    /// `T(q, l)` with the label given as a membership predicate.
    pub fn step_with(&self, q: StateId, holds: impl Fn(&str) -> bool) -> StateId {
        let s = &self.states[q];
        let mut mask = 0usize;
        for (bit, &a) in s.read.iter().enumerate() {
            if holds(&self.atoms[a as usize]) {
                mask |= 1 << bit;
            }
        }
        s.next[mask]
    }

    /// `T(q, l)`.
    pub fn step(&self, q: StateId, label: &Label) -> StateId {
        self.step_with(q, |a| label.contains(a))
    }

    /// Runs a word from `q`, returning the final state.
    pub fn run_from<'a>(&self, q: StateId, word: impl IntoIterator<Item = &'a Label>) -> StateId {
        word.into_iter().fold(q, |q, l| self.step(q, l))
    }

    fn mask_label(&self, q: StateId, mask: usize, with_negations: bool) -> (Label, String) {
        let s = &self.states[q];
        let mut label = Label::new();
        let mut text = String::from("{");
        for (bit, &a) in s.read.iter().enumerate() {
            let atom = &self.atoms[a as usize];
            let on = mask & (1 << bit) != 0;
            if on {
                label.insert(atom.clone());
            }
            if on || with_negations {
                if text.len() > 1 {
                    text.push(',');
                }
                if !on {
                    text.push('!');
                }
                text.push_str(atom);
            }
        }
        text.push('}');
        (label, text)
    }

    /// Minimum-hop path from `q` to acceptance. Each step uses the smallest
    /// label (fewest atoms, then lowest bit pattern) that takes the transition.
    pub fn shortest_accepting_path(&self, q: StateId) -> Result<Vec<PathStep>, PathError> {
        if self.is_accepting(q) {
            return Ok(Vec::new());
        }
        let mut parent: Vec<Option<(StateId, usize)>> = vec![None; self.states.len()];
        let mut seen = vec![false; self.states.len()];
        seen[q] = true;
        let mut queue = VecDeque::from([q]);
        let mut found = None;
        'bfs: while let Some(cur) = queue.pop_front() {
            let s = &self.states[cur];
            let mut masks: Vec<usize> = (0..s.next.len()).collect();
            masks.sort_by_key(|m| (m.count_ones(), *m));
            for m in masks {
                let t = s.next[m];
                if seen[t] {
                    continue;
                }
                seen[t] = true;
                parent[t] = Some((cur, m));
                if self.is_accepting(t) {
                    found = Some(t);
                    break 'bfs;
                }
                queue.push_back(t);
            }
        }
        let Some(mut t) = found else {
            return Err(PathError::Unreachable(q));
        };
        let mut steps = Vec::new();
        while let Some((from, mask)) = parent[t] {
            steps.push(PathStep {
                from,
                label: self.mask_label(from, mask, false).0,
                to: t,
            });
            t = from;
        }
        steps.reverse();
        Ok(steps)
    }

    /// Plain-text dump: headers, one line per state, one line per transition.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "initial: {}", self.initial);
        let _ = writeln!(out, "accepting: {}", join_ids(self.accepting.iter()));
        let _ = writeln!(out, "sink: {}", join_ids(self.sink.iter()));
        for q in 0..self.states.len() {
            let _ = writeln!(out, "state {q}: {}", self.state_formula(q).to_prefix());
        }
        for (q, s) in self.states.iter().enumerate() {
            for (mask, &t) in s.next.iter().enumerate() {
                let (_, text) = self.mask_label(q, mask, true);
                let _ = writeln!(out, "{q} --{text}--> {t}");
            }
        }
        out
    }

    /// Graphviz rendering; parallel transitions are merged into one edge.
    pub fn export_dot(&self) -> String {
        let mut out = String::from("digraph automaton {\n  rankdir=LR;\n");
        let _ = writeln!(out, "  init [shape=point];\n  init -> q{};", self.initial);
        for q in 0..self.states.len() {
            let shape = if self.is_accepting(q) {
                "doublecircle"
            } else {
                "circle"
            };
            let text = format!("{}", self.state_formula(q)).replace('"', "\\\"");
            let _ = writeln!(out, "  q{q} [shape={shape}, label=\"{q}\\n{text}\"];");
        }
        for (q, s) in self.states.iter().enumerate() {
            let mut by_target: BTreeMap<StateId, Vec<String>> = BTreeMap::new();
            for (mask, &t) in s.next.iter().enumerate() {
                by_target
                    .entry(t)
                    .or_default()
                    .push(self.mask_label(q, mask, true).1);
            }
            for (t, labels) in by_target {
                let _ = writeln!(out, "  q{q} -> q{t} [label=\"{}\"];", labels.join(" | "));
            }
        }
        out.push_str("}\n");
        out
    }
}

fn join_ids<'a>(ids: impl Iterator<Item = &'a StateId>) -> String {
    ids.map(|q| q.to_string()).collect::<Vec<_>>().join(" ")
}

/// `true` iff some prefix of `word` (possibly empty) reaches acceptance.
pub fn accepts(dfa: &Dfa, word: &[Label]) -> bool {
    let mut q = dfa.initial();
    if dfa.is_accepting(q) {
        return true;
    }
    for l in word {
        q = dfa.step(q, l);
        if dfa.is_accepting(q) {
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{parse_prefix, Alphabet};

    fn formula(text: &str) -> LtlFormula {
        let ab = Alphabet::from_ids(["p", "q", "p2", "p3", "p9", "p11"]).unwrap();
        parse_prefix(text, &ab).unwrap()
    }

    fn l(atoms: &[&str]) -> Label {
        atoms.iter().copied().collect()
    }

    #[test]
    fn eventually_has_two_states() {
        let dfa = compile(&formula("F p")).unwrap();
        assert_eq!(dfa.num_states(), 2);
        let q1 = dfa.initial();
        let acc = dfa.accepting_states().next().unwrap();
        assert_eq!(dfa.step(q1, &l(&["p"])), acc);
        assert_eq!(dfa.step(q1, &l(&[])), q1);
        assert!(dfa.sink().is_none());
    }

    #[test]
    fn accepts_examples() {
        let dfa = compile(&formula("F p")).unwrap();
        assert!(!accepts(&dfa, &[l(&[])]));
        assert!(accepts(&dfa, &[l(&[]), l(&["p"]), l(&[])]));
        let t = compile(&LtlFormula::True).unwrap();
        assert!(accepts(&t, &[]));
    }

    #[test]
    fn mission_automaton_shape() {
        let dfa = compile(&formula("& F & p2 F & p3 F p11 ! p9")).unwrap();
        assert_eq!(dfa.num_states(), 6);
        assert_eq!(dfa.accepting_states().count(), 1);
        let sink = dfa.sink().expect("sink");
        assert_eq!(dfa.step(dfa.initial(), &l(&["p9"])), sink);
        assert_eq!(dfa.step(sink, &l(&["p2", "p3", "p11"])), sink);
        assert!(!dfa.is_live(sink));
    }

    #[test]
    fn shortest_path_examples() {
        let dfa = compile(&formula("F p")).unwrap();
        let path = dfa.shortest_accepting_path(dfa.initial()).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path[0].label, l(&["p"]));
        let acc = dfa.accepting_states().next().unwrap();
        assert!(dfa.shortest_accepting_path(acc).unwrap().is_empty());

        let m = compile(&formula("& F & p2 F & p3 F p11 ! p9")).unwrap();
        let sink = m.sink().unwrap();
        assert_eq!(
            m.shortest_accepting_path(sink),
            Err(PathError::Unreachable(sink))
        );
    }

    #[test]
    fn compile_rejects_non_cosafe() {
        assert_eq!(
            compile(&formula("G p")).unwrap_err(),
            CompileError::NotCosafe
        );
    }

    #[test]
    fn state_cap_is_enforced() {
        let f = formula("& F p2 & F p3 F p11");
        assert_eq!(
            compile_with_cap(&f, 3).unwrap_err(),
            CompileError::StateBlowup { cap: 3 }
        );
    }

    #[test]
    fn export_is_deterministic() {
        let f = formula("& F & p2 F & p3 F p11 ! p9");
        let a = compile(&f).unwrap().export_text();
        let b = compile(&f).unwrap().export_text();
        assert_eq!(a, b);
        assert!(a.starts_with("initial: 0\naccepting: "));
        assert!(a.contains("0 --{!p11,!p2,!p3,p9}--> "));
        assert!(compile(&f).unwrap().export_dot().contains("doublecircle"));
    }

    #[test]
    fn next_reads_nothing_now() {
        let dfa = compile(&formula("X p")).unwrap();
        assert_eq!(dfa.relevant_atoms(dfa.initial()).count(), 0);
        let q = dfa.step(dfa.initial(), &l(&["p"]));
        assert_eq!(dfa.state_formula(q), LtlFormula::atom("p"));
    }
}
