//! Label distances, the automaton-guided heuristic `h_LTL` and the
//! LLM-guided heuristic `h_LLM`.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use thiserror::Error;

use crate::automaton::{Dfa, StateId};
use crate::dijkstra::{distances_from, HeapItem, INF};
use crate::domain::{ActionCache, LabelTransitions, PlanningDomain, ProductState};
use crate::scene::{parse_prop_token, AttributeId, LevelKind, NodeId, SceneGraph};

/// Shortest distance between node sets of two realized labels:
/// `c(l, l') = min d(s, t)` over `ℓ(s) = l`, `ℓ(t) = l'`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelCosts {
    num_labels: usize,
    cost: Vec<f64>,
}

impl LabelCosts {
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.cost[l * self.num_labels + m]
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }
}

/// One multi-source Dijkstra per realized label.
pub fn compute_label_costs(scene: &SceneGraph) -> LabelCosts {
    let num_labels = scene.label_universe().len();
    let mut by_label: Vec<Vec<NodeId>> = vec![Vec::new(); num_labels];
    for s in 0..scene.num_nodes() as NodeId {
        by_label[scene.label_index(s)].push(s);
    }
    let mut cost = vec![INF; num_labels * num_labels];
    for (l, seeds) in by_label.iter().enumerate() {
        let dist = distances_from(scene, seeds.iter().map(|&s| (s, 0.0)));
        for (t, &d) in dist.iter().enumerate() {
            let m = scene.label_index(t as NodeId);
            let slot = &mut cost[l * num_labels + m];
            if d < *slot {
                *slot = d;
            }
        }
    }
    LabelCosts { num_labels, cost }
}

/// Best next label toward acceptance from `(l, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NextLabel {
    /// `q` already accepts.
    Accept,
    Label(usize),
    /// Acceptance is unreachable.
    None,
}

/// Flat tables behind a [`HeuristicTable`]. `h[q]` is empty for accepting
/// `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicParts {
    pub num_labels: usize,
    pub num_states: usize,
    pub label_costs: Vec<f64>,
    pub g: Vec<f64>,
    pub next: Vec<NextLabel>,
    pub h: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    Ltl,
    Llm,
}

/// Precomputed `c`, `g`, `ℓ_n` and the `h_LTL` field for one scene and one
/// automaton. `g(l, q)` is the cost-to-go once the automaton, in state `q`,
/// has consumed label `l`.
#[derive(Debug, Clone)]
pub struct HeuristicTable {
    pub label_costs: LabelCosts,
    num_states: usize,
    g: Vec<f64>,
    next: Vec<NextLabel>,
    /// `h[q][s]`; empty for accepting `q`.
    h: Vec<Vec<f64>>,
}

impl HeuristicTable {
    pub fn build(scene: &SceneGraph, dfa: &Dfa) -> Self {
        let trans = LabelTransitions::new(scene, dfa);
        Self::build_with(scene, dfa, &trans)
    }

    pub fn build_with(scene: &SceneGraph, dfa: &Dfa, trans: &LabelTransitions) -> Self {
        let label_costs = compute_label_costs(scene);
        let (g, next) = compute_g(&label_costs, trans, dfa);
        let mut table = Self {
            label_costs,
            num_states: dfa.num_states(),
            g,
            next,
            h: Vec::new(),
        };
        table.h = compute_h_ltl(scene, trans, dfa, &table);
        table
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Raw tables, for cache files.
    pub fn to_parts(&self) -> HeuristicParts {
        HeuristicParts {
            num_labels: self.label_costs.num_labels,
            num_states: self.num_states,
            label_costs: self.label_costs.cost.clone(),
            g: self.g.clone(),
            next: self.next.clone(),
            h: self.h.clone(),
        }
    }

    /// Inverse of [`HeuristicTable::to_parts`]; checks table sizes only.
    pub fn from_parts(p: HeuristicParts, num_nodes: usize) -> Result<Self, String> {
        let (nl, nq) = (p.num_labels, p.num_states);
        if p.label_costs.len() != nl * nl || p.g.len() != nl * nq || p.next.len() != nl * nq {
            return Err(String::from("label or state tables have the wrong size"));
        }
        if p.h.len() != nq || p.h.iter().any(|f| !f.is_empty() && f.len() != num_nodes) {
            return Err(String::from("heuristic field has the wrong size"));
        }
        Ok(Self {
            label_costs: LabelCosts {
                num_labels: nl,
                cost: p.label_costs,
            },
            num_states: nq,
            g: p.g,
            next: p.next,
            h: p.h,
        })
    }

    pub fn g(&self, l: usize, q: StateId) -> f64 {
        self.g[l * self.num_states + q]
    }

    pub fn next_label(&self, l: usize, q: StateId) -> NextLabel {
        self.next[l * self.num_states + q]
    }

    /// `h_LTL(s, q)`; zero on the goal region, infinite when no accepting
    /// run can be realized from `(s, q)`.
    pub fn h_ltl(&self, x: ProductState) -> f64 {
        match self.h.get(x.q) {
            Some(field) if !field.is_empty() => field[x.node as usize],
            _ => 0.0,
        }
    }
}

/// Backward Dijkstra over `(label, q)` pairs with edges
/// `(l, q) → (l', T(q, l'))` weighted by `c(l, l')`.
pub fn compute_g(costs: &LabelCosts, trans: &LabelTransitions, dfa: &Dfa) -> (Vec<f64>, Vec<NextLabel>) {
    let nl = costs.num_labels();
    let nq = dfa.num_states();
    // preds[l' * nq + q'] = { q : T(q, l') = q' }
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); nl * nq];
    for lp in 0..nl {
        for q in 0..nq {
            preds[lp * nq + trans.step(lp, q)].push(q);
        }
    }
    let mut g = vec![INF; nl * nq];
    let mut heap = BinaryHeap::new();
    for l in 0..nl {
        for q in dfa.accepting_states() {
            g[l * nq + q] = 0.0;
            heap.push(HeapItem {
                dist: 0.0,
                node: (l * nq + q) as u32,
            });
        }
    }
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        let idx = node as usize;
        if d > g[idx] {
            continue;
        }
        let (lp, qp) = (idx / nq, idx % nq);
        for &q in &preds[lp * nq + qp] {
            if dfa.is_accepting(q) {
                continue;
            }
            for l in 0..nl {
                let nd = costs.get(l, lp) + d;
                let slot = l * nq + q;
                if nd < g[slot] {
                    g[slot] = nd;
                    heap.push(HeapItem {
                        dist: nd,
                        node: slot as u32,
                    });
                }
            }
        }
    }
    let mut next = vec![NextLabel::None; nl * nq];
    for l in 0..nl {
        for q in 0..nq {
            if dfa.is_accepting(q) {
                next[l * nq + q] = NextLabel::Accept;
                continue;
            }
            let mut best = (INF, NextLabel::None);
            for lp in 0..nl {
                let qp = trans.step(lp, q);
                // Staying on `l` without a transition is never progress.
                if lp == l && qp == q {
                    continue;
                }
                let v = costs.get(l, lp) + g[lp * nq + qp];
                if v < best.0 {
                    best = (v, NextLabel::Label(lp));
                }
            }
            next[l * nq + q] = best.1;
        }
    }
    (g, next)
}

/// `h(s, q) = min_t d(s, t) + g(ℓ(t), T(q, ℓ(t)))`, one multi-source
/// Dijkstra per non-accepting `q`.
pub fn compute_h_ltl(
    scene: &SceneGraph,
    trans: &LabelTransitions,
    dfa: &Dfa,
    table: &HeuristicTable,
) -> Vec<Vec<f64>> {
    (0..dfa.num_states())
        .map(|q| {
            if dfa.is_accepting(q) {
                return Vec::new();
            }
            if !dfa.is_live(q) {
                return vec![INF; scene.num_nodes()];
            }
            let seeds = (0..scene.num_nodes() as NodeId).filter_map(|t| {
                let l = scene.label_index(t);
                let v = table.g(l, trans.step(l, q));
                v.is_finite().then_some((t, v))
            });
            distances_from(scene, seeds)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyViolation {
    pub state: ProductState,
    pub successor: ProductState,
    pub h: f64,
    pub cost: f64,
    pub h_successor: f64,
}

/// Checks `h(x) ≤ c(x, x') + h(x')` over every anchor successor (edges and
/// the actions of `anchor_levels`) and `h = 0` on the goal region.
/// Goal violations are reported with `successor == state`.
pub fn check_consistency(
    domain: &PlanningDomain<'_>,
    table: &HeuristicTable,
    cache: &mut ActionCache,
    anchor_levels: &[usize],
) -> Vec<ConsistencyViolation> {
    let mut out = Vec::new();
    let scene = domain.scene();
    for s in 0..scene.num_nodes() as NodeId {
        for q in 0..domain.num_states() {
            let x = ProductState { node: s, q };
            let h = table.h_ltl(x);
            if domain.is_goal(x) {
                if h != 0.0 {
                    out.push(ConsistencyViolation {
                        state: x,
                        successor: x,
                        h,
                        cost: 0.0,
                        h_successor: 0.0,
                    });
                }
                continue;
            }
            if !h.is_finite() {
                continue;
            }
            for succ in domain.successors(0, x, cache, anchor_levels) {
                let hs = table.h_ltl(succ.state);
                if h > succ.cost + hs {
                    out.push(ConsistencyViolation {
                        state: x,
                        successor: succ.state,
                        h,
                        cost: succ.cost,
                        h_successor: hs,
                    });
                }
            }
        }
    }
    out
}

/// Built-in motion names; callers may register more.
pub const MOVE: &str = "move";
pub const REACH: &str = "reach";

/// One suggested step `motion(from, to)` between attributes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FunctionCall {
    pub motion: String,
    pub from: AttributeId,
    pub to: AttributeId,
}

impl FunctionCall {
    pub fn new(motion: impl Into<String>, from: AttributeId, to: AttributeId) -> Self {
        Self {
            motion: motion.into(),
            from,
            to,
        }
    }
}

impl core::fmt::Display for FunctionCall {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}({}, {})", self.motion, self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GuidanceError {
    #[error("plan for ({context}, {q}) references unknown attribute {attribute}")]
    UnknownAttribute {
        context: AttributeId,
        q: StateId,
        attribute: AttributeId,
    },
}

/// Ordered high-level plans keyed by (context attribute, automaton state).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LlmGuidance {
    pub plans: BTreeMap<(AttributeId, StateId), Vec<FunctionCall>>,
}

impl LlmGuidance {
    pub fn validate(&self, scene: &SceneGraph) -> Result<(), GuidanceError> {
        for (&(context, q), calls) in &self.plans {
            for id in core::iter::once(context).chain(calls.iter().flat_map(|c| [c.from, c.to])) {
                if scene.attribute(id).is_none() {
                    return Err(GuidanceError::UnknownAttribute {
                        context,
                        q,
                        attribute: id,
                    });
                }
            }
        }
        Ok(())
    }
}

/// `h_LLM` lookup: sum of center distances along the plan for the node's
/// context attribute and the current automaton state, or 0 without a plan.
#[derive(Debug, Clone)]
pub struct LlmHeuristic {
    context: Vec<Option<AttributeId>>,
    values: HashMap<(AttributeId, StateId), f64>,
}

impl LlmHeuristic {
    pub fn new(scene: &SceneGraph, guidance: &LlmGuidance) -> Result<Self, GuidanceError> {
        guidance.validate(scene)?;
        let context = (0..scene.num_nodes() as NodeId)
            .map(|s| scene.context_attribute(s))
            .collect();
        let values = guidance
            .plans
            .iter()
            .map(|(&key, calls)| {
                let total = calls
                    .iter()
                    .map(|c| scene.center_distance(c.from, c.to).unwrap_or(0.0))
                    .fold(0.0, |a, b| a + b);
                (key, total)
            })
            .collect();
        Ok(Self { context, values })
    }

    /// Plan value, `None` when the key has no plan.
    pub fn lookup(&self, x: ProductState) -> Option<f64> {
        let c = self.context.get(x.node as usize).copied().flatten()?;
        self.values.get(&(c, x.q)).copied()
    }

    pub fn h_llm(&self, x: ProductState) -> f64 {
        self.lookup(x).unwrap_or(0.0)
    }
}

fn level_rank(scene: &SceneGraph, id: AttributeId) -> u8 {
    match scene.level_of(id).map(|k| &scene.levels()[k].kind) {
        Some(LevelKind::Floor) => 0,
        Some(LevelKind::Room) => 1,
        Some(LevelKind::Object) => 2,
        _ => 3,
    }
}

/// Natural-language rendering of the cheapest remaining automaton path
/// from `q`, e.g. `visit the kitchen 3 and reach the oven 11`.
pub fn remaining_mission(dfa: &Dfa, q: StateId, scene: &SceneGraph) -> String {
    let Ok(steps) = dfa.shortest_accepting_path(q) else {
        return String::from("mission infeasible from current state");
    };
    let mut parts: Vec<String> = Vec::new();
    for step in steps {
        let mut ids: Vec<(u8, AttributeId, Option<String>)> = Vec::new();
        for atom in step.label.iter() {
            match parse_prop_token(atom) {
                Some(id) => ids.push((level_rank(scene, id), id, None)),
                None => ids.push((4, 0, Some(String::from(atom)))),
            }
        }
        ids.sort();
        for (_, id, raw) in ids {
            if let Some(raw) = raw {
                parts.push(format!("satisfy {raw}"));
                continue;
            }
            let Some(a) = scene.attribute(id) else {
                parts.push(format!("satisfy p{id}"));
                continue;
            };
            let verb = match level_rank(scene, id) {
                0 => "go to",
                2 => "reach",
                _ => "visit",
            };
            parts.push(format!("{verb} the {} {}", a.name, a.id));
        }
    }
    parts.join(" and ")
}

/// Guidance built from the `ℓ_n` chain instead of a language model: from
/// each room (or floor) and automaton state, follow the best next labels to
/// acceptance and emit one call per attribute change.
pub fn mock_guidance(scene: &SceneGraph, dfa: &Dfa, table: &HeuristicTable) -> LlmGuidance {
    let trans = LabelTransitions::new(scene, dfa);
    let mut contexts: Vec<AttributeId> = (0..scene.num_nodes() as NodeId)
        .filter_map(|s| scene.context_attribute(s))
        .collect();
    contexts.sort_unstable();
    contexts.dedup();
    let mut plans = BTreeMap::new();
    let max_steps = table.label_costs.num_labels() * dfa.num_states() + 1;
    for &c in &contexts {
        let attr = scene.attribute(c).expect("context attribute exists");
        let rep = attr
            .region
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let da = crate::scene::euclid(scene.nodes()[a as usize].position, attr.center);
                let db = crate::scene::euclid(scene.nodes()[b as usize].position, attr.center);
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .expect("regions are nonempty");
        for q in 0..dfa.num_states() {
            if dfa.is_accepting(q) || !dfa.is_live(q) {
                continue;
            }
            let mut l = scene.label_index(rep);
            let mut qi = trans.step(l, q);
            let mut chain = Vec::new();
            let mut feasible = true;
            for _ in 0..max_steps {
                match table.next_label(l, qi) {
                    NextLabel::Accept => break,
                    NextLabel::None => {
                        feasible = false;
                        break;
                    }
                    NextLabel::Label(lp) => {
                        chain.push(lp);
                        qi = trans.step(lp, qi);
                        l = lp;
                    }
                }
            }
            if !feasible || !dfa.is_accepting(qi) {
                continue;
            }
            let mut calls = Vec::new();
            let mut cur = c;
            for lp in chain {
                let Some(target) = chain_target(scene, dfa, lp) else {
                    continue;
                };
                if target == cur {
                    continue;
                }
                let motion = if level_rank(scene, target) == 2 { REACH } else { MOVE };
                calls.push(FunctionCall::new(motion, cur, target));
                cur = target;
            }
            plans.insert((c, q), calls);
        }
    }
    LlmGuidance { plans }
}

/// Attribute a chain label points at: the most specific one the automaton
/// reads, else the most specific one present.
fn chain_target(scene: &SceneGraph, dfa: &Dfa, label: usize) -> Option<AttributeId> {
    let ids = &scene.label_universe()[label];
    let pick = |only_read: bool| {
        ids.iter()
            .copied()
            .filter(|&a| !only_read || dfa.atoms().iter().any(|t| parse_prop_token(t) == Some(a)))
            .filter(|&a| level_rank(scene, a) <= 2)
            .max_by_key(|&a| (level_rank(scene, a), core::cmp::Reverse(a)))
    };
    pick(true).or_else(|| pick(false))
}
