//! The hierarchical planning domain: product states `(s, q)`, one level per
//! attribute set plus the anchor level over all of `V × Q`.
//!
//! The automaton consumes the label of the node being left, so a state
//! `(s, q)` has not yet read `ℓ(s)`. A path ending in `(s, q)` satisfies the
//! mission when `T(q, ℓ(s))` accepts.

use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use hashbrown::HashMap;
use thiserror::Error;

use crate::automaton::{Dfa, StateId};
use crate::dijkstra::{nearest, PathTree};
use crate::scene::{AttributeId, LevelKind, NodeId, SceneError, SceneGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductState {
    pub node: NodeId,
    pub q: StateId,
}

/// `T(q, l)` tabulated over the scene's realized labels.
#[derive(Debug, Clone)]
pub struct LabelTransitions {
    num_states: usize,
    table: Vec<StateId>,
}

impl LabelTransitions {
    pub fn new(scene: &SceneGraph, dfa: &Dfa) -> Self {
        let num_states = dfa.num_states();
        let mut table = Vec::with_capacity(scene.label_universe().len() * num_states);
        for li in 0..scene.label_universe().len() {
            let label = scene.universe_label(li);
            for q in 0..num_states {
                table.push(dfa.step(q, &label));
            }
        }
        Self { num_states, table }
    }

    #[inline]
    pub fn step(&self, label: usize, q: StateId) -> StateId {
        self.table[label * self.num_states + q]
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_labels(&self) -> usize {
        self.table.len() / self.num_states.max(1)
    }
}

/// One attribute level of the domain.
#[derive(Debug, Clone)]
pub struct LevelSpec {
    /// Domain level index; 0 is the anchor.
    pub index: usize,
    pub kind: LevelKind,
    /// Index into [`SceneGraph::levels`].
    pub scene_level: usize,
    /// Nodes of `V_k`.
    members: Vec<bool>,
    /// Per attribute of the level: id, sorted region, boundary nodes.
    attrs: Vec<LevelAttr>,
    /// `disjoint[a * n + b]`: interiors of attributes `a` and `b` do not meet.
    disjoint: Vec<bool>,
}

#[derive(Debug, Clone)]
struct LevelAttr {
    id: AttributeId,
    region: Vec<NodeId>,
    boundary: Vec<NodeId>,
}

impl LevelSpec {
    pub fn contains(&self, s: NodeId) -> bool {
        self.members[s as usize]
    }

    pub fn num_attributes(&self) -> usize {
        self.attrs.len()
    }
}

/// A level-`k` action from one node: a shortest path to the nearest boundary
/// node of another attribute on the same level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelAction {
    pub level: usize,
    pub target_attribute: AttributeId,
    /// Node sequence from source to target, both included.
    pub path: Vec<NodeId>,
    /// Costs of the consecutive path edges.
    pub edge_costs: Vec<f64>,
}

impl LevelAction {
    pub fn target(&self) -> NodeId {
        *self.path.last().expect("paths are nonempty")
    }

    /// Cost accumulated from `start` edge by edge.
    pub fn accumulate(&self, start: f64) -> f64 {
        self.edge_costs.iter().fold(start, |g, c| g + c)
    }

    pub fn cost(&self) -> f64 {
        self.accumulate(0.0)
    }
}

/// How a successor was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Move {
    Edge,
    Action(Rc<LevelAction>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    pub state: ProductState,
    pub cost: f64,
    pub via: Move,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Per-search memo of level actions, keyed by source node.
///
/// Actions depend only on the scene, so one cache can serve every automaton
/// state. It is deliberately not shared between searches.
#[derive(Debug, Default)]
pub struct ActionCache {
    by_node: HashMap<NodeId, Rc<Vec<Rc<LevelAction>>>>,
}

impl ActionCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.by_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_node.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct PlanningDomain<'a> {
    scene: &'a SceneGraph,
    dfa: &'a Dfa,
    trans: LabelTransitions,
    start: ProductState,
    /// Attribute levels; `levels[i].index == i + 1`.
    levels: Vec<LevelSpec>,
    warnings: Vec<String>,
}

pub fn build_domain<'a>(
    scene: &'a SceneGraph,
    dfa: &'a Dfa,
    start_node: NodeId,
) -> Result<PlanningDomain<'a>, DomainError> {
    scene.node(start_node)?;
    let n = scene.num_nodes();
    let mut levels = Vec::new();
    let mut warnings = Vec::new();
    for (scene_level, set) in scene.levels().iter().enumerate() {
        if set.attributes.is_empty() {
            warnings.push(format!(
                "attribute level `{}` has no attributes and was dropped",
                set.kind.as_str()
            ));
            continue;
        }
        let mut members = vec![false; n];
        let mut attrs = Vec::new();
        let mut interiors = Vec::new();
        for a in &set.attributes {
            for &s in &a.region {
                members[s as usize] = true;
            }
            attrs.push(LevelAttr {
                id: a.id,
                region: a.region.clone(),
                boundary: scene.boundary_of(a),
            });
            interiors.push(scene.interior_of(a));
        }
        let m = attrs.len();
        let mut disjoint = vec![true; m * m];
        for i in 0..m {
            for j in 0..m {
                disjoint[i * m + j] = i != j && !sorted_intersect(&interiors[i], &interiors[j]);
            }
        }
        levels.push(LevelSpec {
            index: levels.len() + 1,
            kind: set.kind.clone(),
            scene_level,
            members,
            attrs,
            disjoint,
        });
    }
    Ok(PlanningDomain {
        scene,
        dfa,
        trans: LabelTransitions::new(scene, dfa),
        start: ProductState {
            node: start_node,
            q: dfa.initial(),
        },
        levels,
        warnings,
    })
}

fn sorted_intersect(a: &[NodeId], b: &[NodeId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => return true,
        }
    }
    false
}

impl<'a> PlanningDomain<'a> {
    pub fn scene(&self) -> &'a SceneGraph {
        self.scene
    }

    pub fn dfa(&self) -> &'a Dfa {
        self.dfa
    }

    pub fn transitions(&self) -> &LabelTransitions {
        &self.trans
    }

    pub fn start(&self) -> ProductState {
        self.start
    }

    /// Attribute levels, anchor excluded.
    pub fn levels(&self) -> &[LevelSpec] {
        &self.levels
    }

    /// Total level count including the anchor.
    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn level(&self, k: usize) -> Option<&LevelSpec> {
        k.checked_sub(1).and_then(|i| self.levels.get(i))
    }

    pub fn level_index_of(&self, kind: &LevelKind) -> Option<usize> {
        self.levels.iter().find(|l| &l.kind == kind).map(|l| l.index)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn num_states(&self) -> usize {
        self.dfa.num_states()
    }

    /// Dense index of a product state.
    #[inline]
    pub fn state_index(&self, x: ProductState) -> usize {
        x.node as usize * self.dfa.num_states() + x.q
    }

    #[inline]
    pub fn state_at(&self, index: usize) -> ProductState {
        let nq = self.dfa.num_states();
        ProductState {
            node: (index / nq) as NodeId,
            q: index % nq,
        }
    }

    pub fn num_product_states(&self) -> usize {
        self.scene.num_nodes() * self.dfa.num_states()
    }

    /// `T(q, ℓ(s))`: the automaton state after leaving `s`.
    #[inline]
    pub fn departure_state(&self, x: ProductState) -> StateId {
        self.trans.step(self.scene.label_index(x.node), x.q)
    }

    /// Goal region `V × F`.
    pub fn is_goal(&self, x: ProductState) -> bool {
        self.dfa.is_accepting(x.q)
    }

    /// Whether a path ending at `x` satisfies the mission once the final
    /// node's label is read.
    pub fn completes_mission(&self, x: ProductState) -> bool {
        self.dfa.is_accepting(x.q) || self.dfa.is_accepting(self.departure_state(x))
    }

    /// Replays departure labels along `path` (all nodes but the last).
    pub fn run_path(&self, q: StateId, path: &[NodeId]) -> StateId {
        let upto = path.len().saturating_sub(1);
        path[..upto]
            .iter()
            .fold(q, |q, &s| self.trans.step(self.scene.label_index(s), q))
    }

    /// Level actions available at `s` on every attribute level.
    pub fn level_actions(&self, s: NodeId, cache: &mut ActionCache) -> Rc<Vec<Rc<LevelAction>>> {
        if let Some(hit) = cache.by_node.get(&s) {
            return hit.clone();
        }
        let actions = Rc::new(self.compute_level_actions(s));
        cache.by_node.insert(s, actions.clone());
        actions
    }

    fn compute_level_actions(&self, s: NodeId) -> Vec<Rc<LevelAction>> {
        if !self.levels.iter().any(|l| l.contains(s)) {
            return Vec::new();
        }
        let tree = PathTree::build(self.scene, s);
        let mut out = Vec::new();
        for level in &self.levels {
            if !level.contains(s) {
                continue;
            }
            let m = level.attrs.len();
            let sources: Vec<usize> = (0..m)
                .filter(|&i| level.attrs[i].region.binary_search(&s).is_ok())
                .collect();
            for b in 0..m {
                if !sources.iter().any(|&a| level.disjoint[a * m + b]) {
                    continue;
                }
                let (d, Some(t)) = nearest(&tree.dist, &level.attrs[b].boundary) else {
                    continue;
                };
                if t == s || !d.is_finite() {
                    continue;
                }
                let path = tree.path_to(t).expect("finite distance has a path");
                let edge_costs = path
                    .windows(2)
                    .map(|w| self.scene.edge_cost(w[0], w[1]).expect("tree edge exists"))
                    .collect();
                out.push(Rc::new(LevelAction {
                    level: level.index,
                    target_attribute: level.attrs[b].id,
                    path,
                    edge_costs,
                }));
            }
        }
        out
    }

    /// Successors of `x` at level `k`. Level 0 is the anchor: graph edges plus
    /// the actions of the levels in `anchor_levels`.
    pub fn successors(
        &self,
        k: usize,
        x: ProductState,
        cache: &mut ActionCache,
        anchor_levels: &[usize],
    ) -> Vec<Successor> {
        let mut out = Vec::new();
        if k == 0 {
            self.edge_successors(x, &mut out);
        }
        let wanted = |level: usize| {
            if k == 0 {
                anchor_levels.contains(&level)
            } else {
                level == k
            }
        };
        if k != 0 || !anchor_levels.is_empty() {
            for a in self.level_actions(x.node, cache).iter() {
                if wanted(a.level) {
                    out.push(Successor {
                        state: ProductState {
                            node: a.target(),
                            q: self.run_path(x.q, &a.path),
                        },
                        cost: a.cost(),
                        via: Move::Action(a.clone()),
                    });
                }
            }
        }
        out
    }

    /// Occupancy moves along graph edges.
    pub fn edge_successors(&self, x: ProductState, out: &mut Vec<Successor>) {
        let q = self.departure_state(x);
        for &(v, c) in self.scene.neighbors(x.node) {
            out.push(Successor {
                state: ProductState { node: v, q },
                cost: c,
                via: Move::Edge,
            });
        }
    }

    /// Every level-`k` action from every member node, one line per action
    /// (`s --cost--> t [attribute]`).
    pub fn dump_level(&self, k: usize, cache: &mut ActionCache) -> String {
        let mut out = String::new();
        if k == 0 {
            for e in self.scene.edges() {
                let _ = writeln!(out, "{} --{}--> {}", e.u, e.cost, e.v);
            }
            return out;
        }
        let Some(level) = self.level(k) else {
            return out;
        };
        let _ = writeln!(out, "level: {} ({})", k, level.kind.as_str());
        for s in 0..self.scene.num_nodes() as NodeId {
            if !level.contains(s) {
                continue;
            }
            for a in self.level_actions(s, cache).iter().filter(|a| a.level == k) {
                let _ = writeln!(
                    out,
                    "{s} --{}--> {} [{}]",
                    a.cost(),
                    a.target(),
                    a.target_attribute
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::compile;
    use crate::generate::{generate_scene, GeneratorSpec};
    use crate::ltl::parse_prefix;

    fn scene() -> SceneGraph {
        generate_scene(
            &GeneratorSpec {
                floors: 2,
                ..GeneratorSpec::default()
            },
            3,
        )
        .unwrap()
    }

    #[test]
    fn four_levels_for_three_attribute_sets() {
        let g = scene();
        let dfa = compile(&parse_prefix("F p1", &g.alphabet()).unwrap()).unwrap();
        let dom = build_domain(&g, &dfa, 0).unwrap();
        assert_eq!(dom.num_levels(), 4);
        assert!(!dom.is_goal(dom.start()));
        assert!(build_domain(&g, &dfa, 10_000).is_err());
    }

    #[test]
    fn accepting_initial_state_is_goal() {
        let g = scene();
        let dfa = compile(&crate::ltl::LtlFormula::True).unwrap();
        let dom = build_domain(&g, &dfa, 0).unwrap();
        assert!(dom.is_goal(dom.start()));
    }

    #[test]
    fn anchor_successors_count_edges_plus_actions() {
        let g = scene();
        let dfa = compile(&parse_prefix("F p1", &g.alphabet()).unwrap()).unwrap();
        let dom = build_domain(&g, &dfa, 0).unwrap();
        let mut cache = ActionCache::new();
        let all: Vec<usize> = dom.levels().iter().map(|l| l.index).collect();
        for s in [0u32, 12, 37] {
            let x = ProductState { node: s, q: dfa.initial() };
            let succ = dom.successors(0, x, &mut cache, &all);
            let actions = dom.level_actions(s, &mut cache).len();
            assert_eq!(succ.len(), g.neighbors(s).len() + actions);
            let edges_only = dom.successors(0, x, &mut cache, &[]);
            assert_eq!(edges_only.len(), g.neighbors(s).len());
        }
    }

    #[test]
    fn level_action_costs_match_shortest_paths() {
        let g = scene();
        let dfa = compile(&parse_prefix("F p1", &g.alphabet()).unwrap()).unwrap();
        let dom = build_domain(&g, &dfa, 0).unwrap();
        let mut cache = ActionCache::new();
        for s in 0..g.num_nodes() as NodeId {
            for a in dom.level_actions(s, &mut cache).iter() {
                let (d, _) = crate::dijkstra::shortest_dist(&g, s, &[a.target()]);
                assert_eq!(a.cost(), d);
                assert_eq!(a.path[0], s);
                assert_ne!(a.target(), s);
            }
        }
    }
}
