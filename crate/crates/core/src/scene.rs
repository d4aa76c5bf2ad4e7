//! Scene graphs `G = (V, E, {A_k})`: occupancy nodes, metric edges and
//! leveled attributes (objects, rooms, floors) owning node regions.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use hashbrown::HashMap;
use thiserror::Error;

use crate::label::Label;
use crate::ltl::{Alphabet, Proposition};

pub type NodeId = u32;
pub type AttributeId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneNode {
    pub id: NodeId,
    /// Meters.
    pub position: [f64; 3],
    pub floor: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneEdge {
    pub u: NodeId,
    pub v: NodeId,
    /// Meters, strictly positive.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LevelKind {
    Object,
    Room,
    Floor,
    Custom(String),
}

impl LevelKind {
    pub fn as_str(&self) -> &str {
        match self {
            LevelKind::Object => "object",
            LevelKind::Room => "room",
            LevelKind::Floor => "floor",
            LevelKind::Custom(name) => name,
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "object" => LevelKind::Object,
            "room" => LevelKind::Room,
            "floor" => LevelKind::Floor,
            other => LevelKind::Custom(other.to_string()),
        }
    }

    /// Whether distinct attributes of this kind must have disjoint interiors.
    fn partitions_space(&self) -> bool {
        matches!(self, LevelKind::Room | LevelKind::Floor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub id: AttributeId,
    pub name: String,
    /// Sorted, deduplicated node ids.
    pub region: Vec<NodeId>,
    pub center: [f64; 3],
    /// Same-level neighbors (room connectivity).
    pub connections: Vec<AttributeId>,
    /// Containing attribute on the next level up.
    pub parent: Option<AttributeId>,
}

impl Attribute {
    /// Proposition token, `p<id>`.
    pub fn prop_id(&self) -> String {
        prop_token(self.id)
    }

    /// `name_id` alias, lowercase with underscores.
    pub fn alias(&self) -> String {
        let mut s: String = self
            .name
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() {
                    c.to_ascii_lowercase()
                } else {
                    '_'
                }
            })
            .collect();
        let _ = write!(s, "_{}", self.id);
        s
    }

    pub fn display_name(&self) -> String {
        format!("{} {}", self.name, self.id)
    }
}

pub fn prop_token(id: AttributeId) -> String {
    format!("p{id}")
}

/// Inverse of [`prop_token`].
pub fn parse_prop_token(token: &str) -> Option<AttributeId> {
    token.strip_prefix('p')?.parse().ok()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSet {
    pub kind: LevelKind,
    pub attributes: Vec<Attribute>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("scene invariant violated: {0}")]
    InvariantViolation(String),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown attribute {0}")]
    UnknownAttribute(AttributeId),
    #[error("scene has no {0} level")]
    MissingLevel(String),
}

fn violation(msg: String) -> SceneError {
    SceneError::InvariantViolation(msg)
}

/// Validated, immutable scene graph with precomputed labels.
#[derive(Debug, Clone)]
pub struct SceneGraph {
    nodes: Vec<SceneNode>,
    edges: Vec<SceneEdge>,
    levels: Vec<AttributeSet>,
    adjacency: Vec<Vec<(NodeId, f64)>>,
    attr_pos: HashMap<AttributeId, (usize, usize)>,
    /// Per node: index into `label_table`.
    node_label: Vec<u32>,
    /// Distinct realized labels as sorted attribute-id lists, ordered canonically.
    label_table: Vec<Vec<AttributeId>>,
}

impl SceneGraph {
    /// Validates every invariant eagerly and precomputes adjacency and labels.
    pub fn new(
        nodes: Vec<SceneNode>,
        edges: Vec<SceneEdge>,
        mut levels: Vec<AttributeSet>,
    ) -> Result<Self, SceneError> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.id as usize != i {
                return Err(violation(format!(
                    "node ids must be 0..{n} in order; found {} at position {i}",
                    node.id
                )));
            }
            if node.position.iter().any(|c| !c.is_finite()) {
                return Err(violation(format!("node {} has a non-finite position", node.id)));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for e in &edges {
            if e.u as usize >= n || e.v as usize >= n {
                return Err(violation(format!(
                    "edge ({}, {}) references a missing node",
                    e.u, e.v
                )));
            }
            if !(e.cost.is_finite() && e.cost > 0.0) {
                return Err(violation(format!(
                    "edge ({}, {}) has non-positive cost {}",
                    e.u, e.v, e.cost
                )));
            }
            if e.u == e.v {
                return Err(violation(format!("self-loop at node {}", e.u)));
            }
            adjacency[e.u as usize].push((e.v, e.cost));
            adjacency[e.v as usize].push((e.u, e.cost));
        }
        for adj in &mut adjacency {
            adj.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        }

        let mut attr_pos = HashMap::new();
        let mut kinds = BTreeSet::new();
        for (k, level) in levels.iter_mut().enumerate() {
            if !kinds.insert(level.kind.clone()) {
                return Err(violation(format!(
                    "level kind `{}` appears twice",
                    level.kind.as_str()
                )));
            }
            for (i, a) in level.attributes.iter_mut().enumerate() {
                a.region.sort_unstable();
                a.region.dedup();
                a.connections.sort_unstable();
                a.connections.dedup();
                if a.region.is_empty() {
                    return Err(violation(format!("attribute {} has an empty region", a.id)));
                }
                if let Some(&bad) = a.region.iter().find(|&&s| s as usize >= n) {
                    return Err(violation(format!(
                        "attribute {} region references missing node {bad}",
                        a.id
                    )));
                }
                if attr_pos.insert(a.id, (k, i)).is_some() {
                    return Err(violation(format!("attribute id {} is not unique", a.id)));
                }
            }
        }

        let mut graph = Self {
            nodes,
            edges,
            levels,
            adjacency,
            attr_pos,
            node_label: Vec::new(),
            label_table: Vec::new(),
        };
        graph.check_attribute_links()?;
        graph.check_disjoint_interiors()?;
        graph.build_labels();
        Ok(graph)
    }

    fn check_attribute_links(&self) -> Result<(), SceneError> {
        for (k, level) in self.levels.iter().enumerate() {
            for a in &level.attributes {
                for &c in &a.connections {
                    match self.attr_pos.get(&c) {
                        Some(&(kc, _)) if kc == k && c != a.id => {}
                        _ => {
                            return Err(violation(format!(
                                "attribute {} lists connection {c}, which is not another attribute on its level",
                                a.id
                            )))
                        }
                    }
                }
                if let Some(p) = a.parent {
                    let parent = match self.attr_pos.get(&p) {
                        Some(&(kp, ip)) if kp == k + 1 => &self.levels[kp].attributes[ip],
                        _ => {
                            return Err(violation(format!(
                                "attribute {} has parent {p}, which is not on the next level",
                                a.id
                            )))
                        }
                    };
                    if let Some(&s) = a.region.iter().find(|s| parent.region.binary_search(s).is_err()) {
                        return Err(violation(format!(
                            "attribute {} region is not contained in parent {p} (node {s})",
                            a.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_disjoint_interiors(&self) -> Result<(), SceneError> {
        for level in &self.levels {
            if !level.kind.partitions_space() {
                continue;
            }
            let mut owner: HashMap<NodeId, AttributeId> = HashMap::new();
            for a in &level.attributes {
                for s in self.interior_of(a) {
                    if let Some(prev) = owner.insert(s, a.id) {
                        return Err(violation(format!(
                            "{} attributes {prev} and {} share interior node {s}",
                            level.kind.as_str(),
                            a.id
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn build_labels(&mut self) {
        let n = self.nodes.len();
        let mut per_node: Vec<Vec<AttributeId>> = vec![Vec::new(); n];
        for level in &self.levels {
            for a in &level.attributes {
                for &s in &a.region {
                    per_node[s as usize].push(a.id);
                }
            }
        }
        for l in &mut per_node {
            l.sort_unstable();
        }
        let distinct: BTreeSet<Vec<AttributeId>> = per_node.iter().cloned().collect();
        self.label_table = distinct.into_iter().collect();
        let index: BTreeMap<&Vec<AttributeId>, u32> = self
            .label_table
            .iter()
            .enumerate()
            .map(|(i, l)| (l, i as u32))
            .collect();
        self.node_label = per_node.iter().map(|l| index[l]).collect();
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[SceneNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[SceneEdge] {
        &self.edges
    }

    pub fn levels(&self) -> &[AttributeSet] {
        &self.levels
    }

    pub fn node(&self, s: NodeId) -> Result<&SceneNode, SceneError> {
        self.nodes.get(s as usize).ok_or(SceneError::UnknownNode(s))
    }

    pub fn neighbors(&self, s: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[s as usize]
    }

    /// Cheapest edge between two nodes, if any.
    pub fn edge_cost(&self, u: NodeId, v: NodeId) -> Option<f64> {
        self.adjacency[u as usize]
            .iter()
            .filter(|(w, _)| *w == v)
            .map(|(_, c)| *c)
            .min_by(f64::total_cmp)
    }

    pub fn attribute(&self, id: AttributeId) -> Option<&Attribute> {
        let &(k, i) = self.attr_pos.get(&id)?;
        Some(&self.levels[k].attributes[i])
    }

    /// Index of the level holding attribute `id`.
    pub fn level_of(&self, id: AttributeId) -> Option<usize> {
        self.attr_pos.get(&id).map(|&(k, _)| k)
    }

    pub fn level_by_kind(&self, kind: &LevelKind) -> Option<&AttributeSet> {
        self.levels.iter().find(|l| &l.kind == kind)
    }

    pub fn attributes(&self) -> impl Iterator<Item = &Attribute> {
        self.levels.iter().flat_map(|l| l.attributes.iter())
    }

    /// `int V_a`: region nodes all of whose neighbors are in the region.
    pub fn interior_of(&self, a: &Attribute) -> Vec<NodeId> {
        a.region
            .iter()
            .copied()
            .filter(|&s| {
                self.adjacency[s as usize]
                    .iter()
                    .all(|(v, _)| a.region.binary_search(v).is_ok())
            })
            .collect()
    }

    /// `∂V_a = V_a \ int V_a`.
    pub fn boundary_of(&self, a: &Attribute) -> Vec<NodeId> {
        a.region
            .iter()
            .copied()
            .filter(|&s| {
                self.adjacency[s as usize]
                    .iter()
                    .any(|(v, _)| a.region.binary_search(v).is_err())
            })
            .collect()
    }

    /// Attribute ids whose region contains `s`, sorted.
    pub fn label_ids(&self, s: NodeId) -> Result<&[AttributeId], SceneError> {
        let idx = *self
            .node_label
            .get(s as usize)
            .ok_or(SceneError::UnknownNode(s))?;
        Ok(&self.label_table[idx as usize])
    }

    /// `ℓ(s)` as proposition tokens.
    pub fn label(&self, s: NodeId) -> Result<Label, SceneError> {
        Ok(self.label_ids(s)?.iter().map(|&a| prop_token(a)).collect())
    }

    /// Index of `ℓ(s)` in [`SceneGraph::label_universe`].
    pub fn label_index(&self, s: NodeId) -> usize {
        self.node_label[s as usize] as usize
    }

    /// Distinct labels realized by some node, in canonical order.
    pub fn label_universe(&self) -> &[Vec<AttributeId>] {
        &self.label_table
    }

    pub fn universe_label(&self, idx: usize) -> Label {
        self.label_table[idx].iter().map(|&a| prop_token(a)).collect()
    }

    /// Proposition alphabet: `p<id>` tokens with `name_id` aliases.
    pub fn alphabet(&self) -> Alphabet {
        let mut ab = Alphabet::default();
        for a in self.attributes() {
            ab.insert(Proposition::new(a.prop_id(), a.display_name()))
                .expect("attribute ids are unique");
        }
        for a in self.attributes() {
            // Ignore an alias that collides with another attribute's token.
            let _ = ab.add_alias(a.alias(), &a.prop_id());
        }
        ab
    }

    /// Room containing `s`, falling back to its floor.
    pub fn context_attribute(&self, s: NodeId) -> Option<AttributeId> {
        let labels = self.label_ids(s).ok()?;
        for kind in [LevelKind::Room, LevelKind::Floor] {
            if let Some(&a) = labels
                .iter()
                .find(|&&a| self.level_of(a).is_some_and(|k| self.levels[k].kind == kind))
            {
                return Some(a);
            }
        }
        None
    }

    /// Euclidean distance between two attribute centers.
    pub fn center_distance(&self, a: AttributeId, b: AttributeId) -> Option<f64> {
        let ca = self.attribute(a)?.center;
        let cb = self.attribute(b)?.center;
        Some(euclid(ca, cb))
    }

    /// Nested floors → rooms → objects rendering used in prompts.
    ///
    /// Rooms carry `(id)` tags and `[connections]`; ordering is by id. An
    /// object without a parent goes to the room containing the node nearest
    /// its center.
    pub fn attribute_hierarchy(&self) -> Result<String, SceneError> {
        let floors = self
            .level_by_kind(&LevelKind::Floor)
            .ok_or_else(|| SceneError::MissingLevel("floor".into()))?;
        let rooms = self
            .level_by_kind(&LevelKind::Room)
            .ok_or_else(|| SceneError::MissingLevel("room".into()))?;
        let objects = self
            .level_by_kind(&LevelKind::Object)
            .ok_or_else(|| SceneError::MissingLevel("object".into()))?;

        let mut room_children: BTreeMap<Option<AttributeId>, Vec<&Attribute>> = BTreeMap::new();
        for o in &objects.attributes {
            let room = o
                .parent
                .filter(|p| rooms.attributes.iter().any(|r| r.id == *p))
                .or_else(|| self.containing(rooms, self.nearest_node(o.center)));
            room_children.entry(room).or_default().push(o);
        }
        let mut floor_children: BTreeMap<Option<AttributeId>, Vec<&Attribute>> = BTreeMap::new();
        for r in &rooms.attributes {
            let floor = r
                .parent
                .filter(|p| floors.attributes.iter().any(|f| f.id == *p))
                .or_else(|| self.containing(floors, self.nearest_node(r.center)));
            floor_children.entry(floor).or_default().push(r);
        }

        let mut out = String::new();
        let mut sorted_floors: Vec<&Attribute> = floors.attributes.iter().collect();
        sorted_floors.sort_by_key(|a| a.id);
        for f in sorted_floors {
            let mut rs = floor_children.remove(&Some(f.id)).unwrap_or_default();
            rs.sort_by_key(|a| a.id);
            let colon = if rs.is_empty() { "" } else { ":" };
            let _ = writeln!(out, "{} ({}){colon}", f.name, f.id);
            for r in rs {
                write_room(&mut out, &mut room_children, r);
            }
        }
        // Rooms without a floor, then objects without a room.
        let mut orphan_rooms = floor_children.remove(&None).unwrap_or_default();
        orphan_rooms.sort_by_key(|a| a.id);
        let orphan_objects = room_children.remove(&None).unwrap_or_default();
        if !orphan_rooms.is_empty() || !orphan_objects.is_empty() {
            let _ = writeln!(out, "unassigned:");
            for r in orphan_rooms {
                write_room(&mut out, &mut room_children, r);
            }
            let mut objs = orphan_objects;
            objs.sort_by_key(|a| a.id);
            for o in objs {
                let _ = writeln!(out, "  {} ({})", o.name, o.id);
            }
        }
        Ok(out)
    }

    fn nearest_node(&self, p: [f64; 3]) -> Option<NodeId> {
        self.nodes
            .iter()
            .min_by(|a, b| euclid(a.position, p).total_cmp(&euclid(b.position, p)))
            .map(|n| n.id)
    }

    fn containing(&self, level: &AttributeSet, s: Option<NodeId>) -> Option<AttributeId> {
        let s = s?;
        level
            .attributes
            .iter()
            .find(|a| a.region.binary_search(&s).is_ok())
            .map(|a| a.id)
    }
}

fn write_room(
    out: &mut String,
    room_children: &mut BTreeMap<Option<AttributeId>, Vec<&Attribute>>,
    r: &Attribute,
) {
    let mut objs = room_children.remove(&Some(r.id)).unwrap_or_default();
    objs.sort_by_key(|a| a.id);
    let conns: Vec<String> = r.connections.iter().map(|c| c.to_string()).collect();
    let colon = if objs.is_empty() { "" } else { ":" };
    let _ = writeln!(out, "  {} ({}) [{}]{colon}", r.name, r.id, conns.join(", "));
    for o in objs {
        let _ = writeln!(out, "    {} ({})", o.name, o.id);
    }
}

pub fn euclid(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d: f64 = (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum();
    libm::sqrt(d)
}

/// Mean position of a set of nodes.
pub fn centroid(nodes: &[SceneNode], region: &[NodeId]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for &s in region {
        for (i, v) in nodes[s as usize].position.iter().enumerate() {
            c[i] += v;
        }
    }
    let k = region.len().max(1) as f64;
    c.map(|v| v / k)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn line(n: u32) -> Vec<SceneNode> {
        (0..n)
            .map(|i| SceneNode {
                id: i,
                position: [i as f64, 0.0, 0.0],
                floor: 0,
            })
            .collect()
    }

    fn attr(id: u32, name: &str, region: &[u32], parent: Option<u32>) -> Attribute {
        Attribute {
            id,
            name: name.into(),
            region: region.to_vec(),
            center: [0.0; 3],
            connections: vec![],
            parent,
        }
    }

    fn edges(pairs: &[(u32, u32, f64)]) -> Vec<SceneEdge> {
        pairs
            .iter()
            .map(|&(u, v, cost)| SceneEdge { u, v, cost })
            .collect()
    }

    #[test]
    fn minimal_scene() {
        let g = SceneGraph::new(
            line(2),
            edges(&[(0, 1, 1.0)]),
            vec![AttributeSet {
                kind: LevelKind::Object,
                attributes: vec![attr(5, "oven", &[1], None)],
            }],
        )
        .unwrap();
        assert_eq!(g.num_nodes(), 2);
        assert!(g.label(0).unwrap().is_empty());
        assert_eq!(g.label(1).unwrap(), ["p5"].into_iter().collect());
        assert_eq!(g.label(7), Err(SceneError::UnknownNode(7)));
        assert_eq!(g.alphabet().resolve("oven_5"), Some("p5"));
    }

    #[test]
    fn room_outside_floor_is_rejected() {
        let err = SceneGraph::new(
            line(3),
            edges(&[(0, 1, 1.0), (1, 2, 1.0)]),
            vec![
                AttributeSet {
                    kind: LevelKind::Room,
                    attributes: vec![attr(2, "kitchen", &[1, 2], Some(1))],
                },
                AttributeSet {
                    kind: LevelKind::Floor,
                    attributes: vec![attr(1, "floor", &[0, 1], None)],
                },
            ],
        )
        .unwrap_err();
        assert!(matches!(err, SceneError::InvariantViolation(ref m) if m.contains("not contained")));
    }

    #[test]
    fn rejects_bad_edges_and_overlaps() {
        assert!(SceneGraph::new(line(2), edges(&[(0, 1, 0.0)]), vec![]).is_err());
        assert!(SceneGraph::new(line(2), edges(&[(0, 3, 1.0)]), vec![]).is_err());
        let overlap = SceneGraph::new(
            line(4),
            edges(&[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]),
            vec![AttributeSet {
                kind: LevelKind::Room,
                attributes: vec![attr(1, "a", &[0, 1, 2, 3], None), attr(2, "b", &[1, 2, 3], None)],
            }],
        );
        assert!(matches!(overlap, Err(SceneError::InvariantViolation(ref m)) if m.contains("interior")));
    }

    #[test]
    fn boundary_and_interior() {
        let g = SceneGraph::new(
            line(4),
            edges(&[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]),
            vec![AttributeSet {
                kind: LevelKind::Room,
                attributes: vec![attr(1, "a", &[0, 1], None), attr(2, "b", &[2, 3], None)],
            }],
        )
        .unwrap();
        let a = g.attribute(1).unwrap();
        assert_eq!(g.interior_of(a), vec![0]);
        assert_eq!(g.boundary_of(a), vec![1]);
    }

    #[test]
    fn hierarchy_three_lines() {
        let g = SceneGraph::new(
            line(2),
            edges(&[(0, 1, 1.0)]),
            vec![
                AttributeSet {
                    kind: LevelKind::Object,
                    attributes: vec![attr(3, "oven", &[1], Some(2))],
                },
                AttributeSet {
                    kind: LevelKind::Room,
                    attributes: vec![attr(2, "kitchen", &[0, 1], Some(1))],
                },
                AttributeSet {
                    kind: LevelKind::Floor,
                    attributes: vec![attr(1, "floor", &[0, 1], None)],
                },
            ],
        )
        .unwrap();
        assert_eq!(
            g.attribute_hierarchy().unwrap(),
            "floor (1):\n  kitchen (2) []:\n    oven (3)\n"
        );
        assert_eq!(g.context_attribute(1), Some(2));
    }

    #[test]
    fn hierarchy_needs_all_levels() {
        let g = SceneGraph::new(line(1), vec![], vec![]).unwrap();
        assert_eq!(
            g.attribute_hierarchy(),
            Err(SceneError::MissingLevel("floor".into()))
        );
    }
}
