//! Shortest paths over the undirected scene graph.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::scene::{NodeId, SceneGraph};

/// Distance sentinel for unreachable nodes.
pub const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct HeapItem {
    pub dist: f64,
    pub node: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra where each seed starts at its own potential.
pub fn distances_from(graph: &SceneGraph, seeds: impl IntoIterator<Item = (NodeId, f64)>) -> Vec<f64> {
    let mut dist = vec![INF; graph.num_nodes()];
    let mut heap = BinaryHeap::new();
    for (s, d0) in seeds {
        if d0 < dist[s as usize] {
            dist[s as usize] = d0;
            heap.push(HeapItem { dist: d0, node: s });
        }
    }
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        if d > dist[node as usize] {
            continue;
        }
        for &(v, c) in graph.neighbors(node) {
            let nd = d + c;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(HeapItem { dist: nd, node: v });
            }
        }
    }
    dist
}

/// Single-source shortest-path tree. Ties are settled by node id, so the
/// tree (and every path read from it) is deterministic.
#[derive(Debug, Clone)]
pub struct PathTree {
    pub source: NodeId,
    pub dist: Vec<f64>,
    parent: Vec<u32>,
}

impl PathTree {
    pub fn build(graph: &SceneGraph, source: NodeId) -> Self {
        let n = graph.num_nodes();
        let mut dist = vec![INF; n];
        let mut parent = vec![u32::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source as usize] = 0.0;
        heap.push(HeapItem {
            dist: 0.0,
            node: source,
        });
        while let Some(HeapItem { dist: d, node }) = heap.pop() {
            if done[node as usize] {
                continue;
            }
            done[node as usize] = true;
            for &(v, c) in graph.neighbors(node) {
                let nd = d + c;
                let vi = v as usize;
                if !done[vi] && (nd < dist[vi] || (nd == dist[vi] && node < parent[vi])) {
                    dist[vi] = nd;
                    parent[vi] = node;
                    heap.push(HeapItem { dist: nd, node: v });
                }
            }
        }
        Self {
            source,
            dist,
            parent,
        }
    }

    /// Node sequence from the source to `target`, inclusive at both ends.
    pub fn path_to(&self, target: NodeId) -> Option<Vec<NodeId>> {
        if !self.dist[target as usize].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while cur != self.source {
            cur = self.parent[cur as usize];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

/// Nearest target from `source`; `(INF, None)` when none is reachable.
/// Ties go to the smallest node id.
pub fn shortest_dist(graph: &SceneGraph, source: NodeId, targets: &[NodeId]) -> (f64, Option<NodeId>) {
    let dist = distances_from(graph, [(source, 0.0)]);
    nearest(&dist, targets)
}

pub(crate) fn nearest(dist: &[f64], targets: &[NodeId]) -> (f64, Option<NodeId>) {
    let mut best = (INF, None);
    for &t in targets {
        let d = dist[t as usize];
        if d.is_finite() && (d < best.0 || (d == best.0 && best.1.is_none_or(|b| t < b))) {
            best = (d, Some(t));
        }
    }
    best
}
