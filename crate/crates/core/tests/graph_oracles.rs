#![allow(clippy::needless_range_loop)]
use proptest::prelude::*;
use sgplan_core::dijkstra::{shortest_dist, PathTree, INF};
use sgplan_core::domain::{build_domain, ActionCache};
use sgplan_core::generate::{generate_scene, GeneratorSpec};
use sgplan_core::heuristics::compute_label_costs;
use sgplan_core::scene::{NodeId, SceneGraph};
use sgplan_core::{compile, parse_prefix};

fn floyd_warshall(g: &SceneGraph) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        let (u, v) = (e.u as usize, e.v as usize);
        d[u][v] = d[u][v].min(e.cost);
        d[v][u] = d[v][u].min(e.cost);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn small_spec() -> impl Strategy<Value = (GeneratorSpec, u64)> {
    (1u32..=3, 1u32..=2, 1u32..=2, 2u32..=3, 0u32..=2, any::<u64>()).prop_map(
        |(floors, rx, ry, w, objects, seed)| {
            (
                GeneratorSpec {
                    floors,
                    rooms_x: rx,
                    rooms_y: ry,
                    room_width: w,
                    room_height: w,
                    objects_per_room: objects,
                    ..GeneratorSpec::default()
                },
                seed,
            )
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dijkstra_matches_floyd_warshall((spec, seed) in small_spec()) {
        let g = generate_scene(&spec, seed).unwrap();
        let fw = floyd_warshall(&g);
        for s in 0..g.num_nodes() {
            let tree = PathTree::build(&g, s as NodeId);
            for t in 0..g.num_nodes() {
                prop_assert_eq!(tree.dist[t], fw[s][t]);
            }
        }
    }

    #[test]
    fn label_costs_match_brute_force((spec, seed) in small_spec()) {
        let g = generate_scene(&spec, seed).unwrap();
        let fw = floyd_warshall(&g);
        let c = compute_label_costs(&g);
        let nl = g.label_universe().len();
        let mut brute = vec![INF; nl * nl];
        for s in 0..g.num_nodes() {
            for t in 0..g.num_nodes() {
                let (l, m) = (g.label_index(s as NodeId), g.label_index(t as NodeId));
                brute[l * nl + m] = brute[l * nl + m].min(fw[s][t]);
            }
        }
        for l in 0..nl {
            for m in 0..nl {
                prop_assert_eq!(c.get(l, m), brute[l * nl + m]);
            }
        }
    }

    #[test]
    fn generated_scenes_are_connected((spec, seed) in small_spec()) {
        let g = generate_scene(&spec, seed).unwrap();
        let tree = PathTree::build(&g, 0);
        prop_assert!(tree.dist.iter().all(|d| d.is_finite()));
    }
}

#[test]
fn shortest_paths_obey_the_triangle_inequality() {
    let g = generate_scene(&GeneratorSpec { floors: 2, ..GeneratorSpec::default() }, 4).unwrap();
    let fw = floyd_warshall(&g);
    let n = g.num_nodes();
    for a in (0..n).step_by(7) {
        for b in (0..n).step_by(5) {
            for c in (0..n).step_by(11) {
                assert!(fw[a][c] <= fw[a][b] + fw[b][c]);
            }
        }
    }
}

#[test]
fn nearest_target_ties_go_to_the_smallest_id() {
    let g = generate_scene(&GeneratorSpec::default(), 1).unwrap();
    // Both neighbours of a corner cell are one step away.
    let targets: Vec<NodeId> = g.neighbors(0).iter().map(|&(v, _)| v).collect();
    let (d, t) = shortest_dist(&g, 0, &targets);
    assert_eq!(d, g.neighbors(0).iter().map(|&(_, c)| c).fold(INF, f64::min));
    assert_eq!(t, targets.iter().copied().filter(|&v| g.edge_cost(0, v) == Some(d)).min());
}

#[test]
fn level_actions_are_realizable_by_anchor_edges() {
    let g = generate_scene(&GeneratorSpec { floors: 3, ..GeneratorSpec::default() }, 8).unwrap();
    let fw = floyd_warshall(&g);
    let dfa = compile(&parse_prefix("& F p3 ! p5", &g.alphabet()).unwrap()).unwrap();
    let dom = build_domain(&g, &dfa, 0).unwrap();
    let mut cache = ActionCache::new();
    for s in 0..g.num_nodes() as NodeId {
        for a in dom.level_actions(s, &mut cache).iter() {
            let t = a.target();
            assert_eq!(a.cost(), fw[s as usize][t as usize]);
            for w in a.path.windows(2) {
                assert!(g.edge_cost(w[0], w[1]).is_some());
            }
            // The target is on the boundary of the target attribute and is
            // the nearest such node.
            let attr = g.attribute(a.target_attribute).unwrap();
            let boundary = g.boundary_of(attr);
            assert!(boundary.contains(&t));
            let best = boundary.iter().map(|&b| fw[s as usize][b as usize]).fold(INF, f64::min);
            assert_eq!(a.cost(), best);
            // Replaying the path equals stepping the edges one at a time.
            for q in 0..dfa.num_states() {
                let mut qq = q;
                for &v in &a.path[..a.path.len() - 1] {
                    qq = dom.transitions().step(g.label_index(v), qq);
                }
                assert_eq!(dom.run_path(q, &a.path), qq);
            }
        }
    }
}
