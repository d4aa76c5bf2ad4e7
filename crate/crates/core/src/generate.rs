//! Seeded synthetic multi-floor scenes for tests and benchmarks.
//!
//! Each floor is a grid of rectangular rooms made of 4-connected cells.
//! Neighboring rooms are joined by one-cell doors (a random spanning tree of
//! the room grid plus some extra doors). Consecutive floors are joined by a
//! pair of staircase objects, one on each floor, linked by a single edge.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::scene::{
    centroid, Attribute, AttributeId, AttributeSet, LevelKind, NodeId, SceneEdge, SceneError,
    SceneGraph, SceneNode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StairPlacement {
    /// Alternating grid corners.
    Corner,
    /// Random cells.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub floors: u32,
    pub rooms_x: u32,
    pub rooms_y: u32,
    pub room_width: u32,
    pub room_height: u32,
    pub objects_per_room: u32,
    /// Meters between neighboring cells.
    pub cell_pitch: f64,
    /// Meters between floors; also the staircase edge cost.
    pub floor_height: f64,
    pub stairs: StairPlacement,
    /// Chance of a door on each room adjacency outside the spanning tree.
    pub extra_door_probability: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            floors: 1,
            rooms_x: 2,
            rooms_y: 2,
            room_width: 5,
            room_height: 5,
            objects_per_room: 2,
            cell_pitch: 1.0,
            floor_height: 4.0,
            stairs: StairPlacement::Corner,
            extra_door_probability: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

const ROOM_NAMES: &[&str] = &[
    "kitchen",
    "bedroom",
    "bathroom",
    "living room",
    "dining room",
    "corridor",
    "office",
    "storage",
    "laundry room",
    "lobby",
];

const OBJECT_NAMES: &[&str] = &[
    "oven", "tv", "couch", "chair", "sink", "bed", "table", "vase", "potted plant", "toilet",
    "refrigerator", "desk", "lamp", "bookshelf",
];

pub fn generate_scene(spec: &GeneratorSpec, seed: u64) -> Result<SceneGraph, GenerateError> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = spec.rooms_x * spec.room_width;
    let rows = spec.rooms_y * spec.room_height;
    let per_floor = cols * rows;
    let node_at = |f: u32, r: u32, c: u32| -> NodeId { f * per_floor + r * cols + c };
    let room_of = |r: u32, c: u32| -> (u32, u32) { (c / spec.room_width, r / spec.room_height) };

    let mut nodes = Vec::with_capacity((per_floor * spec.floors) as usize);
    for f in 0..spec.floors {
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(SceneNode {
                    id: node_at(f, r, c),
                    position: [
                        c as f64 * spec.cell_pitch,
                        r as f64 * spec.cell_pitch,
                        f as f64 * spec.floor_height,
                    ],
                    floor: f,
                });
            }
        }
    }

    let mut edges = Vec::new();
    let mut next_id: AttributeId = 1;
    let mut floors = Vec::new();
    let mut rooms = Vec::new();
    let mut objects = Vec::new();

    // Staircase cells per floor: (floor, row, col, partner floor).
    let mut stairs: Vec<(u32, u32, u32)> = Vec::new();
    let mut stair_links = Vec::new();
    for f in 0..spec.floors.saturating_sub(1) {
        let (r, c) = match spec.stairs {
            StairPlacement::Corner if f % 2 == 0 => (0, 0),
            StairPlacement::Corner => (rows - 1, cols - 1),
            StairPlacement::Random => loop {
                let cell = (rng.gen_range(0..rows), rng.gen_range(0..cols));
                let taken = |fl: u32| stairs.iter().any(|&(sf, sr, sc)| sf == fl && (sr, sc) == cell);
                if !taken(f) && !taken(f + 1) {
                    break cell;
                }
            },
        };
        stairs.push((f, r, c));
        stairs.push((f + 1, r, c));
        stair_links.push((node_at(f, r, c), node_at(f + 1, r, c)));
    }

    for f in 0..spec.floors {
        let floor_id = next_id;
        next_id += 1;
        let floor_region: Vec<NodeId> = (0..per_floor).map(|i| f * per_floor + i).collect();

        // Room grid doors.
        let room_index = |rx: u32, ry: u32| (ry * spec.rooms_x + rx) as usize;
        let mut adj_pairs = Vec::new();
        for ry in 0..spec.rooms_y {
            for rx in 0..spec.rooms_x {
                if rx + 1 < spec.rooms_x {
                    adj_pairs.push(((rx, ry), (rx + 1, ry)));
                }
                if ry + 1 < spec.rooms_y {
                    adj_pairs.push(((rx, ry), (rx, ry + 1)));
                }
            }
        }
        adj_pairs.shuffle(&mut rng);
        let n_rooms = (spec.rooms_x * spec.rooms_y) as usize;
        let mut uf: Vec<usize> = (0..n_rooms).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut doors = Vec::new();
        for &(a, b) in &adj_pairs {
            let (ia, ib) = (room_index(a.0, a.1), room_index(b.0, b.1));
            let (ra, rb) = (find(&mut uf, ia), find(&mut uf, ib));
            if ra != rb {
                uf[ra] = rb;
                doors.push((a, b));
            } else if rng.gen_bool(spec.extra_door_probability) {
                doors.push((a, b));
            }
        }
        doors.sort();

        let first_room_id = next_id;
        next_id += n_rooms as u32;
        let mut connections: Vec<Vec<AttributeId>> = vec![Vec::new(); n_rooms];
        for &(a, b) in &doors {
            let (ia, ib) = (room_index(a.0, a.1), room_index(b.0, b.1));
            connections[ia].push(first_room_id + ib as u32);
            connections[ib].push(first_room_id + ia as u32);
            let (r1, c1, r2, c2) = if a.1 == b.1 {
                // Horizontal neighbors share a vertical wall.
                let r = a.1 * spec.room_height + rng.gen_range(0..spec.room_height);
                let c = b.0 * spec.room_width;
                (r, c - 1, r, c)
            } else {
                let c = a.0 * spec.room_width + rng.gen_range(0..spec.room_width);
                let r = b.1 * spec.room_height;
                (r - 1, c, r, c)
            };
            edges.push(SceneEdge {
                u: node_at(f, r1, c1),
                v: node_at(f, r2, c2),
                cost: spec.cell_pitch,
            });
        }

        // In-room grid edges.
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols && room_of(r, c) == room_of(r, c + 1) {
                    edges.push(SceneEdge {
                        u: node_at(f, r, c),
                        v: node_at(f, r, c + 1),
                        cost: spec.cell_pitch,
                    });
                }
                if r + 1 < rows && room_of(r, c) == room_of(r + 1, c) {
                    edges.push(SceneEdge {
                        u: node_at(f, r, c),
                        v: node_at(f, r + 1, c),
                        cost: spec.cell_pitch,
                    });
                }
            }
        }

        for ry in 0..spec.rooms_y {
            for rx in 0..spec.rooms_x {
                let idx = room_index(rx, ry);
                let room_id = first_room_id + idx as u32;
                let mut cells = Vec::new();
                for r in ry * spec.room_height..(ry + 1) * spec.room_height {
                    for c in rx * spec.room_width..(rx + 1) * spec.room_width {
                        cells.push((r, c));
                    }
                }
                let region: Vec<NodeId> = cells.iter().map(|&(r, c)| node_at(f, r, c)).collect();

                let mut free: Vec<(u32, u32)> = cells
                    .iter()
                    .copied()
                    .filter(|&(r, c)| !stairs.iter().any(|&(sf, sr, sc)| sf == f && (sr, sc) == (r, c)))
                    .collect();
                for &(sf, sr, sc) in &stairs {
                    if sf == f && room_of(sr, sc) == (rx, ry) {
                        let id = next_id;
                        next_id += 1;
                        let s = node_at(f, sr, sc);
                        objects.push(Attribute {
                            id,
                            name: "staircase".into(),
                            region: vec![s],
                            center: nodes[s as usize].position,
                            connections: vec![],
                            parent: Some(room_id),
                        });
                    }
                }
                free.shuffle(&mut rng);
                for _ in 0..spec.objects_per_room {
                    let Some((r, c)) = free.pop() else { break };
                    let id = next_id;
                    next_id += 1;
                    let s = node_at(f, r, c);
                    objects.push(Attribute {
                        id,
                        name: OBJECT_NAMES[rng.gen_range(0..OBJECT_NAMES.len())].into(),
                        region: vec![s],
                        center: nodes[s as usize].position,
                        connections: vec![],
                        parent: Some(room_id),
                    });
                }

                rooms.push(Attribute {
                    id: room_id,
                    name: ROOM_NAMES[rng.gen_range(0..ROOM_NAMES.len())].into(),
                    center: centroid(&nodes, &region),
                    region,
                    connections: core::mem::take(&mut connections[idx]),
                    parent: Some(floor_id),
                });
            }
        }

        floors.push(Attribute {
            id: floor_id,
            name: format!("floor {f}"),
            center: centroid(&nodes, &floor_region),
            region: floor_region,
            connections: vec![],
            parent: None,
        });
    }

    for (u, v) in stair_links {
        edges.push(SceneEdge {
            u,
            v,
            cost: spec.floor_height,
        });
    }

    objects.sort_by_key(|a| a.id);
    Ok(SceneGraph::new(
        nodes,
        edges,
        vec![
            AttributeSet {
                kind: LevelKind::Object,
                attributes: objects,
            },
            AttributeSet {
                kind: LevelKind::Room,
                attributes: rooms,
            },
            AttributeSet {
                kind: LevelKind::Floor,
                attributes: floors,
            },
        ],
    )?)
}

fn validate(spec: &GeneratorSpec) -> Result<(), GenerateError> {
    let bad = |m: &str| Err(GenerateError::InvalidSpec(m.into()));
    if spec.floors == 0 || spec.rooms_x == 0 || spec.rooms_y == 0 {
        return bad("floors and room grid dimensions must be positive");
    }
    if spec.room_width == 0 || spec.room_height == 0 {
        return bad("room size must be positive");
    }
    if !(spec.cell_pitch.is_finite() && spec.cell_pitch > 0.0) {
        return bad("cell pitch must be a positive number");
    }
    if !(spec.floor_height.is_finite() && spec.floor_height > 0.0) {
        return bad("floor height must be a positive number");
    }
    if !(0.0..=1.0).contains(&spec.extra_door_probability) {
        return bad("extra door probability must lie in [0, 1]");
    }
    if spec.objects_per_room > spec.room_width * spec.room_height {
        return bad("more objects than cells in a room");
    }
    let cells = spec.rooms_x * spec.room_width * spec.rooms_y * spec.room_height;
    if spec.floors > 2 && cells < 2 {
        return bad("staircases need at least two cells per floor");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_room_grid_arithmetic() {
        let spec = GeneratorSpec {
            rooms_x: 1,
            rooms_y: 1,
            room_width: 3,
            room_height: 3,
            objects_per_room: 0,
            ..GeneratorSpec::default()
        };
        let g = generate_scene(&spec, 1).unwrap();
        assert_eq!(g.num_nodes(), 9);
        assert_eq!(g.edges().len(), 12);
    }

    #[test]
    fn seeded_determinism() {
        let spec = GeneratorSpec {
            floors: 2,
            ..GeneratorSpec::default()
        };
        let a = generate_scene(&spec, 7).unwrap();
        let b = generate_scene(&spec, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.levels(), b.levels());
        assert_eq!(a.attribute_hierarchy().unwrap(), b.attribute_hierarchy().unwrap());
    }

    #[test]
    fn invalid_specs() {
        let zero = GeneratorSpec {
            floors: 0,
            ..GeneratorSpec::default()
        };
        assert!(matches!(generate_scene(&zero, 0), Err(GenerateError::InvalidSpec(_))));
        let crowded = GeneratorSpec {
            room_width: 1,
            room_height: 1,
            objects_per_room: 2,
            ..GeneratorSpec::default()
        };
        assert!(matches!(generate_scene(&crowded, 0), Err(GenerateError::InvalidSpec(_))));
    }
}
