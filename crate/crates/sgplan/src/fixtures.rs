//! Packaged scenes, missions and transcripts.

use std::path::PathBuf;

use sgplan_core::generate::{generate_scene, GeneratorSpec};
use sgplan_core::scene::{centroid, Attribute, AttributeSet, LevelKind, SceneEdge, SceneNode};
use sgplan_core::{compile, Dfa, NodeId, SceneGraph, StateId};

use crate::llm::{
    default_motions, fetch_guidance, translate, RecordTransport, ScriptedTransport, Transcript, DEFAULT_MAX_ATTEMPTS,
};

pub const APARTMENT_MISSION: &str =
    "go to the bedroom 2, then visit the kitchen 3, reach the oven 11, and always avoid the TV 9";

/// Expected translation of [`APARTMENT_MISSION`].
pub const APARTMENT_FORMULA: &str = "& F & p2 F & p3 F p11 ! p9";

pub const APARTMENT_MU_UNIQUE: &str =
    "go to the bedroom (2), then visit the kitchen (3), reach the oven (11), and always avoid the TV (9)";

/// Model answers used to record the packaged translation transcript.
pub const APARTMENT_TRANSLATE_RESPONSES: [&str; 2] = [APARTMENT_MU_UNIQUE, "Formula: & F & p2 F & p3 F p11 ! p9"];

/// Answer to the living-room guidance prompt after the bedroom is visited.
pub const APARTMENT_GUIDANCE_RESPONSE: &str = "<call>move(1, 3)</call>\n<call>reach(3, 11)</call>\n";

pub const TRANSLATE_TRANSCRIPT: &str = "apartment_translate.json";
pub const GUIDANCE_TRANSCRIPT: &str = "apartment_guidance.json";

/// Packaged fixture files.
pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

const COLS: u32 = 12;
const ROWS: u32 = 4;
const ROOM_COLS: u32 = 4;
const DOOR_ROW: u32 = 2;

fn cell(x: u32, y: u32) -> NodeId {
    y * COLS + x
}

fn room_of(x: u32) -> u32 {
    x / ROOM_COLS
}

/// One-floor apartment: bedroom 2, living room 1 and kitchen 3 in a row,
/// joined by single doors. Objects 4 to 11 (TV 9 in the living room, oven
/// 11 in the kitchen) and floor 12.
pub fn apartment() -> SceneGraph {
    let nodes: Vec<SceneNode> = (0..ROWS)
        .flat_map(|y| {
            (0..COLS).map(move |x| SceneNode {
                id: cell(x, y),
                position: [x as f64, y as f64, 0.0],
                floor: 0,
            })
        })
        .collect();
    let mut edges = Vec::new();
    for y in 0..ROWS {
        for x in 0..COLS {
            if x + 1 < COLS && (room_of(x) == room_of(x + 1) || y == DOOR_ROW) {
                edges.push(SceneEdge {
                    u: cell(x, y),
                    v: cell(x + 1, y),
                    cost: 1.0,
                });
            }
            if y + 1 < ROWS {
                edges.push(SceneEdge {
                    u: cell(x, y),
                    v: cell(x, y + 1),
                    cost: 1.0,
                });
            }
        }
    }

    let region = |x0: u32, x1: u32, y0: u32, y1: u32| -> Vec<NodeId> {
        (y0..=y1).flat_map(|y| (x0..=x1).map(move |x| cell(x, y))).collect()
    };
    let attr = |id, name: &str, region: Vec<NodeId>, connections: Vec<u32>, parent| Attribute {
        id,
        name: name.into(),
        center: centroid(&nodes, &region),
        region,
        connections,
        parent,
    };
    // Rooms share their door cells so doors are boundary nodes of both.
    let bedroom = region(0, 3, 0, 3).into_iter().chain([cell(4, DOOR_ROW)]).collect();
    let living = region(4, 7, 0, 3)
        .into_iter()
        .chain([cell(3, DOOR_ROW), cell(8, DOOR_ROW)])
        .collect();
    let kitchen = region(8, 11, 0, 3).into_iter().chain([cell(7, DOOR_ROW)]).collect();
    let rooms = vec![
        attr(1, "living room", living, vec![2, 3], Some(12)),
        attr(2, "bedroom", bedroom, vec![1], Some(12)),
        attr(3, "kitchen", kitchen, vec![1], Some(12)),
    ];
    let objects = vec![
        attr(4, "bed", region(0, 1, 0, 0), vec![], Some(2)),
        attr(5, "lamp", region(3, 3, 0, 0), vec![], Some(2)),
        attr(6, "couch", region(5, 6, 3, 3), vec![], Some(1)),
        attr(7, "table", region(5, 5, 1, 1), vec![], Some(1)),
        attr(8, "chair", region(6, 6, 1, 1), vec![], Some(1)),
        attr(9, "TV", region(5, 6, 0, 0), vec![], Some(1)),
        attr(10, "sink", region(10, 10, 0, 0), vec![], Some(3)),
        attr(11, "oven", region(11, 11, 3, 3), vec![], Some(3)),
    ];
    let floor = vec![attr(12, "floor", region(0, COLS - 1, 0, ROWS - 1), vec![], None)];
    SceneGraph::new(
        nodes.clone(),
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
                attributes: floor,
            },
        ],
    )
    .expect("apartment fixture is valid")
}

/// Node in the middle of the bedroom.
pub const APARTMENT_BEDROOM_NODE: NodeId = COLS + 1;
/// Node in the living room away from the TV.
pub const APARTMENT_LIVING_NODE: NodeId = 2 * COLS + 5;

/// Three-floor benchmark scene.
pub fn benchmark_spec() -> GeneratorSpec {
    GeneratorSpec {
        floors: 3,
        rooms_x: 3,
        rooms_y: 2,
        room_width: 6,
        room_height: 6,
        ..GeneratorSpec::default()
    }
}

pub const BENCHMARK_SEED: u64 = 7;

pub fn benchmark_scene() -> SceneGraph {
    generate_scene(&benchmark_spec(), BENCHMARK_SEED).expect("benchmark spec is valid")
}

/// Missions on [`benchmark_scene`] spanning floors: sequencing, ordered
/// visits and a one-step avoidance.
pub const BENCHMARK_MISSIONS: [&str; 3] = ["& F p5 F p58", "F & p59 F p3", "& F p56 & F p10 ! p20"];

pub const APARTMENT_SCENE: &str = "apartment_scene.json";

/// Automaton state after leaving the bedroom from the start of the
/// apartment mission.
pub fn apartment_post_bedroom_state(scene: &SceneGraph, dfa: &Dfa) -> StateId {
    let label = scene.label(APARTMENT_BEDROOM_NODE).expect("fixture node exists");
    dfa.step(dfa.initial(), &label)
}

/// Records the packaged transcripts from the canned answers: the
/// translation of [`APARTMENT_MISSION`] and the living-room guidance
/// prompt after the bedroom.
pub fn record_apartment_transcripts() -> (Transcript, Transcript) {
    let scene = apartment();
    let mut rec = RecordTransport::new(ScriptedTransport::new(APARTMENT_TRANSLATE_RESPONSES));
    let session = translate(APARTMENT_MISSION, &scene, &mut rec, DEFAULT_MAX_ATTEMPTS).expect("scripted transport answers");
    let formula = session.formula().expect("canned answer is valid").clone();
    let translate_log = rec.into_transcript();

    let dfa = compile(&formula).expect("mission compiles");
    let q = apartment_post_bedroom_state(&scene, &dfa);
    let mut rec = RecordTransport::new(ScriptedTransport::new([APARTMENT_GUIDANCE_RESPONSE]));
    fetch_guidance(&scene, &dfa, APARTMENT_MISSION, &[(1, q)], &default_motions(), &mut rec)
        .expect("scripted transport answers");
    (translate_log, rec.into_transcript())
}
