use sgplan::fixtures::apartment;
use sgplan::io::*;
use sgplan_core::generate::{generate_scene, GeneratorSpec};
use sgplan_core::heuristics::mock_guidance;
use sgplan_core::search::NoClock;
use sgplan_core::{build_domain, compile, parse_prefix, plan, HeuristicTable, SearchConfig, Setup};

fn two_floor() -> sgplan_core::SceneGraph {
    generate_scene(
        &GeneratorSpec {
            floors: 2,
            ..GeneratorSpec::default()
        },
        5,
    )
    .unwrap()
}

#[test]
fn scene_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for scene in [apartment(), two_floor()] {
        let path = dir.path().join("scene.json");
        save_scene(&scene, &path).unwrap();
        let back = load_scene(&path).unwrap();
        assert_eq!(back.nodes(), scene.nodes());
        assert_eq!(back.edges(), scene.edges());
        assert_eq!(back.levels(), scene.levels());
        assert_eq!(scene_to_json(&back), scene_to_json(&scene));
    }
}

#[test]
fn scene_levels_are_regrouped_in_order() {
    // Attributes listed floor first still load with objects on the lowest level.
    let mut file = SceneFile::from_scene(&apartment());
    file.attributes.reverse();
    let scene = file.into_scene().unwrap();
    let kinds: Vec<&str> = scene.levels().iter().map(|l| l.kind.as_str()).collect();
    assert_eq!(kinds, ["object", "room", "floor"]);
}

#[test]
fn invalid_scene_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut file = SceneFile::from_scene(&apartment());
    file.edges[0].cost = -1.0;
    let path = dir.path().join("bad.json");
    std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
    assert!(matches!(load_scene(&path), Err(IoError::Scene { .. })));
    std::fs::write(&path, "{").unwrap();
    assert!(matches!(load_scene(&path), Err(IoError::Json { .. })));
}

#[test]
fn formula_files() {
    let dir = tempfile::tempdir().unwrap();
    let scene = apartment();
    let ab = scene.alphabet();
    let path = dir.path().join("f.ltl");
    let f = parse_prefix("& F oven_11 ! p9", &ab).unwrap();
    save_formula(&path, &f, Some("reach the oven\nnot from the TV")).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, "# reach the oven\n# not from the TV\n& F p11 ! p9\n");
    assert_eq!(load_formulas(&path, &ab).unwrap(), [f]);

    std::fs::write(&path, "F p2 # bedroom\n\n# comment\nF p99\n").unwrap();
    match load_formulas(&path, &ab) {
        Err(IoError::Formula { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn heuristic_cache_round_trip_and_staleness() {
    let dir = tempfile::tempdir().unwrap();
    let scene = two_floor();
    let f = parse_prefix("& F p3 F p5", &scene.alphabet()).unwrap();
    let dfa = compile(&f).unwrap();
    let table = HeuristicTable::build(&scene, &dfa);
    let key = CacheKey::new(&scene, &f);
    let path = dir.path().join("h.json");
    save_heuristics(&path, &key, &table).unwrap();
    let back = load_heuristics(&path, &key).unwrap().expect("key matches");
    assert_eq!(back.to_parts(), table.to_parts());
    for node in 0..scene.num_nodes() as u32 {
        for q in 0..dfa.num_states() {
            let x = sgplan_core::ProductState { node, q };
            let (a, b) = (table.h_ltl(x), back.h_ltl(x));
            assert!(a == b, "h differs at {x:?}: {a} vs {b}");
        }
    }
    let other = CacheKey::new(&scene, &parse_prefix("F p3", &scene.alphabet()).unwrap());
    assert!(load_heuristics(&path, &other).unwrap().is_none());
}

#[test]
fn guidance_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scene = apartment();
    let f = parse_prefix("& F & p2 F & p3 F p11 ! p9", &scene.alphabet()).unwrap();
    let dfa = compile(&f).unwrap();
    let g = mock_guidance(&scene, &dfa, &HeuristicTable::build(&scene, &dfa));
    assert!(!g.plans.is_empty());
    let path = dir.path().join("g.json");
    save_guidance(&path, &f, &g).unwrap();
    let (formula, back) = load_guidance(&path).unwrap();
    assert_eq!(formula, f.to_prefix());
    assert_eq!(back, g);

    let text = std::fs::read_to_string(&path).unwrap().replace("move(", "move[");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(load_guidance(&path), Err(IoError::Format { .. })));
}

#[test]
fn plan_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scene = apartment();
    let f = parse_prefix("& F & p2 F & p3 F p11 ! p9", &scene.alphabet()).unwrap();
    let dfa = compile(&f).unwrap();
    let domain = build_domain(&scene, &dfa, 29).unwrap();
    let table = HeuristicTable::build(&scene, &dfa);
    let r = plan(&domain, &table, None, &SearchConfig::for_setup(Setup::NoLlm, &domain), &NoClock).unwrap();
    let pf = PlanFile::new(&scene, &f, 29, Setup::NoLlm, &r);
    let path = dir.path().join("p.json");
    pf.save(&path).unwrap();
    let back = PlanFile::load(&path).unwrap();
    assert_eq!(back.path, r.path);
    assert_eq!(back.cost, r.cost);
    assert_eq!(back.setup, "NO-LLM");
    assert_eq!(back.polyline.len(), r.path.len());
    assert_eq!(back.word.len(), r.path.len());
    assert!(back.optimal);
    assert_eq!(back.iterations.len(), r.iterations.len());

    let text = std::fs::read_to_string(&path).unwrap().replace("\"version\": 1", "\"version\": 9");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(PlanFile::load(&path), Err(IoError::Format { .. })));
}
