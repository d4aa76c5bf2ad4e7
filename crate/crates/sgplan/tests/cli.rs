use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sgplan::fixtures::{self, fixture_path};
use sgplan::io::{load_scene, PlanFile};
use sgplan::llm::{RecordTransport, ScriptedTransport};

fn sgplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgplan"))
        .args(args)
        .env_remove("SGPLAN_LLM_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, floors: u32, seed: u64) -> PathBuf {
    let out = dir.join(name);
    let o = sgplan(&["gen", "--floors", &floors.to_string(), "--seed", &seed.to_string(), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn gen_and_hierarchy() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen(dir.path(), "a.json", 2, 1);
    let again = gen(dir.path(), "b.json", 2, 1);
    assert_eq!(std::fs::read(&scene).unwrap(), std::fs::read(&again).unwrap(), "same seed, same scene");
    let o = sgplan(&["hierarchy", "--scene", s(&scene)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text, load_scene(&scene).unwrap().attribute_hierarchy().unwrap());
}

#[test]
fn translate_replays_packaged_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mission.ltl");
    let dfa_out = dir.path().join("mission.dfa");
    let o = sgplan(&[
        "translate",
        "--scene",
        s(&fixture_path(fixtures::APARTMENT_SCENE)),
        "--mission",
        fixtures::APARTMENT_MISSION,
        "--transcript",
        s(&fixture_path(fixtures::TRANSLATE_TRANSCRIPT)),
        "--out",
        s(&out),
        "--automaton",
        s(&dfa_out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l == fixtures::APARTMENT_FORMULA), "{text}");
    assert!(!std::fs::read_to_string(&dfa_out).unwrap().is_empty());
}

#[test]
fn translate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let scene = fixture_path(fixtures::APARTMENT_SCENE);
    let out = dir.path().join("m.ltl");
    let missing = dir.path().join("missing.json");
    let o = sgplan(&[
        "translate", "--scene", s(&scene), "--mission", "go to the kitchen", "--transcript", s(&missing), "--out", s(&out),
    ]);
    assert_eq!(code(&o), 1);
    let o = sgplan(&["translate", "--scene", s(&scene), "--mission", "go to the kitchen", "--out", s(&out)]);
    assert_eq!(code(&o), 1, "replay without a transcript");
    let o = sgplan(&[
        "translate", "--scene", s(&scene), "--mission", "x", "--transport", "live", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 1, "live without configuration");

    // A transcript whose answers never pass the checker.
    let mission = "go to the kitchen";
    let sc = fixtures::apartment();
    let mut rec = RecordTransport::new(ScriptedTransport::new(["go to the kitchen (3)", "G p3", "G p3"]));
    sgplan::llm::translate(mission, &sc, &mut rec, 2).unwrap();
    let t = dir.path().join("bad.json");
    rec.into_transcript().save(&t).unwrap();
    let o = sgplan(&[
        "translate", "--scene", s(&scene), "--mission", mission, "--transcript", s(&t), "--max-attempts", "2", "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("rephrase"));
    assert!(!out.exists());

    let o = sgplan(&["translate", "--scene", s(&scene), "--formula", "F oven_11", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "F p11\n");
}

fn oven_formula(scene: &Path, dir: &Path) -> PathBuf {
    let g = load_scene(scene).unwrap();
    let oven = g.attributes().find(|a| a.name == "oven").expect("generated scene has an oven");
    let path = dir.join("oven.ltl");
    std::fs::write(&path, format!("F {}\n", oven.alias())).unwrap();
    path
}

#[test]
fn plan_writes_an_optimal_plan() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen(dir.path(), "s.json", 1, 0);
    let formula = oven_formula(&scene, dir.path());
    let out = dir.path().join("plan.json");
    let cache = dir.path().join("h.json");
    for _ in 0..2 {
        let o = sgplan(&[
            "plan", "--scene", s(&scene), "--formula", s(&formula), "--start", "0", "--setup", "A*", "--heuristic-cache",
            s(&cache), "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("iter"));
    }
    assert!(cache.exists());
    let p = PlanFile::load(&out).unwrap();
    assert!(p.optimal);
    assert_eq!(p.setup, "A*");
    assert_eq!(p.path[0], 0);
}

#[test]
fn plan_all_without_guidance_warns() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen(dir.path(), "s.json", 1, 0);
    let formula = oven_formula(&scene, dir.path());
    let out = dir.path().join("plan.json");
    let o = sgplan(&[
        "plan", "--scene", s(&scene), "--formula", s(&formula), "--start", "3", "--setup", "ALL", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("no guidance"));
    assert!(PlanFile::load(&out).unwrap().optimal);
}

#[test]
fn plan_uses_guidance_file() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen(dir.path(), "s.json", 2, 0);
    let formula = oven_formula(&scene, dir.path());
    let guidance = dir.path().join("g.json");
    let o = sgplan(&["guidance", "--scene", s(&scene), "--formula", s(&formula), "--mock", "--out", s(&guidance)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("plan.json");
    let o = sgplan(&[
        "plan", "--scene", s(&scene), "--formula", s(&formula), "--start", "0", "--setup", "room", "--guidance",
        s(&guidance), "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!stderr(&o).contains("warning"));
}

#[test]
fn guidance_replays_packaged_transcript() {
    // The packaged guidance transcript covers one key only, so the full
    // key set runs past its end.
    let dir = tempfile::tempdir().unwrap();
    let formula = dir.path().join("m.ltl");
    std::fs::write(&formula, format!("{}\n", fixtures::APARTMENT_FORMULA)).unwrap();
    let o = sgplan(&[
        "guidance",
        "--scene",
        s(&fixture_path(fixtures::APARTMENT_SCENE)),
        "--formula",
        s(&formula),
        "--mission",
        fixtures::APARTMENT_MISSION,
        "--transcript",
        s(&fixture_path(fixtures::GUIDANCE_TRANSCRIPT)),
        "--out",
        s(&dir.path().join("g.json")),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("replay"), "{}", stderr(&o));
}

#[test]
fn plan_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen(dir.path(), "s.json", 1, 0);
    let formula = oven_formula(&scene, dir.path());
    let out = dir.path().join("plan.json");
    let o = sgplan(&[
        "plan", "--scene", s(&scene), "--formula", s(&formula), "--start", "100000", "--setup", "A*", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown node 100000"), "{}", stderr(&o));

    let never = dir.path().join("never.ltl");
    std::fs::write(&never, "F & p1 ! p1\n").unwrap();
    let o = sgplan(&[
        "plan", "--scene", s(&scene), "--formula", s(&never), "--start", "0", "--setup", "A*", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("infeasible"));

    let o = sgplan(&[
        "plan", "--scene", s(&scene), "--formula", s(&formula), "--start", "0", "--setup", "BEST", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn bench_row_count_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.json", 1, 1);
    let b = gen(dir.path(), "b.json", 1, 2);
    let missions = dir.path().join("missions.ltl");
    std::fs::write(&missions, "# two missions\nF p2\n& F p3 F p4\n").unwrap();
    let out = dir.path().join("bench.csv");
    let o = sgplan(&[
        "bench", "--scene", s(&a), "--scene", s(&b), "--missions", s(&missions), "--starts", "2", "--setups",
        "A*,NO-LLM,ALL", "--seed", "3", "--jobs", "3", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(header, sgplan::bench::CSV_HEADER);
    let rows: Vec<sgplan::bench::BenchRow> = rdr.deserialize().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 24);
    assert!(rows.iter().all(|r| r.schema_version == sgplan::bench::CSV_SCHEMA_VERSION));
    assert!(rows.iter().all(|r| r.status == "ok"), "{rows:?}");
    // Setups agree on the optimal cost of each (scene, mission, start).
    for group in rows.chunks(3) {
        assert!(group.iter().all(|r| r.final_cost == group[0].final_cost && r.start == group[0].start));
    }

    // Same seed, same starts, whatever the job count.
    let out1 = dir.path().join("bench1.csv");
    let o = sgplan(&[
        "bench", "--scene", s(&a), "--scene", s(&b), "--missions", s(&missions), "--starts", "2", "--setups",
        "A*,NO-LLM,ALL", "--seed", "3", "--out", s(&out1),
    ]);
    assert_eq!(code(&o), 0);
    let starts = |p: &Path| -> Vec<u32> {
        csv::Reader::from_path(p)
            .unwrap()
            .deserialize::<sgplan::bench::BenchRow>()
            .map(|r| r.unwrap().start)
            .collect()
    };
    assert_eq!(starts(&out), starts(&out1));
}

#[test]
fn bench_records_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.json", 1, 1);
    let missions = dir.path().join("missions.ltl");
    std::fs::write(&missions, "F p9999\nF p2\n").unwrap();
    let out = dir.path().join("bench.csv");
    let o = sgplan(&[
        "bench", "--scene", s(&a), "--missions", s(&missions), "--starts", "1", "--setups", "A*", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows: Vec<sgplan::bench::BenchRow> =
        csv::Reader::from_path(&out).unwrap().deserialize().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].status, "error");
    assert_eq!(rows[1].status, "ok");
}
