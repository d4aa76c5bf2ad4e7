//! Benchmark harness: scenes × missions × starts × setups to CSV rows.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sgplan_core::heuristics::mock_guidance;
use sgplan_core::search::{PlanResult, SearchConfig};
use sgplan_core::{
    build_domain, compile, parse_prefix, plan, Dfa, HeuristicTable, LlmHeuristic, LtlFormula, NodeId,
    PlanError, SceneGraph, Setup,
};

use crate::clock::StdClock;

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuidanceSource {
    /// Plans from the heuristic table's least-cost label chain.
    #[default]
    Mock,
    /// No plans; LLM queues fall back to zero.
    Off,
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub scenes: Vec<(String, SceneGraph)>,
    /// Prefix formulas; parsed against each scene's alphabet.
    pub missions: Vec<String>,
    pub starts_per_mission: usize,
    pub setups: Vec<Setup>,
    pub time_budget: Option<f64>,
    pub seed: u64,
    pub jobs: usize,
    pub guidance: GuidanceSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub schema_version: u32,
    pub scene: String,
    pub mission: String,
    pub start: NodeId,
    pub setup: String,
    /// `ok`, `budget`, `infeasible` or `error`.
    pub status: String,
    pub detail: String,
    pub first_time: Option<f64>,
    pub first_cost: Option<f64>,
    pub final_cost: Option<f64>,
    pub first_over_final: Option<f64>,
    pub optimal_time: Option<f64>,
    pub optimal: bool,
    pub iterations: usize,
    pub total_expansions: u64,
    /// `iteration:queue=count|queue=count;...`
    pub expansions: String,
}

impl BenchRow {
    fn empty(scene: &str, mission: &str, start: NodeId, setup: Setup) -> Self {
        Self {
            schema_version: CSV_SCHEMA_VERSION,
            scene: scene.into(),
            mission: mission.into(),
            start,
            setup: setup.name().into(),
            status: String::new(),
            detail: String::new(),
            first_time: None,
            first_cost: None,
            final_cost: None,
            first_over_final: None,
            optimal_time: None,
            optimal: false,
            iterations: 0,
            total_expansions: 0,
            expansions: String::new(),
        }
    }

    fn fill(&mut self, r: &PlanResult) {
        self.status = if r.budget_exceeded { "budget" } else { "ok" }.into();
        let first = r.solutions.first();
        self.first_time = first.map(|s| s.time);
        self.first_cost = first.map(|s| s.cost);
        self.final_cost = Some(r.cost);
        self.first_over_final = first.map(|s| if r.cost > 0.0 { s.cost / r.cost } else { 1.0 });
        self.optimal = r.optimal;
        self.optimal_time = if r.optimal {
            r.iterations.last().map(|it| it.time)
        } else {
            None
        };
        self.iterations = r.iterations.len();
        self.total_expansions = r.total_expansions();
        self.expansions = r
            .iterations
            .iter()
            .enumerate()
            .map(|(i, it)| {
                let qs: Vec<String> = it.expansions.iter().map(|e| format!("{}={}", e.name, e.count)).collect();
                format!("{i}:{}", qs.join("|"))
            })
            .collect::<Vec<_>>()
            .join(";");
    }
}

struct Prepared {
    formula: LtlFormula,
    dfa: Dfa,
    table: HeuristicTable,
    llm: Option<LlmHeuristic>,
}

fn prepare(scene: &SceneGraph, mission: &str, guidance: GuidanceSource) -> Result<Prepared, String> {
    let formula = parse_prefix(mission, &scene.alphabet()).map_err(|e| e.to_string())?;
    let dfa = compile(&formula).map_err(|e| e.to_string())?;
    let table = HeuristicTable::build(scene, &dfa);
    let llm = match guidance {
        GuidanceSource::Mock => {
            let g = mock_guidance(scene, &dfa, &table);
            Some(LlmHeuristic::new(scene, &g).map_err(|e| e.to_string())?)
        }
        GuidanceSource::Off => None,
    };
    Ok(Prepared {
        formula,
        dfa,
        table,
        llm,
    })
}

/// Start nodes for one (scene, mission) pair, deterministic in `seed`.
pub fn sample_starts(scene: &SceneGraph, count: usize, seed: u64, scene_idx: usize, mission_idx: usize) -> Vec<NodeId> {
    let mix = seed ^ ((scene_idx as u64) << 32) ^ (mission_idx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut rng = ChaCha8Rng::seed_from_u64(mix);
    let n = scene.num_nodes();
    let mut starts: Vec<NodeId> = sample(&mut rng, n, count.min(n)).into_iter().map(|i| i as NodeId).collect();
    // Repeat when more starts are requested than nodes exist.
    while starts.len() < count {
        starts.push(starts[starts.len() % n]);
    }
    starts
}

fn run_row(scene: &SceneGraph, prepared: &Prepared, start: NodeId, setup: Setup, budget: Option<f64>, row: &mut BenchRow) {
    let domain = match build_domain(scene, &prepared.dfa, start) {
        Ok(d) => d,
        Err(e) => {
            row.status = "error".into();
            row.detail = e.to_string();
            return;
        }
    };
    let cfg = SearchConfig {
        time_budget: budget,
        ..SearchConfig::for_setup(setup, &domain)
    };
    let clock = StdClock::new();
    match plan(&domain, &prepared.table, prepared.llm.as_ref(), &cfg, &clock) {
        Ok(r) => row.fill(&r),
        Err(PlanError::Infeasible(reason)) => {
            row.status = "infeasible".into();
            row.detail = format!("{reason:?}");
        }
        Err(e) => {
            row.status = if matches!(e, PlanError::TimeBudgetExceeded) { "budget" } else { "error" }.into();
            row.detail = e.to_string();
        }
    }
}

/// Runs every row. Row failures are recorded and the run continues; rows
/// come back in cross-product order whatever `jobs` is.
pub fn run_bench(spec: &BenchSpec) -> Vec<BenchRow> {
    let mut prepared = Vec::new();
    let mut tasks = Vec::new();
    for (si, (name, scene)) in spec.scenes.iter().enumerate() {
        for (mi, mission) in spec.missions.iter().enumerate() {
            let p = prepare(scene, mission, spec.guidance);
            let pi = prepared.len();
            for start in sample_starts(scene, spec.starts_per_mission, spec.seed, si, mi) {
                for &setup in &spec.setups {
                    tasks.push((si, pi, start, setup, BenchRow::empty(name, mission, start, setup)));
                }
            }
            prepared.push(p);
        }
    }

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<BenchRow>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some((si, pi, start, setup, row)) = tasks.get(i) else {
            break;
        };
        let mut row = row.clone();
        match &prepared[*pi] {
            Ok(p) => {
                row.mission = p.formula.to_prefix();
                run_row(&spec.scenes[*si].1, p, *start, *setup, spec.time_budget, &mut row);
            }
            Err(e) => {
                row.status = "error".into();
                row.detail = e.clone();
            }
        }
        *slots[i].lock().expect("row slot") = Some(row);
    };
    std::thread::scope(|s| {
        for _ in 0..spec.jobs.max(1) {
            s.spawn(worker);
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("row slot").expect("every row ran"))
        .collect()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const CSV_HEADER: [&str; 16] = [
    "schema_version",
    "scene",
    "mission",
    "start",
    "setup",
    "status",
    "detail",
    "first_time",
    "first_cost",
    "final_cost",
    "first_over_final",
    "optimal_time",
    "optimal",
    "iterations",
    "total_expansions",
    "expansions",
];
