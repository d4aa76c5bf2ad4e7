use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sgplan::bench::{run_bench, write_csv, BenchSpec, GuidanceSource};
use sgplan::io::{self, CacheKey, PlanFile};
use sgplan::llm::{
    default_motions, fetch_guidance, guidance_keys, translate, LiveConfig, LiveTransport, RecordTransport,
    ReplayTransport, Transport, TranslationOutcome, DEFAULT_MAX_ATTEMPTS,
};
use sgplan::StdClock;
use sgplan_core::domain::DomainError;
use sgplan_core::generate::{generate_scene, GeneratorSpec, StairPlacement};
use sgplan_core::heuristics::mock_guidance;
use sgplan_core::scene::SceneError;
use sgplan_core::search::PlanResult;
use sgplan_core::{
    build_domain, compile, parse_prefix, plan, Dfa, HeuristicTable, LlmHeuristic, LtlFormula, PlanError,
    SceneGraph, SearchConfig, Setup,
};

#[derive(Parser)]
#[command(name = "sgplan", version, about = "LTL mission planning on 3D scene graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-floor scene.
    Gen(GenArgs),
    /// Print the attribute hierarchy used in prompts.
    Hierarchy {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Translate a natural-language mission into a formula file.
    Translate(TranslateArgs),
    /// Fetch guidance plans for a formula.
    Guidance(GuidanceArgs),
    /// Plan a path for a formula.
    Plan(PlanArgs),
    /// Run setups over scenes, missions and start nodes; write CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    floors: u32,
    #[arg(long, default_value_t = 2)]
    rooms_x: u32,
    #[arg(long, default_value_t = 2)]
    rooms_y: u32,
    #[arg(long, default_value_t = 5)]
    room_width: u32,
    #[arg(long, default_value_t = 5)]
    room_height: u32,
    #[arg(long, default_value_t = 2)]
    objects_per_room: u32,
    #[arg(long, default_value_t = 1.0)]
    cell_pitch: f64,
    #[arg(long, default_value_t = 4.0)]
    floor_height: f64,
    #[arg(long, value_enum, default_value_t = Stairs::Corner)]
    stairs: Stairs,
    #[arg(long, default_value_t = 0.3)]
    extra_door_probability: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stairs {
    Corner,
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Replay,
    Record,
    Live,
}

#[derive(Args)]
struct TransportArgs {
    /// Replay and record need `--transcript`; live and record read the
    /// SGPLAN_LLM_* environment variables.
    #[arg(long, value_enum, default_value_t = Mode::Replay)]
    transport: Mode,
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    mission: Option<String>,
    /// Use this prefix formula and skip the language model.
    #[arg(long)]
    formula: Option<String>,
    #[command(flatten)]
    transport: TransportArgs,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    max_attempts: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the automaton as text.
    #[arg(long)]
    automaton: Option<PathBuf>,
}

#[derive(Args)]
struct GuidanceArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    formula: PathBuf,
    /// Mission text shown in the prompts; defaults to the formula.
    #[arg(long)]
    mission: Option<String>,
    /// Build plans from the heuristic table instead of a language model.
    #[arg(long)]
    mock: bool,
    #[command(flatten)]
    transport: TransportArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    formula: PathBuf,
    #[arg(long)]
    start: u32,
    #[arg(long, default_value = "ALL")]
    setup: String,
    /// Seconds.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    w1: f64,
    #[arg(long, default_value_t = 5.0)]
    w2: f64,
    #[arg(long, default_value_t = 0.5)]
    decay: f64,
    /// Guidance cache file.
    #[arg(long)]
    guidance: Option<PathBuf>,
    /// Use table-derived guidance when no cache is given.
    #[arg(long)]
    mock_guidance: bool,
    /// Heuristic cache file; written when missing or stale.
    #[arg(long)]
    heuristic_cache: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long = "scene", required = true)]
    scenes: Vec<PathBuf>,
    /// Formula files; every formula line is one mission.
    #[arg(long = "missions", required = true)]
    missions: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    starts: usize,
    /// Comma-separated setup names; all setups when omitted.
    #[arg(long, value_delimiter = ',')]
    setups: Vec<String>,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum, default_value_t = BenchGuidance::Mock)]
    guidance: BenchGuidance,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchGuidance {
    Mock,
    Off,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Self::new(1, e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Hierarchy { scene, out } => cmd_hierarchy(&scene, out.as_deref()),
        Command::Translate(a) => cmd_translate(a),
        Command::Guidance(a) => cmd_guidance(a),
        Command::Plan(a) => cmd_plan(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let spec = GeneratorSpec {
        floors: a.floors,
        rooms_x: a.rooms_x,
        rooms_y: a.rooms_y,
        room_width: a.room_width,
        room_height: a.room_height,
        objects_per_room: a.objects_per_room,
        cell_pitch: a.cell_pitch,
        floor_height: a.floor_height,
        stairs: match a.stairs {
            Stairs::Corner => StairPlacement::Corner,
            Stairs::Random => StairPlacement::Random,
        },
        extra_door_probability: a.extra_door_probability,
    };
    let scene = generate_scene(&spec, a.seed)?;
    io::save_scene(&scene, &a.out)?;
    println!(
        "{}: {} nodes, {} edges, {} attributes",
        a.out.display(),
        scene.num_nodes(),
        scene.edges().len(),
        scene.attributes().count()
    );
    Ok(())
}

fn cmd_hierarchy(scene: &Path, out: Option<&Path>) -> CliResult {
    let text = io::load_scene(scene)?.attribute_hierarchy()?;
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::new(1, format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

enum Client {
    Replay(ReplayTransport),
    Record(RecordTransport<LiveTransport>, PathBuf),
    Live(LiveTransport),
}

impl Client {
    fn open(a: &TransportArgs) -> Result<Self, Failure> {
        let need_path = || {
            a.transcript
                .clone()
                .ok_or_else(|| Failure::new(1, "this transport needs --transcript"))
        };
        Ok(match a.transport {
            Mode::Replay => Client::Replay(ReplayTransport::open(&need_path()?)?),
            Mode::Record => {
                let path = need_path()?;
                Client::Record(RecordTransport::new(LiveTransport::new(LiveConfig::from_env()?)?), path)
            }
            Mode::Live => Client::Live(LiveTransport::new(LiveConfig::from_env()?)?),
        })
    }

    fn transport(&mut self) -> &mut dyn Transport {
        match self {
            Client::Replay(t) => t,
            Client::Record(t, _) => t,
            Client::Live(t) => t,
        }
    }

    /// Saves the transcript in record mode.
    fn finish(self) -> CliResult {
        if let Client::Record(t, path) = self {
            t.into_transcript().save(&path)?;
        }
        Ok(())
    }
}

fn cmd_translate(a: TranslateArgs) -> CliResult {
    let scene = io::load_scene(&a.scene)?;
    let (formula, comment) = match (&a.formula, &a.mission) {
        (Some(text), _) => {
            let f = parse_prefix(text, &scene.alphabet())?;
            let verdict = sgplan_core::check_cosafe(&f);
            if let Some(d) = verdict.diagnostic(&f) {
                return Err(Failure::new(2, d));
            }
            (f, None)
        }
        (None, Some(mission)) => {
            let mut client = Client::open(&a.transport)?;
            let session = translate(mission, &scene, client.transport(), a.max_attempts)?;
            client.finish()?;
            println!("unique ids: {}", session.mu_unique);
            let ids: Vec<String> = session.mu_regex.iter().map(|e| format!("{} -> {}", e.mention, e.token())).collect();
            println!("propositions: {}", ids.join(", "));
            match session.outcome {
                TranslationOutcome::Translated(f) => (f, Some(mission.clone())),
                TranslationOutcome::NeedsHumanRephrase { diagnostic } => {
                    return Err(Failure::new(
                        2,
                        format!(
                            "no valid formula after {} attempt(s), please rephrase the mission: {diagnostic}",
                            session.attempts
                        ),
                    ));
                }
            }
        }
        (None, None) => return Err(Failure::new(1, "give --mission or --formula")),
    };
    io::save_formula(&a.out, &formula, comment.as_deref())?;
    println!("formula: {}", formula.to_prefix());
    if let Some(path) = &a.automaton {
        let dfa = compile(&formula)?;
        fs::write(path, dfa.export_text()).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn load_formula(scene: &SceneGraph, path: &Path) -> Result<LtlFormula, Failure> {
    io::load_formulas(path, &scene.alphabet())?
        .into_iter()
        .next()
        .ok_or_else(|| Failure::new(1, format!("{}: no formula", path.display())))
}

fn cmd_guidance(a: GuidanceArgs) -> CliResult {
    let scene = io::load_scene(&a.scene)?;
    let formula = load_formula(&scene, &a.formula)?;
    let dfa = compile(&formula)?;
    let guidance = if a.mock {
        mock_guidance(&scene, &dfa, &HeuristicTable::build(&scene, &dfa))
    } else {
        let mission = a.mission.clone().unwrap_or_else(|| formula.to_prefix());
        let keys = guidance_keys(&scene, &dfa);
        let mut client = Client::open(&a.transport)?;
        let fetched = fetch_guidance(&scene, &dfa, &mission, &keys, &default_motions(), client.transport())?;
        client.finish()?;
        for w in &fetched.warnings {
            eprintln!("warning: {w}");
        }
        fetched.guidance
    };
    io::save_guidance(&a.out, &formula, &guidance)?;
    println!("{}: {} plans", a.out.display(), guidance.plans.len());
    Ok(())
}

fn heuristics(scene: &SceneGraph, formula: &LtlFormula, dfa: &Dfa, cache: Option<&Path>) -> Result<HeuristicTable, Failure> {
    let key = CacheKey::new(scene, formula);
    if let Some(path) = cache.filter(|p| p.exists()) {
        match io::load_heuristics(path, &key) {
            Ok(Some(t)) => return Ok(t),
            Ok(None) => eprintln!("warning: {} was built for another scene or formula; rebuilding", path.display()),
            Err(e) => eprintln!("warning: ignoring heuristic cache: {e}"),
        }
    }
    let table = HeuristicTable::build(scene, dfa);
    if let Some(path) = cache {
        io::save_heuristics(path, &key, &table)?;
    }
    Ok(table)
}

fn cmd_plan(a: PlanArgs) -> CliResult {
    let scene = io::load_scene(&a.scene)?;
    let setup = Setup::parse(&a.setup).ok_or_else(|| Failure::new(1, format!("unknown setup `{}`", a.setup)))?;
    let formula = load_formula(&scene, &a.formula)?;
    let dfa = compile(&formula)?;
    let domain = build_domain(&scene, &dfa, a.start).map_err(|e| match e {
        DomainError::Scene(SceneError::UnknownNode(n)) => Failure::new(1, format!("unknown node {n}")),
        other => Failure::from(other),
    })?;
    for w in domain.warnings() {
        eprintln!("warning: {w}");
    }
    let table = heuristics(&scene, &formula, &dfa, a.heuristic_cache.as_deref())?;

    let guidance = match (&a.guidance, a.mock_guidance) {
        (Some(path), _) => {
            let (for_formula, g) = io::load_guidance(path)?;
            if for_formula != formula.to_prefix() {
                eprintln!("warning: guidance was fetched for `{for_formula}`");
            }
            Some(g)
        }
        (None, true) => Some(mock_guidance(&scene, &dfa, &table)),
        (None, false) => None,
    };
    if setup.uses_llm() && guidance.is_none() {
        eprintln!("warning: no guidance for setup {}; LLM queues fall back to 0", setup.name());
    }
    let llm = guidance.map(|g| LlmHeuristic::new(&scene, &g)).transpose()?;

    let cfg = SearchConfig {
        w1: a.w1,
        w2: a.w2,
        decay: a.decay,
        time_budget: a.budget,
        ..SearchConfig::for_setup(setup, &domain)
    };
    let result = match plan(&domain, &table, llm.as_ref(), &cfg, &StdClock::new()) {
        Ok(r) => r,
        Err(PlanError::Infeasible(reason)) => {
            return Err(Failure::new(3, format!("mission infeasible: {}", describe(reason))));
        }
        Err(e) => return Err(e.into()),
    };
    print_iterations(&result);
    PlanFile::new(&scene, &formula, a.start, setup, &result).save(&a.out)?;
    println!(
        "cost {} over {} nodes, optimal={}{}",
        result.cost,
        result.path.len(),
        result.optimal,
        if result.budget_exceeded { " (budget exceeded)" } else { "" }
    );
    Ok(())
}

fn describe(reason: sgplan_core::search::InfeasibleReason) -> &'static str {
    use sgplan_core::search::InfeasibleReason::*;
    match reason {
        NoAcceptingAutomatonPath => "the formula has no accepting run",
        AcceptingLabelsUnreachable => "no accepting label sequence is reachable in the scene",
    }
}

fn print_iterations(r: &PlanResult) {
    println!("{:>4} {:>7} {:>7} {:>9} {:>10} {:>10}", "iter", "w1", "w2", "time", "cost", "expanded");
    for (i, it) in r.iterations.iter().enumerate() {
        let cost = it.cost.map_or("-".to_owned(), |c| format!("{c:.3}"));
        println!(
            "{i:>4} {:>7.3} {:>7.3} {:>9.4} {cost:>10} {:>10}",
            it.w1,
            it.w2,
            it.time,
            it.total_expansions()
        );
    }
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let mut scenes = Vec::new();
    for p in &a.scenes {
        scenes.push((p.display().to_string(), io::load_scene(p)?));
    }
    let mut missions = Vec::new();
    for p in &a.missions {
        let text = fs::read_to_string(p).map_err(|e| Failure::new(1, format!("{}: {e}", p.display())))?;
        missions.extend(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_owned),
        );
    }
    let setups = if a.setups.is_empty() {
        Setup::ALL_SETUPS.to_vec()
    } else {
        a.setups
            .iter()
            .map(|s| Setup::parse(s).ok_or_else(|| Failure::new(1, format!("unknown setup `{s}`"))))
            .collect::<Result<_, _>>()?
    };
    let spec = BenchSpec {
        scenes,
        missions,
        starts_per_mission: a.starts,
        setups,
        time_budget: a.budget,
        seed: a.seed,
        jobs: a.jobs,
        guidance: match a.guidance {
            BenchGuidance::Mock => GuidanceSource::Mock,
            BenchGuidance::Off => GuidanceSource::Off,
        },
    };
    let rows = run_bench(&spec);
    let file = fs::File::create(&a.out).map_err(|e| Failure::new(1, format!("{}: {e}", a.out.display())))?;
    write_csv(&rows, file)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    println!("{}: {} rows, {failed} not ok", a.out.display(), rows.len());
    Ok(())
}
