//! Scene, formula, plan and cache files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sgplan_core::heuristics::{FunctionCall, HeuristicParts, LlmGuidance, NextLabel};
use sgplan_core::ltl::{parse_formula_lines, ParseError};
use sgplan_core::scene::{Attribute, AttributeId, AttributeSet, LevelKind, SceneEdge, SceneError, SceneNode};
use sgplan_core::search::{PlanResult, Setup};
use sgplan_core::{Alphabet, HeuristicTable, LtlFormula, SceneGraph};
use thiserror::Error;

pub const PLAN_FORMAT: &str = "sgplan-plan";
pub const HEURISTIC_FORMAT: &str = "sgplan-heuristics";
pub const GUIDANCE_FORMAT: &str = "sgplan-guidance";
pub const FILE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Scene { path: PathBuf, source: SceneError },
    #[error("{path}:{line}: {source}")]
    Formula {
        path: PathBuf,
        line: usize,
        source: ParseError,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|source| IoError::Json {
        path: path.to_owned(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u32,
    pub xyz: [f64; 3],
    pub floor: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: u32,
    pub v: u32,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributeRecord {
    pub id: AttributeId,
    pub name: String,
    pub kind: String,
    pub node_ids: Vec<u32>,
    pub center: [f64; 3],
    #[serde(default)]
    pub connections: Vec<AttributeId>,
    #[serde(default)]
    pub parent: Option<AttributeId>,
}

/// Canonical scene document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    pub attributes: Vec<AttributeRecord>,
}

impl SceneFile {
    pub fn from_scene(scene: &SceneGraph) -> Self {
        Self {
            nodes: scene
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    xyz: n.position,
                    floor: n.floor,
                })
                .collect(),
            edges: scene
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    u: e.u,
                    v: e.v,
                    cost: e.cost,
                })
                .collect(),
            attributes: scene
                .levels()
                .iter()
                .flat_map(|set| {
                    set.attributes.iter().map(|a| AttributeRecord {
                        id: a.id,
                        name: a.name.clone(),
                        kind: set.kind.as_str().to_owned(),
                        node_ids: a.region.clone(),
                        center: a.center,
                        connections: a.connections.clone(),
                        parent: a.parent,
                    })
                })
                .collect(),
        }
    }

    pub fn into_scene(self) -> Result<SceneGraph, SceneError> {
        let mut nodes: Vec<SceneNode> = self
            .nodes
            .into_iter()
            .map(|n| SceneNode {
                id: n.id,
                position: n.xyz,
                floor: n.floor,
            })
            .collect();
        nodes.sort_by_key(|n| n.id);
        let edges = self
            .edges
            .into_iter()
            .map(|e| SceneEdge {
                u: e.u,
                v: e.v,
                cost: e.cost,
            })
            .collect();
        let mut levels: Vec<AttributeSet> = Vec::new();
        for a in self.attributes {
            let kind = LevelKind::parse(&a.kind);
            let mut region = a.node_ids;
            region.sort_unstable();
            region.dedup();
            let attr = Attribute {
                id: a.id,
                name: a.name,
                region,
                center: a.center,
                connections: a.connections,
                parent: a.parent,
            };
            match levels.iter_mut().find(|l| l.kind == kind) {
                Some(set) => set.attributes.push(attr),
                None => levels.push(AttributeSet {
                    kind,
                    attributes: vec![attr],
                }),
            }
        }
        levels.sort_by(|a, b| a.kind.cmp(&b.kind));
        SceneGraph::new(nodes, edges, levels)
    }
}

pub fn load_scene(path: &Path) -> Result<SceneGraph, IoError> {
    let file: SceneFile = from_json(path, &read(path)?)?;
    file.into_scene().map_err(|source| IoError::Scene {
        path: path.to_owned(),
        source,
    })
}

pub fn scene_to_json(scene: &SceneGraph) -> String {
    to_json(&SceneFile::from_scene(scene))
}

pub fn save_scene(scene: &SceneGraph, path: &Path) -> Result<(), IoError> {
    write(path, &scene_to_json(scene))
}

/// One prefix formula per line; `#` starts a comment.
pub fn load_formulas(path: &Path, alphabet: &Alphabet) -> Result<Vec<LtlFormula>, IoError> {
    parse_formula_lines(&read(path)?, alphabet).map_err(|(line, source)| IoError::Formula {
        path: path.to_owned(),
        line,
        source,
    })
}

pub fn save_formula(path: &Path, formula: &LtlFormula, comment: Option<&str>) -> Result<(), IoError> {
    let mut text = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            text.push_str("# ");
            text.push_str(line);
            text.push('\n');
        }
    }
    text.push_str(&formula.to_prefix());
    text.push('\n');
    write(path, &text)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub w1: f64,
    pub w2: f64,
    pub time: f64,
    pub cost: Option<f64>,
    /// Queue name to expansion count, in queue order.
    pub expansions: Vec<(String, u64)>,
    pub completed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub iteration: usize,
    pub time: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub format: String,
    pub version: u32,
    pub setup: String,
    pub formula: String,
    pub start: u32,
    pub path: Vec<u32>,
    pub polyline: Vec<[f64; 3]>,
    pub cost: f64,
    pub optimal: bool,
    pub budget_exceeded: bool,
    pub word: Vec<Vec<String>>,
    pub iterations: Vec<IterationRecord>,
    pub solutions: Vec<SolutionRecord>,
}

impl PlanFile {
    pub fn new(scene: &SceneGraph, formula: &LtlFormula, start: u32, setup: Setup, r: &PlanResult) -> Self {
        Self {
            format: PLAN_FORMAT.into(),
            version: FILE_VERSION,
            setup: setup.name().into(),
            formula: formula.to_prefix(),
            start,
            path: r.path.clone(),
            polyline: r.path.iter().map(|&s| scene.nodes()[s as usize].position).collect(),
            cost: r.cost,
            optimal: r.optimal,
            budget_exceeded: r.budget_exceeded,
            word: r
                .word
                .iter()
                .map(|l| l.iter().map(str::to_owned).collect())
                .collect(),
            iterations: r
                .iterations
                .iter()
                .map(|it| IterationRecord {
                    w1: it.w1,
                    w2: it.w2,
                    time: it.time,
                    cost: it.cost,
                    expansions: it.expansions.iter().map(|e| (e.name.clone(), e.count)).collect(),
                    completed: it.completed,
                })
                .collect(),
            solutions: r
                .solutions
                .iter()
                .map(|s| SolutionRecord {
                    iteration: s.iteration,
                    time: s.time,
                    cost: s.cost,
                })
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write(path, &to_json(self))
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let file: Self = from_json(path, &read(path)?)?;
        check_header(path, &file.format, file.version, PLAN_FORMAT)?;
        Ok(file)
    }
}

fn check_header(path: &Path, format: &str, version: u32, expected: &str) -> Result<(), IoError> {
    if format != expected || version != FILE_VERSION {
        return Err(IoError::Format {
            path: path.to_owned(),
            reason: format!("expected {expected} v{FILE_VERSION}, found {format} v{version}"),
        });
    }
    Ok(())
}

/// Identifies the scene and formula a heuristic cache was built for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub formula: String,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_labels: usize,
}

impl CacheKey {
    pub fn new(scene: &SceneGraph, formula: &LtlFormula) -> Self {
        Self {
            formula: formula.to_prefix(),
            num_nodes: scene.num_nodes(),
            num_edges: scene.edges().len(),
            num_labels: scene.label_universe().len(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeuristicFile {
    format: String,
    version: u32,
    key: CacheKey,
    num_states: usize,
    /// Infinite entries are stored as null.
    label_costs: Vec<Option<f64>>,
    g: Vec<Option<f64>>,
    /// `-1` accept, `-2` none, otherwise a label index.
    next: Vec<i64>,
    h: Vec<Vec<Option<f64>>>,
}

fn finite(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|x| x.is_finite().then_some(*x)).collect()
}

fn unfinite(v: Vec<Option<f64>>) -> Vec<f64> {
    v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect()
}

pub fn save_heuristics(path: &Path, key: &CacheKey, table: &HeuristicTable) -> Result<(), IoError> {
    let p = table.to_parts();
    let file = HeuristicFile {
        format: HEURISTIC_FORMAT.into(),
        version: FILE_VERSION,
        key: key.clone(),
        num_states: p.num_states,
        label_costs: finite(&p.label_costs),
        g: finite(&p.g),
        next: p
            .next
            .iter()
            .map(|n| match n {
                NextLabel::Accept => -1,
                NextLabel::None => -2,
                NextLabel::Label(l) => *l as i64,
            })
            .collect(),
        h: p.h.iter().map(|f| finite(f)).collect(),
    };
    write(path, &serde_json::to_string(&file).expect("plain data serializes"))
}

/// Loads a heuristic cache; `Ok(None)` when it was built for another
/// scene or formula.
pub fn load_heuristics(path: &Path, key: &CacheKey) -> Result<Option<HeuristicTable>, IoError> {
    let file: HeuristicFile = from_json(path, &read(path)?)?;
    check_header(path, &file.format, file.version, HEURISTIC_FORMAT)?;
    if &file.key != key {
        return Ok(None);
    }
    let next = file
        .next
        .into_iter()
        .map(|n| match n {
            -1 => NextLabel::Accept,
            n if n < 0 => NextLabel::None,
            n => NextLabel::Label(n as usize),
        })
        .collect();
    let parts = HeuristicParts {
        num_labels: key.num_labels,
        num_states: file.num_states,
        label_costs: unfinite(file.label_costs),
        g: unfinite(file.g),
        next,
        h: file.h.into_iter().map(unfinite).collect(),
    };
    HeuristicTable::from_parts(parts, key.num_nodes)
        .map(Some)
        .map_err(|reason| IoError::Format {
            path: path.to_owned(),
            reason,
        })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GuidanceEntry {
    context: AttributeId,
    q: usize,
    calls: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GuidanceFile {
    format: String,
    version: u32,
    formula: String,
    plans: Vec<GuidanceEntry>,
}

pub fn save_guidance(path: &Path, formula: &LtlFormula, guidance: &LlmGuidance) -> Result<(), IoError> {
    let file = GuidanceFile {
        format: GUIDANCE_FORMAT.into(),
        version: FILE_VERSION,
        formula: formula.to_prefix(),
        plans: guidance
            .plans
            .iter()
            .map(|(&(context, q), calls)| GuidanceEntry {
                context,
                q,
                calls: calls.iter().map(|c| c.to_string()).collect(),
            })
            .collect(),
    };
    write(path, &to_json(&file))
}

/// Loads a guidance cache and the formula it was fetched for.
pub fn load_guidance(path: &Path) -> Result<(String, LlmGuidance), IoError> {
    let file: GuidanceFile = from_json(path, &read(path)?)?;
    check_header(path, &file.format, file.version, GUIDANCE_FORMAT)?;
    let mut guidance = LlmGuidance::default();
    for entry in file.plans {
        let calls = entry
            .calls
            .iter()
            .map(|c| {
                crate::llm::parse_call(c).ok_or_else(|| IoError::Format {
                    path: path.to_owned(),
                    reason: format!("malformed call `{c}`"),
                })
            })
            .collect::<Result<Vec<FunctionCall>, _>>()?;
        guidance.plans.insert((entry.context, entry.q), calls);
    }
    Ok((file.formula, guidance))
}
