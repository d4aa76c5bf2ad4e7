//! Anytime multi-resolution multi-heuristic A* over a [`PlanningDomain`].
//!
//! One anchor queue ordered by `g + w1·h_LTL` over the anchor level, plus
//! inadmissible queues keyed `g + w1·h` per (resolution, heuristic). An
//! inadmissible queue is served while its minimum key is within `w2` of the
//! anchor minimum. `g` is shared by all queues; closed lists are kept per
//! resolution and for the anchor. Weights decay between iterations and
//! states closed in the anchor that improve later are carried over through
//! an inconsistent list.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::dijkstra::{HeapItem, INF};
use crate::domain::{ActionCache, LevelAction, Move, PlanningDomain, ProductState};
use crate::heuristics::{HeuristicKind, HeuristicTable, LlmHeuristic};
use crate::label::Label;
use crate::scene::{LevelKind, NodeId};

/// Monotonic seconds source; the core crate has no clock of its own.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// A clock that never advances. Budgets are then never exceeded.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QueueSpec {
    /// Resolution: 0 is occupancy (graph edges), `k > 0` an attribute level.
    pub level: usize,
    pub heuristic: HeuristicKind,
}

/// Benchmark setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setup {
    /// Anchor only, `h_LTL` only.
    AStar,
    /// Every resolution, `h_LTL` only.
    NoLlm,
    /// Every resolution with both heuristics.
    All,
    /// `NoLlm` plus an `h_LLM` queue on one resolution.
    Occupancy,
    Object,
    Room,
    Floor,
}

impl Setup {
    pub const ALL_SETUPS: [Setup; 7] = [
        Setup::All,
        Setup::Occupancy,
        Setup::Object,
        Setup::Room,
        Setup::Floor,
        Setup::NoLlm,
        Setup::AStar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setup::AStar => "A*",
            Setup::NoLlm => "NO-LLM",
            Setup::All => "ALL",
            Setup::Occupancy => "OCC",
            Setup::Object => "OBJ",
            Setup::Room => "ROOM",
            Setup::Floor => "FLR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let up = s.to_ascii_uppercase();
        Self::ALL_SETUPS
            .into_iter()
            .find(|x| x.name() == up || (up == "ASTAR" && *x == Setup::AStar))
    }

    pub fn uses_llm(self) -> bool {
        !matches!(self, Setup::AStar | Setup::NoLlm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub w1: f64,
    pub w2: f64,
    pub decay: f64,
    /// Seconds, measured with the injected [`Clock`].
    pub time_budget: Option<f64>,
    /// Hard cap on total expansions across iterations.
    pub max_expansions: Option<u64>,
    /// Attribute levels whose actions the anchor level includes.
    pub anchor_levels: Vec<usize>,
    pub queues: Vec<QueueSpec>,
    /// Record every expanded state in order.
    pub trace: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            w1: 10.0,
            w2: 5.0,
            decay: 0.5,
            time_budget: None,
            max_expansions: None,
            anchor_levels: Vec::new(),
            queues: Vec::new(),
            trace: false,
        }
    }
}

impl SearchConfig {
    /// Levels and queues for `setup` on `domain`, default weights.
    pub fn for_setup(setup: Setup, domain: &PlanningDomain<'_>) -> Self {
        let attr_levels: Vec<usize> = domain.levels().iter().map(|l| l.index).collect();
        let resolutions: Vec<usize> = core::iter::once(0).chain(attr_levels.iter().copied()).collect();
        let ltl = |level| QueueSpec {
            level,
            heuristic: HeuristicKind::Ltl,
        };
        let llm = |level| QueueSpec {
            level,
            heuristic: HeuristicKind::Llm,
        };
        let single = |kind: Option<LevelKind>| -> Option<usize> {
            match kind {
                None => Some(0),
                Some(k) => domain.level_index_of(&k),
            }
        };
        let (anchor_levels, queues) = match setup {
            Setup::AStar => (Vec::new(), Vec::new()),
            Setup::NoLlm => (attr_levels.clone(), resolutions.iter().map(|&r| ltl(r)).collect()),
            Setup::All => (
                attr_levels.clone(),
                resolutions.iter().flat_map(|&r| [ltl(r), llm(r)]).collect(),
            ),
            Setup::Occupancy | Setup::Object | Setup::Room | Setup::Floor => {
                let kind = match setup {
                    Setup::Occupancy => None,
                    Setup::Object => Some(LevelKind::Object),
                    Setup::Room => Some(LevelKind::Room),
                    _ => Some(LevelKind::Floor),
                };
                let mut queues: Vec<QueueSpec> = resolutions.iter().map(|&r| ltl(r)).collect();
                if let Some(r) = single(kind) {
                    queues.push(llm(r));
                }
                (attr_levels.clone(), queues)
            }
        };
        Self {
            anchor_levels,
            queues,
            ..Self::default()
        }
    }

    fn validate(&self, domain: &PlanningDomain<'_>) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::InvalidConfig(m));
        if !(self.w1 >= 1.0 && self.w2 >= 1.0) {
            return bad(format!("weights must be >= 1 (w1={}, w2={})", self.w1, self.w2));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return bad(format!("decay must lie in (0, 1], got {}", self.decay));
        }
        for &k in &self.anchor_levels {
            if k == 0 || domain.level(k).is_none() {
                return bad(format!("no attribute level {k}"));
            }
        }
        for q in &self.queues {
            if q.level != 0 && domain.level(q.level).is_none() {
                return bad(format!("no resolution {}", q.level));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleReason {
    /// The automaton has no accepting run at all.
    NoAcceptingAutomatonPath,
    /// Accepting runs exist but the scene cannot realize any of them.
    AcceptingLabelsUnreachable,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("mission infeasible: {0:?}")]
    Infeasible(InfeasibleReason),
    #[error("time budget exceeded before any solution was found")]
    TimeBudgetExceeded,
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueExpansions {
    /// `anchor`, or `<resolution>/<ltl|llm>`.
    pub name: String,
    pub level: Option<usize>,
    pub heuristic: Option<HeuristicKind>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationLog {
    pub w1: f64,
    pub w2: f64,
    /// Clock reading at the end of the iteration.
    pub time: f64,
    /// Incumbent cost at the end of the iteration.
    pub cost: Option<f64>,
    pub expansions: Vec<QueueExpansions>,
    /// The iteration ran to its termination condition.
    pub completed: bool,
}

impl IterationLog {
    pub fn total_expansions(&self) -> u64 {
        self.expansions.iter().map(|e| e.count).sum()
    }
}

/// One improving solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub iteration: usize,
    pub w1: f64,
    pub w2: f64,
    pub time: f64,
    pub cost: f64,
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    /// Expanded occupancy path, start first.
    pub path: Vec<NodeId>,
    pub cost: f64,
    pub word: Vec<Label>,
    pub iterations: Vec<IterationLog>,
    /// Emitted solutions, in order; costs are non-increasing.
    pub solutions: Vec<Solution>,
    /// The last iteration ran at `w1 = w2 = 1` to completion.
    pub optimal: bool,
    pub budget_exceeded: bool,
    /// Expanded states in order, when tracing.
    pub trace: Vec<ProductState>,
}

impl PlanResult {
    pub fn total_expansions(&self) -> u64 {
        self.iterations.iter().map(|i| i.total_expansions()).sum()
    }
}

/// One abstract step of a plan over mixed levels.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractStep {
    pub to: NodeId,
    pub via: Move,
}

/// Replaces level actions with their occupancy paths.
pub fn expand_solution(start: NodeId, steps: &[AbstractStep]) -> Vec<NodeId> {
    let mut path = vec![start];
    for step in steps {
        match &step.via {
            Move::Edge => path.push(step.to),
            Move::Action(a) => path.extend_from_slice(&a.path[1..]),
        }
    }
    path
}

/// Sum of edge costs along `path`, accumulated front to back.
pub fn path_cost(domain: &PlanningDomain<'_>, path: &[NodeId]) -> Option<f64> {
    path.windows(2).try_fold(0.0, |acc, w| {
        domain.scene().edge_cost(w[0], w[1]).map(|c| acc + c)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    key: f64,
    g: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: smaller key first, then larger g, then smaller id.
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| self.g.total_cmp(&other.g))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Queue {
    spec: Option<QueueSpec>,
    heap: BinaryHeap<Entry>,
    member: Vec<bool>,
    expansions: u64,
}

impl Queue {
    fn new(spec: Option<QueueSpec>, n: usize) -> Self {
        Self {
            spec,
            heap: BinaryHeap::new(),
            member: vec![false; n],
            expansions: 0,
        }
    }

    fn top(&mut self, g: &[f64]) -> Option<Entry> {
        while let Some(&e) = self.heap.peek() {
            if self.member[e.idx] && e.g == g[e.idx] {
                return Some(e);
            }
            self.heap.pop();
        }
        None
    }

    fn min_key(&mut self, g: &[f64]) -> f64 {
        self.top(g).map_or(INF, |e| e.key)
    }

    fn push(&mut self, idx: usize, g: f64, key: f64) {
        self.member[idx] = true;
        self.heap.push(Entry { key, g, idx });
    }

    fn name(&self, domain: &PlanningDomain<'_>) -> String {
        match self.spec {
            None => String::from("anchor"),
            Some(s) => {
                let res = match domain.level(s.level) {
                    None => "occupancy",
                    Some(l) => l.kind.as_str(),
                };
                let h = match s.heuristic {
                    HeuristicKind::Ltl => "ltl",
                    HeuristicKind::Llm => "llm",
                };
                format!("{res}/{h}")
            }
        }
    }
}

struct Search<'d, 'a> {
    dom: &'d PlanningDomain<'a>,
    table: &'d HeuristicTable,
    llm: Option<&'d LlmHeuristic>,
    cfg: &'d SearchConfig,
    clock: &'d dyn Clock,
    cache: ActionCache,
    g: Vec<f64>,
    parent: Vec<usize>,
    via: Vec<Option<Rc<LevelAction>>>,
    closed_anchor: Vec<bool>,
    /// Indexed by resolution.
    closed_res: Vec<Vec<bool>>,
    incons: Vec<bool>,
    queues: Vec<Queue>,
    incumbent: (f64, usize),
    w1: f64,
    w2: f64,
    total_expansions: u64,
    trace: Vec<ProductState>,
    t0: f64,
}

const NO_PARENT: usize = usize::MAX;

enum IterationEnd {
    Completed,
    Budget,
}

impl<'d, 'a> Search<'d, 'a> {
    fn h(&self, spec: Option<QueueSpec>, x: ProductState) -> f64 {
        match spec.map(|s| s.heuristic) {
            None | Some(HeuristicKind::Ltl) => self.table.h_ltl(x),
            Some(HeuristicKind::Llm) => self.llm.map_or(0.0, |h| h.h_llm(x)),
        }
    }

    fn in_resolution(&self, level: usize, x: ProductState) -> bool {
        level == 0 || self.dom.level(level).is_some_and(|l| l.contains(x.node))
    }

    fn budget_exceeded(&self) -> bool {
        if self
            .cfg
            .max_expansions
            .is_some_and(|m| self.total_expansions >= m)
        {
            return true;
        }
        self.cfg
            .time_budget
            .is_some_and(|b| self.clock.seconds() - self.t0 > b)
    }

    fn insert(&mut self, idx: usize) {
        let x = self.dom.state_at(idx);
        let g = self.g[idx];
        if !self.closed_anchor[idx] {
            let key = g + self.w1 * self.table.h_ltl(x);
            self.queues[0].push(idx, g, key);
        } else {
            self.incons[idx] = true;
        }
        for i in 1..self.queues.len() {
            let spec = self.queues[i].spec.expect("inadmissible queues have specs");
            if self.in_resolution(spec.level, x) && !self.closed_res[spec.level][idx] {
                let key = g + self.w1 * self.h(Some(spec), x);
                self.queues[i].push(idx, g, key);
            }
        }
    }

    fn expand(&mut self, qi: usize, idx: usize) {
        let x = self.dom.state_at(idx);
        let spec = self.queues[qi].spec;
        match spec {
            None => {
                self.closed_anchor[idx] = true;
                for q in &mut self.queues {
                    q.member[idx] = false;
                }
            }
            Some(s) => {
                self.closed_res[s.level][idx] = true;
                for q in self.queues.iter_mut().skip(1) {
                    if q.spec.is_some_and(|t| t.level == s.level) {
                        q.member[idx] = false;
                    }
                }
            }
        }
        self.queues[qi].expansions += 1;
        self.total_expansions += 1;
        if self.cfg.trace {
            self.trace.push(x);
        }
        let succs = match spec {
            None => self
                .dom
                .successors(0, x, &mut self.cache, &self.cfg.anchor_levels),
            Some(s) => self.dom.successors(s.level, x, &mut self.cache, &[]),
        };
        let gx = self.g[idx];
        for succ in succs {
            let y = succ.state;
            if !self.table.h_ltl(y).is_finite() {
                continue;
            }
            let yi = self.dom.state_index(y);
            let (ng, action) = match succ.via {
                Move::Edge => (gx + succ.cost, None),
                Move::Action(a) => (a.accumulate(gx), Some(a)),
            };
            if ng >= self.g[yi] {
                continue;
            }
            self.g[yi] = ng;
            self.parent[yi] = idx;
            self.via[yi] = action;
            if self.dom.completes_mission(y) {
                if ng < self.incumbent.0 {
                    self.incumbent = (ng, yi);
                }
                continue;
            }
            self.insert(yi);
        }
    }

    /// One weighted iteration; SMHA*-style round robin over inadmissible
    /// queues, falling back to the anchor.
    fn iterate(&mut self) -> IterationEnd {
        let w2 = self.w2;
        loop {
            if self.budget_exceeded() {
                return IterationEnd::Budget;
            }
            let mut progressed = false;
            let rounds = self.queues.len().max(2) - 1;
            for i in 1..=rounds {
                let a_min = self.queues[0].min_key(&self.g);
                if a_min == INF {
                    return IterationEnd::Completed;
                }
                let inad = if i < self.queues.len() {
                    Some(self.queues[i].min_key(&self.g))
                } else {
                    None
                };
                match inad {
                    Some(k) if k <= w2 * a_min => {
                        if self.incumbent.0 <= k {
                            return IterationEnd::Completed;
                        }
                        let e = self.queues[i].top(&self.g).expect("finite key has an entry");
                        self.expand(i, e.idx);
                    }
                    _ => {
                        if self.incumbent.0 <= a_min {
                            return IterationEnd::Completed;
                        }
                        let e = self.queues[0].top(&self.g).expect("finite key has an entry");
                        self.expand(0, e.idx);
                    }
                }
                progressed = true;
            }
            if !progressed {
                return IterationEnd::Completed;
            }
        }
    }

    /// Rebuilds queues from the anchor open list and the inconsistent list
    /// under the current weights and clears closed lists.
    fn restart(&mut self) {
        let n = self.g.len();
        let reopen: Vec<usize> = (0..n)
            .filter(|&i| self.queues[0].member[i] || self.incons[i])
            .collect();
        for q in &mut self.queues {
            q.heap.clear();
            q.member.iter_mut().for_each(|m| *m = false);
            q.expansions = 0;
        }
        self.closed_anchor.iter_mut().for_each(|c| *c = false);
        for c in &mut self.closed_res {
            c.iter_mut().for_each(|c| *c = false);
        }
        self.incons.iter_mut().for_each(|c| *c = false);
        for idx in reopen {
            self.insert(idx);
        }
    }

    fn extract(&self, goal: usize) -> Vec<NodeId> {
        let mut steps = Vec::new();
        let mut cur = goal;
        while self.parent[cur] != NO_PARENT {
            let to = self.dom.state_at(cur).node;
            let via = match &self.via[cur] {
                None => Move::Edge,
                Some(a) => Move::Action(a.clone()),
            };
            steps.push(AbstractStep { to, via });
            cur = self.parent[cur];
        }
        steps.reverse();
        expand_solution(self.dom.state_at(cur).node, &steps)
    }

    fn log(&mut self, completed: bool) -> IterationLog {
        let expansions = self
            .queues
            .iter()
            .map(|q| QueueExpansions {
                name: q.name(self.dom),
                level: q.spec.map(|s| s.level),
                heuristic: q.spec.map(|s| s.heuristic),
                count: q.expansions,
            })
            .collect();
        IterationLog {
            w1: self.w1,
            w2: self.w2,
            time: self.clock.seconds() - self.t0,
            cost: (self.incumbent.0 < INF).then_some(self.incumbent.0),
            expansions,
            completed,
        }
    }
}

fn diagnose(domain: &PlanningDomain<'_>) -> PlanError {
    let dfa = domain.dfa();
    if dfa.is_live(dfa.initial()) {
        PlanError::Infeasible(InfeasibleReason::AcceptingLabelsUnreachable)
    } else {
        PlanError::Infeasible(InfeasibleReason::NoAcceptingAutomatonPath)
    }
}

fn word_of(domain: &PlanningDomain<'_>, path: &[NodeId]) -> Vec<Label> {
    path.iter()
        .map(|&s| domain.scene().label(s).expect("path nodes exist"))
        .collect()
}

/// Runs the anytime search to completion at unit weights, or until the
/// budget runs out.
pub fn plan(
    domain: &PlanningDomain<'_>,
    table: &HeuristicTable,
    llm: Option<&LlmHeuristic>,
    cfg: &SearchConfig,
    clock: &dyn Clock,
) -> Result<PlanResult, PlanError> {
    plan_with(domain, table, llm, cfg, clock, &mut |_| {})
}

/// Like [`plan`], calling `on_solution` for each improving solution.
pub fn plan_with(
    domain: &PlanningDomain<'_>,
    table: &HeuristicTable,
    llm: Option<&LlmHeuristic>,
    cfg: &SearchConfig,
    clock: &dyn Clock,
    on_solution: &mut dyn FnMut(&Solution),
) -> Result<PlanResult, PlanError> {
    cfg.validate(domain)?;
    let start = domain.start();
    if domain.completes_mission(start) {
        let path = vec![start.node];
        let solution = Solution {
            iteration: 0,
            w1: 1.0,
            w2: 1.0,
            time: 0.0,
            cost: 0.0,
            path: path.clone(),
        };
        on_solution(&solution);
        return Ok(PlanResult {
            word: word_of(domain, &path),
            path,
            cost: 0.0,
            iterations: Vec::new(),
            solutions: vec![solution],
            optimal: true,
            budget_exceeded: false,
            trace: Vec::new(),
        });
    }
    if !table.h_ltl(start).is_finite() {
        return Err(diagnose(domain));
    }
    let n = domain.num_product_states();
    let mut queues = vec![Queue::new(None, n)];
    for &spec in &cfg.queues {
        queues.push(Queue::new(Some(spec), n));
    }
    let mut s = Search {
        dom: domain,
        table,
        llm,
        cfg,
        clock,
        cache: ActionCache::new(),
        g: vec![INF; n],
        parent: vec![NO_PARENT; n],
        via: vec![None; n],
        closed_anchor: vec![false; n],
        closed_res: vec![vec![false; n]; domain.num_levels()],
        incons: vec![false; n],
        queues,
        incumbent: (INF, NO_PARENT),
        w1: cfg.w1,
        w2: cfg.w2,
        total_expansions: 0,
        trace: Vec::new(),
        t0: clock.seconds(),
    };
    let si = domain.state_index(start);
    s.g[si] = 0.0;
    s.insert(si);

    let mut iterations = Vec::new();
    let mut solutions: Vec<Solution> = Vec::new();
    let mut best: Option<(f64, Vec<NodeId>)> = None;
    let mut optimal = false;
    let mut budget_exceeded = false;
    loop {
        let end = s.iterate();
        let completed = matches!(end, IterationEnd::Completed);
        iterations.push(s.log(completed));
        if s.incumbent.0 < INF {
            let path = s.extract(s.incumbent.1);
            let cost = path_cost(domain, &path).expect("plan follows graph edges");
            if best.as_ref().is_none_or(|(c, _)| cost < *c) {
                let solution = Solution {
                    iteration: iterations.len() - 1,
                    w1: s.w1,
                    w2: s.w2,
                    time: s.clock.seconds() - s.t0,
                    cost,
                    path: path.clone(),
                };
                on_solution(&solution);
                solutions.push(solution);
                best = Some((cost, path));
            }
        } else if completed {
            return Err(diagnose(domain));
        }
        if !completed {
            budget_exceeded = true;
            break;
        }
        if s.w1 == 1.0 && s.w2 == 1.0 {
            optimal = true;
            break;
        }
        s.w1 = (s.w1 * cfg.decay).max(1.0);
        s.w2 = (s.w2 * cfg.decay).max(1.0);
        if cfg.decay == 1.0 {
            s.w1 = 1.0;
            s.w2 = 1.0;
        }
        s.restart();
    }
    let Some((cost, path)) = best else {
        return Err(PlanError::TimeBudgetExceeded);
    };
    Ok(PlanResult {
        word: word_of(domain, &path),
        path,
        cost,
        iterations,
        solutions,
        optimal,
        budget_exceeded,
        trace: s.trace,
    })
}

/// Plain Dijkstra over the product of graph edges and automaton states.
/// Returns the optimal cost and occupancy path, or `None` when infeasible.
pub fn product_dijkstra(domain: &PlanningDomain<'_>) -> Option<(f64, Vec<NodeId>)> {
    let n = domain.num_product_states();
    let mut dist = vec![INF; n];
    let mut parent = vec![NO_PARENT; n];
    let mut heap = BinaryHeap::new();
    let si = domain.state_index(domain.start());
    dist[si] = 0.0;
    heap.push(HeapItem {
        dist: 0.0,
        node: si as u32,
    });
    let mut succ = Vec::new();
    while let Some(HeapItem { dist: d, node }) = heap.pop() {
        let idx = node as usize;
        if d > dist[idx] {
            continue;
        }
        let x = domain.state_at(idx);
        if domain.completes_mission(x) {
            let mut path = vec![x.node];
            let mut cur = idx;
            while parent[cur] != NO_PARENT {
                cur = parent[cur];
                path.push(domain.state_at(cur).node);
            }
            path.reverse();
            return Some((d, path));
        }
        succ.clear();
        domain.edge_successors(x, &mut succ);
        for sx in &succ {
            let yi = domain.state_index(sx.state);
            let nd = d + sx.cost;
            if nd < dist[yi] {
                dist[yi] = nd;
                parent[yi] = idx;
                heap.push(HeapItem {
                    dist: nd,
                    node: yi as u32,
                });
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Match,
    /// Planner cost minus oracle cost.
    CostGap(f64),
    /// Planner found a plan the oracle says cannot exist, or the reverse.
    Disagree,
    BothInfeasible,
    /// Product space above the cap.
    Incomparable,
}

/// Compares a planner outcome with [`product_dijkstra`].
pub fn certify_optimal(
    result: Result<&PlanResult, &PlanError>,
    domain: &PlanningDomain<'_>,
    cap: usize,
) -> Verdict {
    if domain.num_product_states() > cap {
        return Verdict::Incomparable;
    }
    match (result, product_dijkstra(domain)) {
        (Ok(r), Some((c, _))) if r.cost == c => Verdict::Match,
        (Ok(r), Some((c, _))) => Verdict::CostGap(r.cost - c),
        (Err(PlanError::Infeasible(_)), None) => Verdict::BothInfeasible,
        _ => Verdict::Disagree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{accepts, compile, Dfa};
    use crate::domain::build_domain;
    use crate::generate::{generate_scene, GeneratorSpec};
    use crate::heuristics::mock_guidance;
    use crate::ltl::parse_prefix;
    use crate::scene::SceneGraph;

    fn scene(floors: u32, seed: u64) -> SceneGraph {
        generate_scene(
            &GeneratorSpec {
                floors,
                ..GeneratorSpec::default()
            },
            seed,
        )
        .unwrap()
    }

    fn dfa(g: &SceneGraph, f: &str) -> Dfa {
        compile(&parse_prefix(f, &g.alphabet()).unwrap()).unwrap()
    }

    #[test]
    fn every_setup_matches_the_oracle() {
        let g = scene(2, 5);
        let d = dfa(&g, "& F p5 & F p12 ! p9");
        let dom = build_domain(&g, &d, 0).unwrap();
        let table = HeuristicTable::build(&g, &d);
        let guidance = mock_guidance(&g, &d, &table);
        let llm = LlmHeuristic::new(&g, &guidance).unwrap();
        let (oracle, _) = product_dijkstra(&dom).unwrap();
        for setup in Setup::ALL_SETUPS {
            let cfg = SearchConfig::for_setup(setup, &dom);
            let r = plan(&dom, &table, Some(&llm), &cfg, &NoClock).unwrap();
            assert_eq!(r.cost, oracle, "{}", setup.name());
            assert!(r.optimal);
            assert!(accepts(&d, &r.word));
            assert_eq!(path_cost(&dom, &r.path), Some(r.cost));
            for w in r.solutions.windows(2) {
                assert!(w[1].cost <= w[0].cost);
            }
        }
    }

    #[test]
    fn start_accepting_gives_single_node_path() {
        let g = scene(1, 1);
        let d = dfa(&g, "true");
        let dom = build_domain(&g, &d, 3).unwrap();
        let table = HeuristicTable::build(&g, &d);
        let r = plan(&dom, &table, None, &SearchConfig::default(), &NoClock).unwrap();
        assert_eq!(r.path, vec![3]);
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn infeasible_reasons() {
        let g = scene(1, 1);
        let table_for = |d: &Dfa| HeuristicTable::build(&g, d);
        let d = dfa(&g, "F & p2 ! p2");
        let dom = build_domain(&g, &d, 0).unwrap();
        assert_eq!(
            plan(&dom, &table_for(&d), None, &SearchConfig::default(), &NoClock),
            Err(PlanError::Infeasible(InfeasibleReason::NoAcceptingAutomatonPath))
        );
        // Two rooms are never labelled at the same node.
        let d = dfa(&g, "F & p2 p3");
        let dom = build_domain(&g, &d, 0).unwrap();
        assert_eq!(
            plan(&dom, &table_for(&d), None, &SearchConfig::default(), &NoClock),
            Err(PlanError::Infeasible(InfeasibleReason::AcceptingLabelsUnreachable))
        );
    }

    #[test]
    fn expansion_cap_returns_best_so_far_or_error() {
        let g = scene(2, 2);
        let d = dfa(&g, "& F p5 F p12");
        let dom = build_domain(&g, &d, 0).unwrap();
        let table = HeuristicTable::build(&g, &d);
        let cfg = SearchConfig {
            max_expansions: Some(1),
            ..SearchConfig::for_setup(Setup::AStar, &dom)
        };
        match plan(&dom, &table, None, &cfg, &NoClock) {
            Ok(r) => assert!(r.budget_exceeded && !r.optimal),
            Err(e) => assert_eq!(e, PlanError::TimeBudgetExceeded),
        }
    }

    #[test]
    fn setup_names_round_trip() {
        for s in Setup::ALL_SETUPS {
            assert_eq!(Setup::parse(s.name()), Some(s));
        }
        assert_eq!(Setup::parse("no-llm"), Some(Setup::NoLlm));
    }
}
