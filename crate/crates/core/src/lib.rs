//! Optimal co-safe LTL mission planning over hierarchical scene graphs.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, LLM transports
//! and the command line live in the `sgplan` companion crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod automaton;
pub mod dijkstra;
pub mod domain;
pub mod generate;
pub mod heuristics;
pub mod label;
pub mod ltl;
pub mod scene;
pub mod search;

pub use automaton::{accepts, compile, Dfa, StateId};
pub use domain::{build_domain, ActionCache, PlanningDomain, ProductState};
pub use heuristics::{HeuristicTable, LlmGuidance, LlmHeuristic};
pub use label::Label;
pub use ltl::{check_cosafe, eval_trace, parse_prefix, to_nnf, Alphabet, LtlFormula, Proposition, TraceEvaluator};
pub use scene::{NodeId, SceneGraph};
pub use search::{plan, PlanError, PlanResult, SearchConfig, Setup};
