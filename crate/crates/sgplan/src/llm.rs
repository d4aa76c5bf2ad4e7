//! Chat-completion transports, mission translation and guidance fetching.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sgplan_core::automaton::Dfa;
use sgplan_core::heuristics::{remaining_mission, FunctionCall, LlmGuidance, MOVE, REACH};
use sgplan_core::ltl::check_cosafe;
use sgplan_core::scene::{prop_token, AttributeId};
use sgplan_core::{parse_prefix, LtlFormula, NodeId, SceneGraph, StateId};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const TRANSCRIPT_VERSION: u32 = 1;
pub const DEFAULT_MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request failed: {0}")]
    Http(String),
    #[error("transport not configured: {0}")]
    Config(String),
    #[error("replay mismatch at exchange {index}: expected prompt hash {expected}, got {found}")]
    ReplayMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("replay transcript exhausted after {0} exchanges")]
    ReplayExhausted(usize),
    #[error("{path}: {reason}")]
    Transcript { path: PathBuf, reason: String },
}

pub trait Transport {
    fn send(&mut self, prompt: &str, session: &str) -> Result<String, TransportError>;
}

/// First 64 bits of the SHA-256 of the prompt bytes, hex encoded.
pub fn prompt_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub session: String,
    pub hash: String,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub version: u32,
    pub entries: Vec<Exchange>,
}

impl Default for Transcript {
    fn default() -> Self {
        Self {
            version: TRANSCRIPT_VERSION,
            entries: Vec::new(),
        }
    }
}

impl Transcript {
    pub fn load(path: &Path) -> Result<Self, TransportError> {
        let err = |reason: String| TransportError::Transcript {
            path: path.to_owned(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let t: Transcript = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if t.version != TRANSCRIPT_VERSION {
            return Err(err(format!("unsupported transcript version {}", t.version)));
        }
        for (i, e) in t.entries.iter().enumerate() {
            if prompt_hash(&e.prompt) != e.hash {
                return Err(err(format!("entry {i} hash does not match its prompt")));
            }
        }
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), TransportError> {
        fs::write(path, self.to_json()).map_err(|e| TransportError::Transcript {
            path: path.to_owned(),
            reason: e.to_string(),
        })
    }
}

/// Answers from a transcript, failing on the first prompt that differs.
#[derive(Debug, Clone)]
pub struct ReplayTransport {
    entries: Vec<Exchange>,
    pos: usize,
}

impl ReplayTransport {
    pub fn new(transcript: Transcript) -> Self {
        Self {
            entries: transcript.entries,
            pos: 0,
        }
    }

    pub fn open(path: &Path) -> Result<Self, TransportError> {
        Transcript::load(path).map(Self::new)
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.pos
    }
}

impl Transport for ReplayTransport {
    fn send(&mut self, prompt: &str, _session: &str) -> Result<String, TransportError> {
        let Some(entry) = self.entries.get(self.pos) else {
            return Err(TransportError::ReplayExhausted(self.pos));
        };
        let found = prompt_hash(prompt);
        if found != entry.hash || entry.prompt != prompt {
            return Err(TransportError::ReplayMismatch {
                index: self.pos,
                expected: entry.hash.clone(),
                found,
            });
        }
        self.pos += 1;
        log::debug!("replay response:\n{}", entry.response);
        Ok(entry.response.clone())
    }
}

/// Forwards to an inner transport and keeps every exchange.
pub struct RecordTransport<T> {
    inner: T,
    transcript: Transcript,
}

impl<T: Transport> RecordTransport<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            transcript: Transcript::default(),
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_transcript(self) -> Transcript {
        self.transcript
    }
}

impl<T: Transport> Transport for RecordTransport<T> {
    fn send(&mut self, prompt: &str, session: &str) -> Result<String, TransportError> {
        let response = self.inner.send(prompt, session)?;
        self.transcript.entries.push(Exchange {
            session: session.to_owned(),
            hash: prompt_hash(prompt),
            prompt: prompt.to_owned(),
            response: response.clone(),
        });
        Ok(response)
    }
}

/// Canned responses in order; records the prompts it saw.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTransport {
    responses: VecDeque<String>,
    pub prompts: Vec<String>,
}

impl ScriptedTransport {
    pub fn new<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self {
            responses: responses.into_iter().map(Into::into).collect(),
            prompts: Vec::new(),
        }
    }
}

impl Transport for ScriptedTransport {
    fn send(&mut self, prompt: &str, _session: &str) -> Result<String, TransportError> {
        self.prompts.push(prompt.to_owned());
        self.responses
            .pop_front()
            .ok_or(TransportError::ReplayExhausted(self.prompts.len() - 1))
    }
}

pub const ENV_ENDPOINT: &str = "SGPLAN_LLM_ENDPOINT";
pub const ENV_API_KEY: &str = "SGPLAN_LLM_API_KEY";
pub const ENV_MODEL: &str = "SGPLAN_LLM_MODEL";
pub const ENV_MAX_RPM: &str = "SGPLAN_LLM_MAX_RPM";
pub const ENV_MAX_TOKENS: &str = "SGPLAN_LLM_MAX_TOKENS";

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub api_key: Option<String>,
    pub model: String,
    pub max_tokens: Option<u32>,
    pub max_requests_per_minute: Option<u32>,
    pub timeout: Duration,
}

impl LiveConfig {
    pub fn from_env() -> Result<Self, TransportError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let num = |k: &str| -> Result<Option<u32>, TransportError> {
            var(k)
                .map(|v| v.parse().map_err(|_| TransportError::Config(format!("{k}={v} is not an integer"))))
                .transpose()
        };
        Ok(Self {
            endpoint: var(ENV_ENDPOINT).ok_or_else(|| TransportError::Config(format!("{ENV_ENDPOINT} is unset")))?,
            api_key: var(ENV_API_KEY),
            model: var(ENV_MODEL).ok_or_else(|| TransportError::Config(format!("{ENV_MODEL} is unset")))?,
            max_tokens: num(ENV_MAX_TOKENS)?,
            max_requests_per_minute: num(ENV_MAX_RPM)?,
            timeout: Duration::from_secs(120),
        })
    }
}

/// Chat-completion client. Each prompt is sent as one user message at
/// temperature 0; sessions do not share history.
pub struct LiveTransport {
    cfg: LiveConfig,
    client: reqwest::blocking::Client,
    last_request: Option<Instant>,
}

impl LiveTransport {
    pub fn new(cfg: LiveConfig) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .build()
            .map_err(|e| TransportError::Http(e.to_string()))?;
        Ok(Self {
            cfg,
            client,
            last_request: None,
        })
    }

    fn throttle(&mut self) {
        if let (Some(rpm), Some(last)) = (self.cfg.max_requests_per_minute, self.last_request) {
            let gap = Duration::from_secs_f64(60.0 / rpm.max(1) as f64);
            let elapsed = last.elapsed();
            if elapsed < gap {
                std::thread::sleep(gap - elapsed);
            }
        }
        self.last_request = Some(Instant::now());
    }
}

impl Transport for LiveTransport {
    fn send(&mut self, prompt: &str, session: &str) -> Result<String, TransportError> {
        self.throttle();
        log::debug!("[{session}] prompt:\n{prompt}");
        let mut body = serde_json::json!({
            "model": self.cfg.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        });
        if let Some(n) = self.cfg.max_tokens {
            body["max_tokens"] = n.into();
        }
        let mut req = self.client.post(&self.cfg.endpoint).json(&body);
        if let Some(key) = &self.cfg.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError::Http(e.to_string()))?;
        let status = resp.status();
        let value: serde_json::Value = resp.json().map_err(|e| TransportError::Http(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError::Http(format!("{status}: {value}")));
        }
        let text = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| TransportError::Http(format!("response without message content: {value}")))?
            .to_owned();
        log::debug!("[{session}] response:\n{text}");
        Ok(text)
    }
}

// Translation.

/// An entity mention resolved to a proposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub mention: String,
    pub id: AttributeId,
}

impl Extracted {
    pub fn token(&self) -> String {
        prop_token(self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TranslationOutcome {
    Translated(LtlFormula),
    NeedsHumanRephrase { diagnostic: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationSession {
    pub mission: String,
    pub hierarchy: String,
    pub mu_unique: String,
    pub mu_regex: Vec<Extracted>,
    /// Ids in `mu_unique` that name no attribute of the scene.
    pub unknown_ids: Vec<u32>,
    pub outcome: TranslationOutcome,
    pub attempts: usize,
    pub transcript: Vec<(String, String)>,
}

impl TranslationSession {
    pub fn formula(&self) -> Option<&LtlFormula> {
        match &self.outcome {
            TranslationOutcome::Translated(f) => Some(f),
            TranslationOutcome::NeedsHumanRephrase { .. } => None,
        }
    }
}

const SESSION_TRANSLATE: &str = "translate";

pub fn unique_id_prompt(hierarchy: &str, mission: &str) -> String {
    format!(
        "You are given the attribute hierarchy of a building. Every floor, room and object \
carries a unique integer id in parentheses.\n\n\
Attribute hierarchy:\n{hierarchy}\n\
Rewrite the mission below so that every floor, room and object it mentions is followed by \
its unique id in parentheses (for example `kitchen (3)`). Keep all other words. \
Answer with the rewritten mission only.\n\n\
Mission: {mission}\n"
    )
}

const FEW_SHOT: &str = "\
Operators in prefix notation: ! (not), & (and), | (or), => (implies), X (next), U (until), F (eventually).
Propositions are written p<id>.

Example 1
Mission: go to the kitchen 3
Propositions: kitchen 3 -> p3
Formula: F p3

Example 2
Mission: reach the sink 5 while never entering the bathroom 4
Propositions: sink 5 -> p5, bathroom 4 -> p4
Formula: U ! p4 p5

Example 3
Mission: visit the office 7 and then the lobby 8, not starting in the corridor 6
Propositions: office 7 -> p7, lobby 8 -> p8, corridor 6 -> p6
Formula: & F & p7 F p8 ! p6
";

pub fn translation_prompt(mu_unique: &str, mu_regex: &[Extracted]) -> String {
    let props: Vec<String> = mu_regex.iter().map(|e| format!("{} -> {}", e.mention, e.token())).collect();
    format!(
        "Translate the mission into a co-safe LTL formula in prefix notation. Do not use G.\n\n\
{FEW_SHOT}\n\
Mission: {mu_unique}\n\
Propositions: {}\n\
Answer with one line of the form `Formula: <formula>`.\n",
        props.join(", ")
    )
}

pub fn correction_prompt(mu_unique: &str, mu_regex: &[Extracted], previous: &str, diagnostic: &str) -> String {
    format!(
        "{}\nYour previous answer was:\n{previous}\n\
It was rejected: {diagnostic}\n\
Give a corrected formula.\n",
        translation_prompt(mu_unique, mu_regex)
    )
}

fn parenthesized() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\(\s*(\d+)\s*\)").expect("valid regex"))
}

/// Ids in `text`: an integer after a known attribute name (space or
/// underscore separated) or an integer in parentheses. Returns resolved
/// mentions in order of appearance and the unknown ids.
pub fn extract_ids(text: &str, scene: &SceneGraph) -> (Vec<Extracted>, Vec<u32>) {
    let mut names: Vec<String> = scene.attributes().map(|a| a.name.to_lowercase()).collect();
    names.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    names.dedup();
    let alternation: Vec<String> = names
        .iter()
        .map(|n| n.split([' ', '_']).map(regex::escape).collect::<Vec<_>>().join("[ _]"))
        .collect();
    let named = Regex::new(&format!(r"(?i)\b({})[ _](\d+)\b", alternation.join("|"))).expect("escaped names form a valid regex");

    let mut hits: Vec<(usize, String, u32)> = Vec::new();
    for c in named.captures_iter(text) {
        let m = c.get(0).expect("whole match");
        if let Ok(id) = c[2].parse() {
            hits.push((m.start(), m.as_str().to_owned(), id));
        }
    }
    for c in parenthesized().captures_iter(text) {
        let m = c.get(0).expect("whole match");
        if let Ok(id) = c[1].parse::<u32>() {
            // Use the preceding words as the mention when they name the attribute.
            let mention = scene
                .attribute(id)
                .filter(|a| text[..m.start()].trim_end().to_lowercase().ends_with(&a.name.to_lowercase()))
                .map(|a| format!("{} {id}", a.name))
                .unwrap_or_else(|| m.as_str().to_owned());
            hits.push((m.start(), mention, id));
        }
    }
    hits.sort_by_key(|h| h.0);

    let mut found: Vec<Extracted> = Vec::new();
    let mut unknown = Vec::new();
    for (_, mention, id) in hits {
        if scene.attribute(id).is_some() {
            if !found.iter().any(|e| e.id == id) {
                found.push(Extracted { mention, id });
            }
        } else if !unknown.contains(&id) {
            unknown.push(id);
        }
    }
    (found, unknown)
}

/// The formula text in a response: the last `Formula:` line, else the last
/// nonempty line, with code fences and backticks removed.
pub fn extract_formula_text(response: &str) -> String {
    let lines: Vec<&str> = response
        .lines()
        .map(|l| l.trim().trim_matches('`').trim())
        .filter(|l| !l.is_empty() && !l.starts_with("```"))
        .collect();
    let tagged = lines.iter().rev().find_map(|l| {
        let lower = l.to_ascii_lowercase();
        lower.starts_with("formula:").then(|| l["formula:".len()..].trim().trim_matches('`').trim())
    });
    tagged.or(lines.last().copied()).unwrap_or("").to_owned()
}

fn check_candidate(text: &str, scene: &SceneGraph, unknown: &[u32]) -> Result<LtlFormula, String> {
    if !unknown.is_empty() {
        let ids: Vec<String> = unknown.iter().map(u32::to_string).collect();
        return Err(format!("the mission refers to unknown id(s) {}", ids.join(", ")));
    }
    if text.is_empty() {
        return Err("no formula in the answer".into());
    }
    let formula = parse_prefix(text, &scene.alphabet()).map_err(|e| format!("syntax error: {e}"))?;
    let verdict = check_cosafe(&formula);
    if let Some(d) = verdict.diagnostic(&formula) {
        return Err(d);
    }
    Ok(formula)
}

/// Mission text to a checked co-safe formula, with up to `max_attempts`
/// translation prompts.
pub fn translate(
    mission: &str,
    scene: &SceneGraph,
    transport: &mut dyn Transport,
    max_attempts: usize,
) -> Result<TranslationSession, TransportError> {
    let max_attempts = max_attempts.max(1);
    let hierarchy = scene.attribute_hierarchy().unwrap_or_default();
    let mut log = Vec::new();
    let mut ask = |prompt: String, log: &mut Vec<(String, String)>| -> Result<String, TransportError> {
        let response = transport.send(&prompt, SESSION_TRANSLATE)?;
        log.push((prompt, response.clone()));
        Ok(response)
    };

    let mu_unique = ask(unique_id_prompt(&hierarchy, mission), &mut log)?.trim().to_owned();
    let (mu_regex, unknown_ids) = extract_ids(&mu_unique, scene);

    let mut attempts = 0;
    let mut prompt = translation_prompt(&mu_unique, &mu_regex);
    let outcome = loop {
        attempts += 1;
        let response = ask(prompt, &mut log)?;
        let candidate = extract_formula_text(&response);
        match check_candidate(&candidate, scene, &unknown_ids) {
            Ok(f) => break TranslationOutcome::Translated(f),
            Err(diagnostic) => {
                log::warn!("translation attempt {attempts} rejected: {diagnostic}");
                if attempts >= max_attempts {
                    break TranslationOutcome::NeedsHumanRephrase { diagnostic };
                }
                prompt = correction_prompt(&mu_unique, &mu_regex, &candidate, &diagnostic);
            }
        }
    };
    Ok(TranslationSession {
        mission: mission.to_owned(),
        hierarchy,
        mu_unique,
        mu_regex,
        unknown_ids,
        outcome,
        attempts,
        transcript: log,
    })
}

// Guidance.

const WORKED_EXAMPLE: &str = "\
Example
Current attribute: corridor 6
Remaining mission: visit the office 7 and reach the desk 15
Answer:
<call>move(6, 7)</call>
<call>reach(7, 15)</call>
";

pub fn guidance_prompt(hierarchy: &str, motions: &[String], mission: &str, current: &str, remaining: &str) -> String {
    let list: Vec<String> = motions.iter().map(|m| format!("{m}(from_id, to_id)")).collect();
    format!(
        "Attribute hierarchy:\n{hierarchy}\n\
Available functions: {}. `move` goes between rooms or floors, `reach` goes to an object.\n\
Answer with a sequence of function calls, one per line, each wrapped as <call>...</call>, \
that completes the remaining mission from the current attribute.\n\n\
{WORKED_EXAMPLE}\n\
Mission: {mission}\n\
Current attribute: {current}\n\
Remaining mission: {remaining}\n\
Answer:\n",
        list.join(", ")
    )
}

fn call_tag() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)<call>(.*?)</call>").expect("valid regex"))
}

fn call_syntax() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*$").expect("valid regex"))
}

/// `name(a, b)` to a call; `None` when malformed.
pub fn parse_call(text: &str) -> Option<FunctionCall> {
    let c = call_syntax().captures(text)?;
    Some(FunctionCall::new(&c[1], c[2].parse().ok()?, c[3].parse().ok()?))
}

/// Tagged calls in a response. Malformed calls and unknown motions are
/// dropped and reported.
pub fn parse_calls(response: &str, motions: &[String]) -> (Vec<FunctionCall>, Vec<String>) {
    let mut calls = Vec::new();
    let mut warnings = Vec::new();
    for c in call_tag().captures_iter(response) {
        let body = c[1].trim();
        match parse_call(body) {
            Some(call) if motions.contains(&call.motion) => calls.push(call),
            Some(call) => warnings.push(format!("dropped call with unknown motion `{}`", call.motion)),
            None => warnings.push(format!("dropped malformed call `{body}`")),
        }
    }
    (calls, warnings)
}

pub fn default_motions() -> Vec<String> {
    vec![MOVE.to_owned(), REACH.to_owned()]
}

/// Every (context attribute, automaton state) pair the planner can look up:
/// contexts of all nodes times the live, non-accepting states.
pub fn guidance_keys(scene: &SceneGraph, dfa: &Dfa) -> Vec<(AttributeId, StateId)> {
    let mut contexts: Vec<AttributeId> = (0..scene.num_nodes() as NodeId)
        .filter_map(|s| scene.context_attribute(s))
        .collect();
    contexts.sort_unstable();
    contexts.dedup();
    contexts
        .into_iter()
        .flat_map(|c| (0..dfa.num_states()).map(move |q| (c, q)))
        .filter(|&(_, q)| !dfa.is_accepting(q) && dfa.is_live(q))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct GuidanceFetch {
    pub guidance: LlmGuidance,
    pub warnings: Vec<String>,
    /// Keys whose plan named an unknown attribute.
    pub rejected: Vec<(AttributeId, StateId)>,
    pub prompts_sent: usize,
}

/// One prompt per key; accepting and dead states get no prompt and no plan.
pub fn fetch_guidance(
    scene: &SceneGraph,
    dfa: &Dfa,
    mission: &str,
    keys: &[(AttributeId, StateId)],
    motions: &[String],
    transport: &mut dyn Transport,
) -> Result<GuidanceFetch, TransportError> {
    let hierarchy = scene.attribute_hierarchy().unwrap_or_default();
    let mut out = GuidanceFetch::default();
    for &(context, q) in keys {
        if dfa.is_accepting(q) || !dfa.is_live(q) {
            continue;
        }
        let current = scene
            .attribute(context)
            .map(|a| a.display_name())
            .unwrap_or_else(|| format!("attribute {context}"));
        let prompt = guidance_prompt(&hierarchy, motions, mission, &current, &remaining_mission(dfa, q, scene));
        let response = transport.send(&prompt, &format!("guidance-{context}-{q}"))?;
        out.prompts_sent += 1;
        let (calls, warnings) = parse_calls(&response, motions);
        for w in warnings {
            log::warn!("guidance ({context}, {q}): {w}");
            out.warnings.push(format!("({context}, {q}): {w}"));
        }
        if let Some(bad) = calls
            .iter()
            .flat_map(|c| [c.from, c.to])
            .find(|&id| scene.attribute(id).is_none())
        {
            let w = format!("({context}, {q}): plan rejected, unknown attribute {bad}");
            log::warn!("guidance {w}");
            out.warnings.push(w);
            out.rejected.push((context, q));
            continue;
        }
        if !calls.is_empty() {
            out.guidance.plans.insert((context, q), calls);
        }
    }
    Ok(out)
}
