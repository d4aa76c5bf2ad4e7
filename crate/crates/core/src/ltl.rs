//! LTL syntax trees over scene-graph propositions.
//!
//! Formulas travel as whitespace-separated prefix notation (`& F p2 ! p9`);
//! the infix [`Display`](core::fmt::Display) form is only meant for logs.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::label::Label;

/// An atomic proposition `p_a`, true at the nodes of attribute `a`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Proposition {
    /// Canonical token, e.g. `p11`.
    pub id: String,
    /// Human-readable label, e.g. `oven 11`.
    pub display_name: String,
}

impl Proposition {
    pub fn new(id: impl Into<String>, display_name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            display_name: display_name.into(),
        }
    }
}

/// The set of propositions a formula may mention, plus accepted aliases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    props: BTreeMap<String, Proposition>,
    aliases: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("empty proposition id")]
    EmptyId,
    #[error("duplicate proposition id `{0}`")]
    Duplicate(String),
    #[error("alias `{alias}` refers to unknown proposition `{target}`")]
    DanglingAlias { alias: String, target: String },
}

impl Alphabet {
    pub fn new(props: impl IntoIterator<Item = Proposition>) -> Result<Self, AlphabetError> {
        let mut out = Self::default();
        for p in props {
            out.insert(p)?;
        }
        Ok(out)
    }

    /// Alphabet whose display names equal the ids.
    pub fn from_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<Self, AlphabetError> {
        Self::new(ids.into_iter().map(|id| Proposition::new(id, id)))
    }

    pub fn insert(&mut self, p: Proposition) -> Result<(), AlphabetError> {
        if p.id.is_empty() {
            return Err(AlphabetError::EmptyId);
        }
        if self.props.contains_key(&p.id) || self.aliases.contains_key(&p.id) {
            return Err(AlphabetError::Duplicate(p.id));
        }
        self.props.insert(p.id.clone(), p);
        Ok(())
    }

    pub fn add_alias(
        &mut self,
        alias: impl Into<String>,
        target: &str,
    ) -> Result<(), AlphabetError> {
        let alias = alias.into();
        if !self.props.contains_key(target) {
            return Err(AlphabetError::DanglingAlias {
                alias,
                target: target.to_string(),
            });
        }
        if self.props.contains_key(&alias) || self.aliases.contains_key(&alias) {
            return Err(AlphabetError::Duplicate(alias));
        }
        self.aliases.insert(alias, target.to_string());
        Ok(())
    }

    /// Canonical id for a token, following aliases.
    pub fn resolve(&self, token: &str) -> Option<&str> {
        if let Some((k, _)) = self.props.get_key_value(token) {
            return Some(k.as_str());
        }
        self.aliases.get(token).map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Option<&Proposition> {
        self.props.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.props.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Proposition> {
        self.props.values()
    }

    pub fn len(&self) -> usize {
        self.props.len()
    }

    pub fn is_empty(&self) -> bool {
        self.props.is_empty()
    }
}

/// LTL syntax tree.
///
/// `Release` only appears in negation normal form, where it is the dual of
/// a negated `Until`; it is never co-safe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Imply(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    Release(Box<LtlFormula>, Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    Always(Box<LtlFormula>),
}

use LtlFormula as F;

impl LtlFormula {
    pub fn atom(id: impl Into<String>) -> Self {
        F::Atom(id.into())
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Self) -> Self {
        F::Not(Box::new(a))
    }
    pub fn and(a: Self, b: Self) -> Self {
        F::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Self, b: Self) -> Self {
        F::Or(Box::new(a), Box::new(b))
    }
    pub fn imply(a: Self, b: Self) -> Self {
        F::Imply(Box::new(a), Box::new(b))
    }
    pub fn next(a: Self) -> Self {
        F::Next(Box::new(a))
    }
    pub fn until(a: Self, b: Self) -> Self {
        F::Until(Box::new(a), Box::new(b))
    }
    pub fn release(a: Self, b: Self) -> Self {
        F::Release(Box::new(a), Box::new(b))
    }
    pub fn eventually(a: Self) -> Self {
        F::Eventually(Box::new(a))
    }
    pub fn always(a: Self) -> Self {
        F::Always(Box::new(a))
    }

    /// Prefix operator token; `None` for atoms.
    fn op_token(&self) -> Option<&'static str> {
        Some(match self {
            F::True => "true",
            F::False => "false",
            F::Atom(_) => return None,
            F::Not(_) => "!",
            F::And(..) => "&",
            F::Or(..) => "|",
            F::Imply(..) => "=>",
            F::Next(_) => "X",
            F::Until(..) => "U",
            F::Release(..) => "R",
            F::Eventually(_) => "F",
            F::Always(_) => "G",
        })
    }

    pub fn children(&self) -> Vec<&LtlFormula> {
        match self {
            F::True | F::False | F::Atom(_) => Vec::new(),
            F::Not(a) | F::Next(a) | F::Eventually(a) | F::Always(a) => alloc::vec![&**a],
            F::And(a, b) | F::Or(a, b) | F::Imply(a, b) | F::Until(a, b) | F::Release(a, b) => {
                alloc::vec![&**a, &**b]
            }
        }
    }

    /// Subtree at a child-index path.
    pub fn subformula(&self, path: &[usize]) -> Option<&LtlFormula> {
        let mut cur = self;
        for &i in path {
            cur = *cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Atom ids occurring in the formula.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        if let F::Atom(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_props(out);
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Canonical wire form.
    pub fn to_prefix(&self) -> String {
        let mut out = String::new();
        self.write_prefix(&mut out);
        out
    }

    fn write_prefix(&self, out: &mut String) {
        if !out.is_empty() {
            out.push(' ');
        }
        match self {
            F::Atom(p) => out.push_str(p),
            other => {
                out.push_str(other.op_token().unwrap_or_default());
                for c in other.children() {
                    c.write_prefix(out);
                }
            }
        }
    }

    /// Checks every atom against an alphabet, returning the first stranger.
    pub fn check_alphabet(&self, alphabet: &Alphabet) -> Result<(), String> {
        for p in self.props() {
            if !alphabet.contains(&p) {
                return Err(p);
            }
        }
        Ok(())
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            F::True => write!(f, "true"),
            F::False => write!(f, "false"),
            F::Atom(p) => write!(f, "{p}"),
            F::Not(a) => write!(f, "¬{}", Paren(a)),
            F::And(a, b) => write!(f, "{} ∧ {}", Paren(a), Paren(b)),
            F::Or(a, b) => write!(f, "{} ∨ {}", Paren(a), Paren(b)),
            F::Imply(a, b) => write!(f, "{} ⇒ {}", Paren(a), Paren(b)),
            F::Next(a) => write!(f, "X {}", Paren(a)),
            F::Until(a, b) => write!(f, "{} U {}", Paren(a), Paren(b)),
            F::Release(a, b) => write!(f, "{} R {}", Paren(a), Paren(b)),
            F::Eventually(a) => write!(f, "F {}", Paren(a)),
            F::Always(a) => write!(f, "G {}", Paren(a)),
        }
    }
}

struct Paren<'a>(&'a LtlFormula);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            F::True | F::False | F::Atom(_) => write!(f, "{}", self.0),
            F::Not(a) if matches!(**a, F::Atom(_)) => write!(f, "{}", self.0),
            other => write!(f, "({other})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown token `{token}` at position {position}")]
    UnknownToken { token: String, position: usize },
    #[error("operator `{operator}` at position {position} is missing operands")]
    ArityError { operator: String, position: usize },
    #[error("empty formula")]
    Empty,
    #[error("trailing tokens after a complete formula, starting at position {position}")]
    TrailingTokens { position: usize },
}

/// Parses whitespace-tokenized prefix notation; atoms are resolved through
/// `alphabet` so aliases come back as their canonical ids.
pub fn parse_prefix(text: &str, alphabet: &Alphabet) -> Result<LtlFormula, ParseError> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut pos = 0;
    let f = parse_at(&tokens, &mut pos, alphabet, None)?;
    if pos != tokens.len() {
        return Err(ParseError::TrailingTokens { position: pos });
    }
    Ok(f)
}

fn parse_at(
    tokens: &[&str],
    pos: &mut usize,
    alphabet: &Alphabet,
    parent: Option<(&str, usize)>,
) -> Result<LtlFormula, ParseError> {
    let Some(&tok) = tokens.get(*pos) else {
        let (operator, position) = parent.unwrap_or(("", 0));
        return Err(ParseError::ArityError {
            operator: operator.to_string(),
            position,
        });
    };
    let here = *pos;
    *pos += 1;
    let mut operand = || parse_at(tokens, pos, alphabet, Some((tok, here))).map(Box::new);
    Ok(match tok {
        "true" => F::True,
        "false" => F::False,
        "!" => F::Not(operand()?),
        "X" => F::Next(operand()?),
        "F" => F::Eventually(operand()?),
        "G" => F::Always(operand()?),
        "&" => F::And(operand()?, operand()?),
        "|" => F::Or(operand()?, operand()?),
        "=>" => F::Imply(operand()?, operand()?),
        "U" => F::Until(operand()?, operand()?),
        "R" => F::Release(operand()?, operand()?),
        atom => match alphabet.resolve(atom) {
            Some(id) => F::Atom(id.to_string()),
            None => {
                return Err(ParseError::UnknownToken {
                    token: atom.to_string(),
                    position: here,
                })
            }
        },
    })
}

/// Negation normal form: `Not` only above atoms, `Imply` eliminated.
pub fn to_nnf(f: &LtlFormula) -> LtlFormula {
    nnf(f, false)
}

fn nnf(f: &LtlFormula, neg: bool) -> LtlFormula {
    match (f, neg) {
        (F::True, false) | (F::False, true) => F::True,
        (F::True, true) | (F::False, false) => F::False,
        (F::Atom(p), false) => F::Atom(p.clone()),
        (F::Atom(p), true) => F::not(F::Atom(p.clone())),
        (F::Not(a), n) => nnf(a, !n),
        (F::And(a, b), false) => F::and(nnf(a, false), nnf(b, false)),
        (F::And(a, b), true) => F::or(nnf(a, true), nnf(b, true)),
        (F::Or(a, b), false) => F::or(nnf(a, false), nnf(b, false)),
        (F::Or(a, b), true) => F::and(nnf(a, true), nnf(b, true)),
        (F::Imply(a, b), false) => F::or(nnf(a, true), nnf(b, false)),
        (F::Imply(a, b), true) => F::and(nnf(a, false), nnf(b, true)),
        (F::Next(a), n) => F::next(nnf(a, n)),
        (F::Until(a, b), false) => F::until(nnf(a, false), nnf(b, false)),
        (F::Until(a, b), true) => F::release(nnf(a, true), nnf(b, true)),
        (F::Release(a, b), false) => F::release(nnf(a, false), nnf(b, false)),
        (F::Release(a, b), true) => F::until(nnf(a, true), nnf(b, true)),
        (F::Eventually(a), false) => F::eventually(nnf(a, false)),
        (F::Eventually(a), true) => F::always(nnf(a, true)),
        (F::Always(a), false) => F::always(nnf(a, false)),
        (F::Always(a), true) => F::eventually(nnf(a, true)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CosafetyViolation {
    AlwaysOperator,
    /// A negated compound (in practice a negated `Until`, which turns into
    /// `Release` under NNF).
    NegationOnCompound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosafetyVerdict {
    pub is_cosafe: bool,
    /// Child-index path into the NNF of the checked formula.
    pub offending_subformula: Option<Vec<usize>>,
    pub reason: Option<CosafetyViolation>,
}

impl CosafetyVerdict {
    fn ok() -> Self {
        Self {
            is_cosafe: true,
            offending_subformula: None,
            reason: None,
        }
    }

    /// One-line diagnostic suitable for a correction prompt.
    pub fn diagnostic(&self, checked: &LtlFormula) -> Option<String> {
        let reason = self.reason?;
        let path = self.offending_subformula.as_deref().unwrap_or(&[]);
        let nnf = to_nnf(checked);
        let sub = nnf
            .subformula(path)
            .map(|s| s.to_prefix())
            .unwrap_or_default();
        Some(match reason {
            CosafetyViolation::AlwaysOperator => alloc::format!(
                "formula is not co-safe: its negation normal form uses the G (always) operator in `{sub}`"
            ),
            CosafetyViolation::NegationOnCompound => alloc::format!(
                "formula is not co-safe: a negated until produces a release operator in `{sub}`"
            ),
        })
    }
}

/// Syntactic co-safety: the NNF may use only `X`, `U` and `F`.
pub fn check_cosafe(f: &LtlFormula) -> CosafetyVerdict {
    let nnf = to_nnf(f);
    let mut path = Vec::new();
    match find_violation(&nnf, &mut path) {
        None => CosafetyVerdict::ok(),
        Some(reason) => CosafetyVerdict {
            is_cosafe: false,
            offending_subformula: Some(path),
            reason: Some(reason),
        },
    }
}

fn find_violation(f: &LtlFormula, path: &mut Vec<usize>) -> Option<CosafetyViolation> {
    match f {
        F::Always(_) => return Some(CosafetyViolation::AlwaysOperator),
        F::Release(..) => return Some(CosafetyViolation::NegationOnCompound),
        F::Not(a) if !matches!(**a, F::Atom(_)) => {
            return Some(CosafetyViolation::NegationOnCompound)
        }
        _ => {}
    }
    for (i, c) in f.children().into_iter().enumerate() {
        path.push(i);
        if let Some(r) = find_violation(c, path) {
            return Some(r);
        }
        path.pop();
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("formula is not co-safe")]
    NotCosafe,
}

/// Finite-trace satisfaction, used as a semantic reference for the automaton.
///
/// A word satisfies `f` iff one of its prefixes does. Positions past the end
/// of a prefix form the empty continuation: literals are false there while
/// `true` still holds, and `X`/`U`/`F` simply look at the continuation.
pub fn eval_trace(f: &LtlFormula, word: &[Label]) -> Result<bool, EvalError> {
    Ok(TraceEvaluator::new(f)?.eval(word))
}

#[derive(Debug, Clone)]
enum EvalNode {
    True,
    False,
    Lit(String, bool),
    And(usize, usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
    Ev(usize),
}

/// [`eval_trace`] for one formula, reusable across words.
#[derive(Debug, Clone)]
pub struct TraceEvaluator {
    /// Post-order; the root is last.
    nodes: Vec<EvalNode>,
}

impl TraceEvaluator {
    pub fn new(f: &LtlFormula) -> Result<Self, EvalError> {
        if !check_cosafe(f).is_cosafe {
            return Err(EvalError::NotCosafe);
        }
        let mut nodes = Vec::new();
        flatten(&to_nnf(f), &mut nodes);
        Ok(Self { nodes })
    }

    /// Some prefix of `word` (possibly empty) satisfies the formula.
    pub fn eval(&self, word: &[Label]) -> bool {
        (0..=word.len()).any(|n| self.holds(&word[..n]))
    }

    /// Satisfaction by exactly `word` followed by the empty continuation.
    pub fn holds(&self, word: &[Label]) -> bool {
        let n = word.len();
        let width = n + 1;
        let mut val = vec![false; self.nodes.len() * width];
        for i in (0..=n).rev() {
            let next = (i + 1).min(n);
            for (k, node) in self.nodes.iter().enumerate() {
                let at = |j: usize, pos: usize| val[j * width + pos];
                let v = match node {
                    EvalNode::True => true,
                    EvalNode::False => false,
                    EvalNode::Lit(p, pos) => i < n && word[i].contains(p) == *pos,
                    EvalNode::And(a, b) => at(*a, i) && at(*b, i),
                    EvalNode::Or(a, b) => at(*a, i) || at(*b, i),
                    EvalNode::Next(a) => at(*a, next),
                    EvalNode::Until(a, b) => at(*b, i) || (i < n && at(*a, i) && at(k, next)),
                    EvalNode::Ev(a) => at(*a, i) || (i < n && at(k, next)),
                };
                val[k * width + i] = v;
            }
        }
        val[(self.nodes.len() - 1) * width]
    }
}

fn flatten(f: &LtlFormula, out: &mut Vec<EvalNode>) -> usize {
    let node = match f {
        F::True => EvalNode::True,
        F::False => EvalNode::False,
        F::Atom(p) => EvalNode::Lit(p.clone(), true),
        F::Not(a) => match &**a {
            F::Atom(p) => EvalNode::Lit(p.clone(), false),
            _ => unreachable!("NNF negation over a compound"),
        },
        F::And(a, b) => EvalNode::And(flatten(a, out), flatten(b, out)),
        F::Or(a, b) => EvalNode::Or(flatten(a, out), flatten(b, out)),
        F::Next(a) => EvalNode::Next(flatten(a, out)),
        F::Until(a, b) => EvalNode::Until(flatten(a, out), flatten(b, out)),
        F::Eventually(a) => EvalNode::Ev(flatten(a, out)),
        F::Imply(..) | F::Release(..) | F::Always(_) => {
            unreachable!("non-co-safe operator after the co-safety check")
        }
    };
    out.push(node);
    out.len() - 1
}

/// Parses a formula file: one prefix formula per line, `#` starts a comment.
pub fn parse_formula_lines(
    text: &str,
    alphabet: &Alphabet,
) -> Result<Vec<LtlFormula>, (usize, ParseError)> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        out.push(parse_prefix(body, alphabet).map_err(|e| (lineno + 1, e))?);
    }
    Ok(out)
}
