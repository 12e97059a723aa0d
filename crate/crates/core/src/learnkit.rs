//! Learners under the three interaction operators, starred adapters, budgeted
//! runs and table learners loaded from files.

use crate::coding::Nat;
use crate::hypospace::{Budget, HypothesisSpace, Index};
use crate::textkit::{content, Item, SequencePrefix, Text};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

/// Interaction operator a learner is written for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    #[serde(rename = "G")]
    Gold,
    #[serde(rename = "Psd")]
    PartiallySetDriven,
    #[serde(rename = "Sd")]
    SetDriven,
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Gold => "G",
            LearnerKind::PartiallySetDriven => "Psd",
            LearnerKind::SetDriven => "Sd",
        })
    }
}

/// What a learner is shown.
#[derive(Debug, Clone, Copy)]
pub enum Observation<'a> {
    Sequence(&'a [Item]),
    State(&'a BTreeSet<Nat>, usize),
    Content(&'a BTreeSet<Nat>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    Defined(Index),
    NoAnswerWithinBudget,
}

impl Answer {
    pub fn index(self) -> Option<Index> {
        match self {
            Answer::Defined(e) => Some(e),
            Answer::NoAnswerWithinBudget => None,
        }
    }
}

impl From<Option<Index>> for Answer {
    fn from(o: Option<Index>) -> Self {
        o.map_or(Answer::NoAnswerWithinBudget, Answer::Defined)
    }
}

/// A black-box learner.
///
/// Implementations must be deterministic, and an answer given at budget `b`
/// must be given again at every larger budget. An observation of the wrong
/// shape for the learner's kind yields no answer.
pub trait Learner: Send + Sync {
    fn name(&self) -> &str;
    fn kind(&self) -> LearnerKind;
    fn conjecture(&self, obs: Observation<'_>, budget: Budget, space: &HypothesisSpace) -> Answer;
}

pub type SharedLearner = Arc<dyn Learner>;

type SdFn = dyn Fn(&BTreeSet<Nat>, Budget, &HypothesisSpace) -> Answer + Send + Sync;
type PsdFn = dyn Fn(&BTreeSet<Nat>, usize, Budget, &HypothesisSpace) -> Answer + Send + Sync;
type GoldFn = dyn Fn(&[Item], Budget, &HypothesisSpace) -> Answer + Send + Sync;

enum Body {
    Sd(Box<SdFn>),
    Psd(Box<PsdFn>),
    Gold(Box<GoldFn>),
}

/// Learner backed by a closure.
pub struct FnLearner {
    name: String,
    body: Body,
}

impl FnLearner {
    pub fn sd<F>(name: &str, f: F) -> SharedLearner
    where
        F: Fn(&BTreeSet<Nat>, Budget, &HypothesisSpace) -> Answer + Send + Sync + 'static,
    {
        Arc::new(FnLearner { name: name.to_string(), body: Body::Sd(Box::new(f)) })
    }

    pub fn psd<F>(name: &str, f: F) -> SharedLearner
    where
        F: Fn(&BTreeSet<Nat>, usize, Budget, &HypothesisSpace) -> Answer + Send + Sync + 'static,
    {
        Arc::new(FnLearner { name: name.to_string(), body: Body::Psd(Box::new(f)) })
    }

    pub fn gold<F>(name: &str, f: F) -> SharedLearner
    where
        F: Fn(&[Item], Budget, &HypothesisSpace) -> Answer + Send + Sync + 'static,
    {
        Arc::new(FnLearner { name: name.to_string(), body: Body::Gold(Box::new(f)) })
    }
}

impl Learner for FnLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> LearnerKind {
        match self.body {
            Body::Sd(_) => LearnerKind::SetDriven,
            Body::Psd(_) => LearnerKind::PartiallySetDriven,
            Body::Gold(_) => LearnerKind::Gold,
        }
    }

    fn conjecture(&self, obs: Observation<'_>, budget: Budget, space: &HypothesisSpace) -> Answer {
        match (&self.body, obs) {
            (Body::Sd(f), Observation::Content(d)) => f(d, budget, space),
            (Body::Psd(f), Observation::State(d, t)) => f(d, t, budget, space),
            (Body::Gold(f), Observation::Sequence(s)) => f(s, budget, space),
            _ => Answer::NoAnswerWithinBudget,
        }
    }
}

/// The kind-appropriate view of a prefix under `kind`'s interaction operator.
pub fn conjecture_on_prefix(
    h: &dyn Learner,
    prefix: &[Item],
    budget: Budget,
    space: &HypothesisSpace,
) -> Answer {
    match h.kind() {
        LearnerKind::Gold => h.conjecture(Observation::Sequence(prefix), budget, space),
        LearnerKind::PartiallySetDriven => {
            h.conjecture(Observation::State(&content(prefix), prefix.len()), budget, space)
        }
        LearnerKind::SetDriven => h.conjecture(Observation::Content(&content(prefix)), budget, space),
    }
}

/// Convenience calls that build the observation.
pub fn ask_sd(h: &dyn Learner, d: &BTreeSet<Nat>, budget: Budget, space: &HypothesisSpace) -> Answer {
    h.conjecture(Observation::Content(d), budget, space)
}

pub fn ask_psd(
    h: &dyn Learner,
    d: &BTreeSet<Nat>,
    t: usize,
    budget: Budget,
    space: &HypothesisSpace,
) -> Answer {
    h.conjecture(Observation::State(d, t), budget, space)
}

/// The G-learner `h*` simulating `h` on sequences.
pub struct Starred {
    inner: SharedLearner,
    name: String,
}

/// `star(h)`; a G-learner is returned unchanged.
pub fn star(h: SharedLearner) -> SharedLearner {
    if h.kind() == LearnerKind::Gold {
        return h;
    }
    let name = format!("{}*", h.name());
    Arc::new(Starred { inner: h, name })
}

impl Learner for Starred {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> LearnerKind {
        LearnerKind::Gold
    }

    fn conjecture(&self, obs: Observation<'_>, budget: Budget, space: &HypothesisSpace) -> Answer {
        match obs {
            Observation::Sequence(s) => conjecture_on_prefix(self.inner.as_ref(), s, budget, space),
            _ => Answer::NoAnswerWithinBudget,
        }
    }
}

/// A set-driven learner viewed as partially set-driven (ignores the length).
pub struct SdAsPsd {
    inner: SharedLearner,
    name: String,
}

pub fn wrap_as_psd(h: SharedLearner) -> SharedLearner {
    match h.kind() {
        LearnerKind::SetDriven => {
            let name = format!("{}[psd]", h.name());
            Arc::new(SdAsPsd { inner: h, name })
        }
        _ => h,
    }
}

impl Learner for SdAsPsd {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> LearnerKind {
        LearnerKind::PartiallySetDriven
    }

    fn conjecture(&self, obs: Observation<'_>, budget: Budget, space: &HypothesisSpace) -> Answer {
        match obs {
            Observation::State(d, _) => self.inner.conjecture(Observation::Content(d), budget, space),
            _ => Answer::NoAnswerWithinBudget,
        }
    }
}

/// Hypotheses `p(0..=horizon)` on one text, with the prefix they were made on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearningSequence {
    pub prefix: SequencePrefix,
    pub entries: Vec<Option<Index>>,
}

impl LearningSequence {
    pub fn new(prefix: SequencePrefix, entries: Vec<Option<Index>>) -> Self {
        LearningSequence { prefix, entries }
    }

    /// A bare sequence of hypotheses with an all-pause prefix, for checker tests.
    pub fn from_entries(entries: Vec<Option<Index>>) -> Self {
        let n = entries.len().saturating_sub(1);
        LearningSequence { prefix: SequencePrefix(vec![Item::Pause; n]), entries }
    }

    pub fn horizon(&self) -> usize {
        self.entries.len().saturating_sub(1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `β(h, T)(i)` for `i = 0..=horizon`; partiality becomes `None`.
pub fn run(h: &dyn Learner, text: &Text, horizon: usize, budget: Budget, space: &HypothesisSpace) -> LearningSequence {
    let prefix = text.prefix(horizon, space);
    let items = prefix.items();
    let mut entries = Vec::with_capacity(horizon + 1);
    let mut seen = BTreeSet::new();
    for i in 0..=horizon {
        if i > 0 {
            if let Item::Elem(x) = items[i - 1] {
                seen.insert(x);
            }
        }
        let answer = match h.kind() {
            LearnerKind::Gold => h.conjecture(Observation::Sequence(&items[..i]), budget, space),
            LearnerKind::PartiallySetDriven => h.conjecture(Observation::State(&seen, i), budget, space),
            LearnerKind::SetDriven => h.conjecture(Observation::Content(&seen), budget, space),
        };
        entries.push(answer.index());
    }
    LearningSequence { prefix, entries }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TableKey {
    Set(BTreeSet<Nat>),
    State(BTreeSet<Nat>, usize),
    Sequence(Vec<Item>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate key {key}")]
    DuplicateKey { line: usize, key: String },
    #[error("cannot read table: {0}")]
    Io(String),
}

/// Finite lookup learner.
///
/// File format, one entry per line:
///
/// ```text
/// kind = psd          # optional: sd | psd | g (inferred from keys otherwise)
/// default -> none     # optional: a Nat or `none`
/// ∅;0 -> 4            # psd key: sorted set, `;t`
/// 1,2 -> 7            # sd key
/// ```
///
/// G keys are sequence literals (`0,#,2`) and require `kind = g`. Lines whose
/// first character is `#` and that are not G keys are comments.
#[derive(Debug, Clone)]
pub struct TableLearner {
    name: String,
    kind: LearnerKind,
    map: BTreeMap<TableKey, Nat>,
    default: Option<Nat>,
}

impl TableLearner {
    pub fn new(name: &str, kind: LearnerKind, map: BTreeMap<TableKey, Nat>, default: Option<Nat>) -> Self {
        TableLearner { name: name.to_string(), kind, map, default }
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path).map_err(|e| TableError::Io(e.to_string()))?;
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("table");
        Self::parse(name, &text)
    }

    pub fn parse(name: &str, text: &str) -> Result<Self, TableError> {
        let mut kind: Option<LearnerKind> = None;
        let mut default = None;
        let mut raw: Vec<(usize, String, Nat)> = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = line.trim();
            if line.is_empty() || is_comment(line) {
                continue;
            }
            let err = |message: &str| TableError::Parse { line: line_no, message: message.to_string() };
            if let Some(rest) = line.strip_prefix("kind") {
                let value = rest.trim_start().strip_prefix('=').ok_or_else(|| err("expected `kind = ...`"))?;
                kind = Some(match value.trim() {
                    "sd" | "Sd" => LearnerKind::SetDriven,
                    "psd" | "Psd" => LearnerKind::PartiallySetDriven,
                    "g" | "G" => LearnerKind::Gold,
                    _ => return Err(err("unknown kind")),
                });
                continue;
            }
            let (key, value) = line.split_once("->").ok_or_else(|| err("expected `key -> value`"))?;
            let value = value.trim();
            if key.trim() == "default" {
                default = match value {
                    "none" | "NoAnswer" => None,
                    v => Some(v.parse::<Nat>().map_err(|_| err("default is not a Nat"))?),
                };
                continue;
            }
            let value = value.parse::<Nat>().map_err(|_| err("value is not a Nat"))?;
            raw.push((line_no, key.trim().to_string(), value));
        }
        let kind = kind.unwrap_or_else(|| {
            if raw.iter().any(|(_, k, _)| k.contains(';')) {
                LearnerKind::PartiallySetDriven
            } else {
                LearnerKind::SetDriven
            }
        });
        let mut map = BTreeMap::new();
        for (line, key, value) in raw {
            let parsed = parse_key(kind, &key).map_err(|message| TableError::Parse { line, message })?;
            if map.insert(parsed, value).is_some() {
                return Err(TableError::DuplicateKey { line, key });
            }
        }
        Ok(TableLearner { name: name.to_string(), kind, map, default })
    }

    pub fn into_shared(self) -> SharedLearner {
        Arc::new(self)
    }
}

fn is_comment(line: &str) -> bool {
    if !line.starts_with('#') {
        return false;
    }
    let rest = line[1..].trim_start();
    !(rest.starts_with(',') || rest.starts_with("->"))
}

fn parse_set(s: &str) -> Result<BTreeSet<Nat>, String> {
    let s = s.trim();
    if s.is_empty() || s == "∅" || s == "{}" {
        return Ok(BTreeSet::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<Nat>().map_err(|_| format!("bad set element {t:?}")))
        .collect()
}

fn parse_key(kind: LearnerKind, key: &str) -> Result<TableKey, String> {
    match kind {
        LearnerKind::SetDriven => {
            if key.contains(';') {
                return Err("set-driven keys take no length".into());
            }
            parse_set(key).map(TableKey::Set)
        }
        LearnerKind::PartiallySetDriven => {
            let (set, t) = key.split_once(';').ok_or("partially set-driven keys need `;t`")?;
            let t = t.trim().parse::<usize>().map_err(|_| format!("bad length {t:?}"))?;
            Ok(TableKey::State(parse_set(set)?, t))
        }
        LearnerKind::Gold => {
            let seq = if key == "ε" { Ok(SequencePrefix::empty()) } else { key.parse::<SequencePrefix>() };
            seq.map(|p| TableKey::Sequence(p.0)).map_err(|e| e.to_string())
        }
    }
}

impl Learner for TableLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> LearnerKind {
        self.kind
    }

    fn conjecture(&self, obs: Observation<'_>, _budget: Budget, _space: &HypothesisSpace) -> Answer {
        let key = match (self.kind, obs) {
            (LearnerKind::SetDriven, Observation::Content(d)) => TableKey::Set(d.clone()),
            (LearnerKind::PartiallySetDriven, Observation::State(d, t)) => TableKey::State(d.clone(), t),
            (LearnerKind::Gold, Observation::Sequence(s)) => TableKey::Sequence(s.to_vec()),
            _ => return Answer::NoAnswerWithinBudget,
        };
        self.map.get(&key).copied().or(self.default).map(Index::from_code).into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[Nat]) -> BTreeSet<Nat> {
        xs.iter().copied().collect()
    }

    #[test]
    fn table_parsing() {
        let h = TableLearner::parse("t", "# header\n∅;0 -> 4\n").unwrap();
        assert_eq!(h.kind(), LearnerKind::PartiallySetDriven);
        let s = HypothesisSpace::new();
        assert_eq!(ask_psd(&h, &set(&[]), 0, 0, &s), Answer::Defined(Index::from_code(4)));
        assert_eq!(ask_psd(&h, &set(&[]), 1, 0, &s), Answer::NoAnswerWithinBudget);

        let dup = TableLearner::parse("t", "1,2 -> 3\n2,1 -> 4\n").unwrap_err();
        assert_eq!(dup, TableError::DuplicateKey { line: 2, key: "2,1".into() });

        let bad = TableLearner::parse("t", "1,2 -> 3\nnonsense\n").unwrap_err();
        assert!(matches!(bad, TableError::Parse { line: 2, .. }));

        let g = TableLearner::parse("t", "kind = g\n#,1 -> 5\ndefault -> 2\n").unwrap();
        let seq: SequencePrefix = "#,1".parse().unwrap();
        assert_eq!(g.conjecture(Observation::Sequence(seq.items()), 0, &s), Answer::Defined(Index::from_code(5)));
        assert_eq!(g.conjecture(Observation::Sequence(&[]), 0, &s), Answer::Defined(Index::from_code(2)));
    }

    #[test]
    fn star_views() {
        let s = HypothesisSpace::new();
        let h = FnLearner::sd("sd", |d, _, sp| Answer::Defined(sp.ind(d)));
        let hs = star(h.clone());
        let seq: SequencePrefix = "0,#,0".parse().unwrap();
        assert_eq!(
            hs.conjecture(Observation::Sequence(seq.items()), 1, &s),
            Answer::Defined(s.ind(&set(&[0])))
        );
        let psd = FnLearner::psd("psd", |d, t, _, sp| Answer::Defined(sp.pad(sp.ind(d), &[t as Nat])));
        let ps = star(psd);
        let two: SequencePrefix = "#,#".parse().unwrap();
        assert_eq!(
            ps.conjecture(Observation::Sequence(two.items()), 1, &s),
            Answer::Defined(s.pad(s.ind(&set(&[])), &[2]))
        );
        let twice = star(hs.clone());
        assert!(Arc::ptr_eq(&twice, &hs));
    }

    #[test]
    fn run_on_empty_canonical_text() {
        let s = HypothesisSpace::new();
        let h = FnLearner::sd("sd", |d, _, sp| Answer::Defined(sp.ind(d)));
        let t = Text::canonical(s.ind(&set(&[])));
        let seq = run(h.as_ref(), &t, 4, 10, &s);
        assert_eq!(seq.entries, vec![Some(s.ind(&set(&[]))); 5]);
        assert_eq!(seq.horizon(), 4);
    }

    #[test]
    fn wrong_observation_shape_is_no_answer() {
        let s = HypothesisSpace::new();
        let h = FnLearner::sd("sd", |d, _, sp| Answer::Defined(sp.ind(d)));
        assert_eq!(h.conjecture(Observation::State(&set(&[]), 0), 1, &s), Answer::NoAnswerWithinBudget);
        let w = wrap_as_psd(h);
        assert_eq!(w.kind(), LearnerKind::PartiallySetDriven);
        assert_eq!(ask_psd(w.as_ref(), &set(&[3]), 9, 1, &s), Answer::Defined(s.ind(&set(&[3]))));
    }
}
