//! Diagonalization sessions against black-box restricted learners.
//!
//! A session registers its element programs with the hypothesis space and
//! binds its self-referential languages lazily. Every search the constructions
//! leave unbounded runs up to `search_bound`; the session's languages are
//! defined by exactly these bounded searches, so their membership tests are
//! exact. Reports carry evidence that [`replay`] checks against the learner
//! and the space.

mod coolsep;
mod gsmon;
mod sd;
mod totalpsd;

pub use coolsep::CoolsepSession;
pub use gsmon::GsmonSession;
pub use sd::SdSession;
pub use totalpsd::TotalPsdSession;

use crate::coding::Nat;
use crate::criteria::{verify_monotonicity_witness, MonotonicityWitness};
use crate::hypospace::{Budget, HypothesisSpace, Index};
use crate::learnkit::{ask_psd, ask_sd, conjecture_on_prefix, run, Answer, Learner, LearnerKind, SharedLearner};
use crate::textkit::{SequencePrefix, Text};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub horizon: usize,
    pub enum_budget: Budget,
    pub search_bound: Nat,
    pub goal: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { horizon: 60, enum_budget: 500, search_bound: 200, goal: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerInput {
    Content(BTreeSet<Nat>),
    State { content: BTreeSet<Nat>, length: usize },
    Sequence(SequencePrefix),
}

impl LearnerInput {
    pub fn ask(&self, h: &dyn Learner, budget: Budget, space: &HypothesisSpace) -> Answer {
        match self {
            LearnerInput::Content(d) => ask_sd(h, d, budget, space),
            LearnerInput::State { content, length } => ask_psd(h, content, *length, budget, space),
            LearnerInput::Sequence(s) => conjecture_on_prefix(h, s.items(), budget, space),
        }
    }
}

/// One replayable claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "claim", rename_all = "snake_case")]
pub enum Evidence {
    /// The learner answers `answer` on `input`.
    Conjecture { input: LearnerInput, answer: Option<Index> },
    /// `x ∈ W_index`, witnessed by a decision or an enumeration.
    Member { index: Index, x: Nat },
    /// `x ∉ W_index`, decided exactly.
    NonMember { index: Index, x: Nat },
    /// At least `count` mind changes on the finite text `prefix`.
    MindChanges { prefix: SequencePrefix, count: usize },
    /// The starred learner violates Mon on `prefix`, a prefix of a text for `target`.
    MonViolation { prefix: SequencePrefix, target: Index, witness: MonotonicityWitness },
    /// Distinct languages: `x` lies in `left` and not in `right`.
    Separates { left: Index, right: Index, x: Nat },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Variant {
    InfiniteMindChanges { prefix: SequencePrefix, count: usize },
    WrongForever { prefix: SequencePrefix, positions: Vec<WrongPosition> },
    ConfusedPair { l: Index, l_prime: Index, hypothesis: Index },
    MonotonicityTrap { sigma_k: SequencePrefix, kept: Vec<Nat> },
    FailsToOvergeneralize { family: Nat, bound: Nat },
    SingletonNotLearned { element: Nat, bound: Nat },
    TotalityViolated { input: LearnerInput },
    BudgetExhausted { stage: String },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::InfiniteMindChanges { .. } => "InfiniteMindChanges",
            Variant::WrongForever { .. } => "WrongForever",
            Variant::ConfusedPair { .. } => "ConfusedPair",
            Variant::MonotonicityTrap { .. } => "MonotonicityTrap",
            Variant::FailsToOvergeneralize { .. } => "FailsToOvergeneralize",
            Variant::SingletonNotLearned { .. } => "SingletonNotLearned",
            Variant::TotalityViolated { .. } => "TotalityViolated",
            Variant::BudgetExhausted { .. } => "BudgetExhausted",
        }
    }

    pub fn is_definitive(&self) -> bool {
        !matches!(self, Variant::BudgetExhausted { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WrongPosition {
    pub position: usize,
    pub hypothesis: Index,
    pub element: Nat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub theorem: String,
    pub learner: String,
    pub variant: Variant,
    pub evidence: Vec<Evidence>,
    pub budgets: Budgets,
}

impl WitnessReport {
    /// `{"theorem", "variant", "detail", "learner", "evidence", "budgets"}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "theorem": self.theorem,
            "variant": self.variant.name(),
            "detail": self.variant,
            "learner": self.learner,
            "evidence": self.evidence,
            "budgets": self.budgets,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("{adversary} needs a {wanted} learner, got {got}")]
    KindMismatch { adversary: &'static str, wanted: LearnerKind, got: LearnerKind },
}

pub(crate) fn require_kind(
    adversary: &'static str,
    h: &SharedLearner,
    wanted: LearnerKind,
) -> Result<(), AdversaryError> {
    if h.kind() == wanted {
        Ok(())
    } else {
        Err(AdversaryError::KindMismatch { adversary, wanted, got: h.kind() })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("evidence item {0} does not replay")]
    Evidence(usize),
    #[error("report structure is inconsistent: {0}")]
    Structure(String),
}

/// Mind changes of the starred learner on a finite text, between consecutive
/// defined hypotheses.
pub fn count_mind_changes(h: &dyn Learner, prefix: &SequencePrefix, budget: Budget, space: &HypothesisSpace) -> usize {
    let seq = run(h, &Text::finite(prefix.clone()), prefix.len(), budget, space);
    let defined: Vec<Index> = seq.entries.into_iter().flatten().collect();
    defined.windows(2).filter(|w| w[0] != w[1]).count()
}

fn replay_one(ev: &Evidence, h: &dyn Learner, budget: Budget, space: &HypothesisSpace) -> bool {
    match ev {
        Evidence::Conjecture { input, answer } => input.ask(h, budget, space).index() == *answer,
        Evidence::Member { index, x } => space.witnessed_member(*index, *x, budget),
        Evidence::NonMember { index, x } => space.decide(*index, *x) == crate::hypospace::Decision::No,
        Evidence::MindChanges { prefix, count } => count_mind_changes(h, prefix, budget, space) >= *count,
        Evidence::MonViolation { prefix, target, witness } => {
            let seq = run(h, &Text::finite(prefix.clone()), prefix.len(), budget, space);
            let shown = prefix.content();
            shown.iter().all(|&x| space.decide(*target, x) == crate::hypospace::Decision::Yes)
                && verify_monotonicity_witness(space, &seq, witness, Some(*target), budget)
        }
        Evidence::Separates { left, right, x } => {
            space.witnessed_member(*left, *x, budget) && space.decide(*right, *x) == crate::hypospace::Decision::No
        }
    }
}

/// Replays every evidence item of `report` against `h`.
pub fn replay(report: &WitnessReport, h: &dyn Learner, space: &HypothesisSpace) -> Result<(), ReplayError> {
    for (i, ev) in report.evidence.iter().enumerate() {
        if !replay_one(ev, h, report.budgets.enum_budget, space) {
            return Err(ReplayError::Evidence(i));
        }
    }
    Ok(())
}

/// Guard against a session being re-entered for the same key while it is
/// computing it; re-entry reads as divergence.
pub(crate) struct Reentry<'a, K: Ord + Copy> {
    set: &'a std::sync::Mutex<BTreeSet<K>>,
    key: K,
}

impl<'a, K: Ord + Copy> Reentry<'a, K> {
    pub(crate) fn enter(set: &'a std::sync::Mutex<BTreeSet<K>>, key: K) -> Option<Self> {
        set.lock().expect("guard lock").insert(key).then_some(Reentry { set, key })
    }
}

impl<K: Ord + Copy> Drop for Reentry<'_, K> {
    fn drop(&mut self) {
        self.set.lock().expect("guard lock").remove(&self.key);
    }
}
