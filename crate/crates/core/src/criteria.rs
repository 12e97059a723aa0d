//! Finite-horizon checkers for Ex, Bc, SMon and Mon.
//!
//! Verdicts are three-valued. A refutation always carries a witness that can be
//! replayed against the hypothesis space; anything the horizon or the
//! enumeration budget cannot settle is reported as inconclusive.

use crate::coding::Nat;
use crate::hypospace::{Budget, Decision, HypothesisSpace, Index, LangEquality};
use crate::learnkit::{conjecture_on_prefix, run, Learner, LearningSequence};
use crate::textkit::{content, Block, Item, SequencePrefix, Text};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "ex")]
    Ex,
    #[serde(rename = "bc")]
    Bc,
    #[serde(rename = "smon")]
    SMon,
    #[serde(rename = "mon")]
    Mon,
}

impl std::str::FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ex" => Ok(Criterion::Ex),
            "bc" => Ok(Criterion::Bc),
            "smon" => Ok(Criterion::SMon),
            "mon" => Ok(Criterion::Mon),
            other => Err(format!("unknown criterion {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    Exact,
    AtBudget(Budget),
}

/// `x ∈ W_{p(n)}` but `x ∉ W_{p(m)}` with `n < m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityWitness {
    pub n: usize,
    pub m: usize,
    pub x: Nat,
    pub tier: Tier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Monotonicity(MonotonicityWitness),
    /// Hypothesis at `n` differs from the target; `wrong_positions` lists every
    /// refuted entry of the sequence.
    Language {
        n: usize,
        index: Index,
        refutation: LangEquality,
        wrong_positions: Vec<usize>,
    },
    /// Undefined entry after every target element up to the bound was shown.
    Undefined { n: usize },
    /// Mind change at the end of the horizon.
    Unstable { n: usize, m: usize, before: Index, after: Index },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InconclusiveReason {
    BudgetExhausted,
    HorizonExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confirmation {
    pub n0: Option<usize>,
    pub certificate: Option<LangEquality>,
    /// False when some hypothesis was only inspected up to the budget.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionVerdict {
    Confirmed(Confirmation),
    Refuted(Witness),
    Inconclusive(InconclusiveReason),
}

impl CriterionVerdict {
    pub fn is_confirmed(&self) -> bool {
        matches!(self, CriterionVerdict::Confirmed(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, CriterionVerdict::Refuted(_))
    }

    pub fn monotonicity_witness(&self) -> Option<MonotonicityWitness> {
        match self {
            CriterionVerdict::Refuted(Witness::Monotonicity(w)) => Some(*w),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CriterionVerdict::Confirmed(_) => "Confirmed",
            CriterionVerdict::Refuted(_) => "Refuted",
            CriterionVerdict::Inconclusive(_) => "Inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    pub budget: Budget,
    pub bound: Nat,
    pub allow_budget_witness: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { budget: 500, bound: 100, allow_budget_witness: false }
    }
}

/// First prefix length after which every target element `<= bound` has appeared.
fn completion_point(space: &HypothesisSpace, seq: &LearningSequence, target: Index, bound: Nat) -> Option<usize> {
    let needed: Vec<Nat> = (0..=bound).filter(|&x| space.decide(target, x) == Decision::Yes).collect();
    let mut seen = BTreeSet::new();
    for n in 0..=seq.horizon() {
        if needed.iter().all(|x| seen.contains(x)) {
            return Some(n);
        }
        if let Some(Item::Elem(x)) = seq.prefix.items().get(n) {
            seen.insert(*x);
        }
    }
    None
}

fn undefined_after_completion(
    space: &HypothesisSpace,
    seq: &LearningSequence,
    target: Index,
    bound: Nat,
) -> Option<usize> {
    let from = completion_point(space, seq, target, bound)?;
    (from..seq.len()).find(|&n| seq.entries[n].is_none())
}

pub fn check_ex(space: &HypothesisSpace, seq: &LearningSequence, target: Index, opts: CheckOptions) -> CriterionVerdict {
    if seq.is_empty() {
        return CriterionVerdict::Inconclusive(InconclusiveReason::HorizonExhausted);
    }
    if let Some(n) = undefined_after_completion(space, seq, target, opts.bound) {
        return CriterionVerdict::Refuted(Witness::Undefined { n });
    }
    let h = seq.horizon();
    let Some(last) = seq.entries[h] else {
        return CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted);
    };
    let mut n0 = h;
    while n0 > 0 && seq.entries[n0 - 1] == Some(last) {
        n0 -= 1;
    }
    if n0 == h && h > 0 {
        if let Some(before) = seq.entries[h - 1] {
            return CriterionVerdict::Refuted(Witness::Unstable { n: h - 1, m: h, before, after: last });
        }
    }
    match space.lang_equal(last, target, opts.budget, opts.bound) {
        LangEquality::Confirmed => CriterionVerdict::Confirmed(Confirmation {
            n0: Some(n0),
            certificate: Some(LangEquality::Confirmed),
            exact: space.is_decidable(last),
        }),
        LangEquality::Inconclusive => CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted),
        refutation => CriterionVerdict::Refuted(Witness::Language {
            n: n0,
            index: last,
            refutation,
            wrong_positions: (n0..=h).collect(),
        }),
    }
}

pub fn check_bc(space: &HypothesisSpace, seq: &LearningSequence, target: Index, opts: CheckOptions) -> CriterionVerdict {
    if seq.is_empty() {
        return CriterionVerdict::Inconclusive(InconclusiveReason::HorizonExhausted);
    }
    if let Some(n) = undefined_after_completion(space, seq, target, opts.bound) {
        return CriterionVerdict::Refuted(Witness::Undefined { n });
    }
    let mut cache: HashMap<Index, LangEquality> = HashMap::new();
    let mut judge = |e: Index| *cache.entry(e).or_insert_with(|| space.lang_equal(e, target, opts.budget, opts.bound));
    let results: Vec<Option<LangEquality>> = seq.entries.iter().map(|e| e.map(&mut judge)).collect();
    let h = seq.horizon();
    match results[h] {
        None => CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted),
        Some(LangEquality::Confirmed) => {
            let mut n0 = h;
            while n0 > 0 && results[n0 - 1] == Some(LangEquality::Confirmed) {
                n0 -= 1;
            }
            let exact = seq.entries[n0..].iter().flatten().all(|e| space.is_decidable(*e));
            CriterionVerdict::Confirmed(Confirmation {
                n0: Some(n0),
                certificate: Some(LangEquality::Confirmed),
                exact,
            })
        }
        Some(LangEquality::Inconclusive) => CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted),
        Some(refutation) => CriterionVerdict::Refuted(Witness::Language {
            n: h,
            index: seq.entries[h].expect("defined"),
            refutation,
            wrong_positions: results
                .iter()
                .enumerate()
                .filter(|(_, r)| r.is_some_and(LangEquality::is_refuted))
                .map(|(n, _)| n)
                .collect(),
        }),
    }
}

/// Shared search for SMon (`target = None`) and Mon.
///
/// Violations are searched by `m` first, then `n`, then `x`, so the witness
/// names the earliest hypothesis that drops something.
fn monotonicity_search(
    space: &HypothesisSpace,
    seq: &LearningSequence,
    target: Option<Index>,
    opts: CheckOptions,
) -> CriterionVerdict {
    let budget = opts.budget;
    let mut candidates: HashMap<Index, Vec<Nat>> = HashMap::new();
    let target_listing: Vec<Nat> = target.map(|t| space.enumerate(t, budget).into_iter().collect()).unwrap_or_default();
    let mut candidates_of = |e: Index| -> Vec<Nat> {
        candidates
            .entry(e)
            .or_insert_with(|| {
                let mut xs: BTreeSet<Nat> = space.enumerate(e, budget);
                if let Some(t) = target {
                    xs.retain(|&x| space.decide(t, x) == Decision::Yes);
                    xs.extend(target_listing.iter().copied().filter(|&x| space.decide(e, x) == Decision::Yes));
                }
                xs.into_iter().collect()
            })
            .clone()
    };
    let mut pair_cache: HashMap<(Index, Index), Option<(Nat, Tier)>> = HashMap::new();
    let mut first_budget_witness: Option<MonotonicityWitness> = None;

    for m in 0..seq.len() {
        let Some(hm) = seq.entries[m] else { continue };
        let mut tried = BTreeSet::new();
        for n in 0..m {
            let Some(hn) = seq.entries[n] else { continue };
            if hn == hm || !tried.insert(hn) {
                continue;
            }
            let found = match pair_cache.get(&(hn, hm)) {
                Some(f) => *f,
                None => {
                    let mut exact = None;
                    let mut at_budget = None;
                    let listed_m = space.enumerate(hm, budget);
                    for x in candidates_of(hn) {
                        match space.decide(hm, x) {
                            Decision::No => {
                                exact = Some((x, Tier::Exact));
                                break;
                            }
                            Decision::NotDecidable if at_budget.is_none() && !listed_m.contains(&x) => {
                                at_budget = Some((x, Tier::AtBudget(budget)));
                            }
                            _ => {}
                        }
                    }
                    let f = exact.or(at_budget);
                    pair_cache.insert((hn, hm), f);
                    f
                }
            };
            match found {
                Some((x, Tier::Exact)) => {
                    return CriterionVerdict::Refuted(Witness::Monotonicity(MonotonicityWitness {
                        n,
                        m,
                        x,
                        tier: Tier::Exact,
                    }))
                }
                Some((x, tier)) if first_budget_witness.is_none() => {
                    first_budget_witness = Some(MonotonicityWitness { n, m, x, tier });
                }
                _ => {}
            }
        }
    }
    if let Some(w) = first_budget_witness {
        return if opts.allow_budget_witness {
            CriterionVerdict::Refuted(Witness::Monotonicity(w))
        } else {
            CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted)
        };
    }
    let all_decidable = seq.entries.iter().flatten().all(|e| space.is_decidable(*e))
        && target.is_none_or(|t| space.is_decidable(t));
    if all_decidable {
        CriterionVerdict::Confirmed(Confirmation { n0: None, certificate: None, exact: true })
    } else {
        CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted)
    }
}

pub fn check_smon(space: &HypothesisSpace, seq: &LearningSequence, opts: CheckOptions) -> CriterionVerdict {
    monotonicity_search(space, seq, None, opts)
}

/// Mon against the declared content of the whole text.
pub fn check_mon(space: &HypothesisSpace, seq: &LearningSequence, content: Index, opts: CheckOptions) -> CriterionVerdict {
    monotonicity_search(space, seq, Some(content), opts)
}

/// Replays a monotonicity witness on raw data. With a `target` the element must
/// also belong to it (Mon); `Exact` witnesses need an exact exclusion.
pub fn verify_monotonicity_witness(
    space: &HypothesisSpace,
    seq: &LearningSequence,
    w: &MonotonicityWitness,
    target: Option<Index>,
    budget: Budget,
) -> bool {
    let (Some(Some(hn)), Some(Some(hm))) = (seq.entries.get(w.n), seq.entries.get(w.m)) else {
        return false;
    };
    if w.n >= w.m || !space.witnessed_member(*hn, w.x, budget) {
        return false;
    }
    if let Some(t) = target {
        if space.decide(t, w.x) != Decision::Yes {
            return false;
        }
    }
    match w.tier {
        Tier::Exact => space.decide(*hm, w.x) == Decision::No,
        Tier::AtBudget(b) => space.decide(*hm, w.x) != Decision::Yes && !space.enumerate(*hm, b).contains(&w.x),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CriteriaError {
    #[error("witness (n={n}, m={m}, x={x}) does not re-verify")]
    InvalidWitness { n: usize, m: usize, x: Nat },
}

/// Turns an SMon violation of `h*` on `text` into a text on which `h*` violates
/// Mon: `T[m] ⌢ x ⌢ T(m) ⌢ T(m+1) ⌢ …`.
pub fn mon_from_smon_witness(
    space: &HypothesisSpace,
    h: &dyn Learner,
    text: &Text,
    w: &MonotonicityWitness,
    budget: Budget,
) -> Result<Text, CriteriaError> {
    let invalid = CriteriaError::InvalidWitness { n: w.n, m: w.m, x: w.x };
    if w.n >= w.m {
        return Err(invalid);
    }
    let prefix = text.prefix(w.m, space);
    let before = conjecture_on_prefix(h, &prefix.items()[..w.n], budget, space).index();
    let after = conjecture_on_prefix(h, prefix.items(), budget, space).index();
    let (Some(before), Some(after)) = (before, after) else {
        return Err(invalid);
    };
    let dropped = match w.tier {
        Tier::Exact => space.decide(after, w.x) == Decision::No,
        Tier::AtBudget(b) => !space.enumerate(after, b).contains(&w.x) && space.decide(after, w.x) != Decision::Yes,
    };
    if !space.witnessed_member(before, w.x, budget) || !dropped {
        return Err(invalid);
    }
    let stitched = Text::stitched(
        vec![Block::Prefix(prefix), Block::Prefix(SequencePrefix::new(vec![Item::Elem(w.x)]))],
        text.clone(),
        w.m,
    );
    Ok(match text.content {
        Some(c) => stitched.with_content(space.join(c, &BTreeSet::from([w.x]))),
        None => stitched,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GlobalRestriction {
    SMon,
    Mon,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalVerdict {
    pub verdict: CriterionVerdict,
    /// Text responsible for a refutation or inconclusive outcome.
    pub text: Option<usize>,
}

/// Applies the restriction to `h`'s run on every supplied text.
pub fn check_global(
    space: &HypothesisSpace,
    restriction: GlobalRestriction,
    h: &dyn Learner,
    texts: &[Text],
    horizon: usize,
    opts: CheckOptions,
) -> GlobalVerdict {
    let mut inconclusive = None;
    for (i, text) in texts.iter().enumerate() {
        let seq = run(h, text, horizon, opts.budget, space);
        let verdict = match (restriction, text.content) {
            (GlobalRestriction::SMon, _) => check_smon(space, &seq, opts),
            (GlobalRestriction::Mon, Some(c)) => check_mon(space, &seq, c, opts),
            (GlobalRestriction::Mon, None) => CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted),
        };
        match verdict {
            CriterionVerdict::Refuted(_) => return GlobalVerdict { verdict, text: Some(i) },
            CriterionVerdict::Inconclusive(_) if inconclusive.is_none() => inconclusive = Some((verdict, i)),
            _ => {}
        }
    }
    match inconclusive {
        Some((verdict, i)) => GlobalVerdict { verdict, text: Some(i) },
        None => GlobalVerdict {
            verdict: CriterionVerdict::Confirmed(Confirmation { n0: None, certificate: None, exact: true }),
            text: None,
        },
    }
}

/// `{"criterion", "verdict", "witness", "n0", "reason"}`.
pub fn verdict_json(criterion: Criterion, verdict: &CriterionVerdict) -> serde_json::Value {
    let mut obj = serde_json::Map::new();
    obj.insert("criterion".into(), serde_json::to_value(criterion).expect("serializable"));
    obj.insert("verdict".into(), verdict.label().into());
    match verdict {
        CriterionVerdict::Confirmed(c) => {
            obj.insert("n0".into(), serde_json::to_value(c.n0).expect("serializable"));
            obj.insert("exact".into(), c.exact.into());
        }
        CriterionVerdict::Refuted(w) => {
            obj.insert("witness".into(), serde_json::to_value(w).expect("serializable"));
        }
        CriterionVerdict::Inconclusive(r) => {
            obj.insert("reason".into(), serde_json::to_value(r).expect("serializable"));
        }
    }
    serde_json::Value::Object(obj)
}

/// Content seen in the first `n` items of a sequence.
pub fn prefix_content(seq: &LearningSequence, n: usize) -> BTreeSet<Nat> {
    content(&seq.prefix.items()[..n.min(seq.prefix.len())])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[Nat]) -> BTreeSet<Nat> {
        xs.iter().copied().collect()
    }

    fn opts() -> CheckOptions {
        CheckOptions { budget: 100, bound: 20, allow_budget_witness: false }
    }

    #[test]
    fn ex_constant_sequence() {
        let s = HypothesisSpace::new();
        let one = s.ind(&set(&[1]));
        let seq = LearningSequence::new("1,#,#".parse().unwrap(), vec![Some(one); 4]);
        let v = check_ex(&s, &seq, s.ind(&set(&[1])), opts());
        assert_eq!(
            v,
            CriterionVerdict::Confirmed(Confirmation { n0: Some(0), certificate: Some(LangEquality::Confirmed), exact: true })
        );
    }

    #[test]
    fn ex_is_syntactic_bc_is_semantic() {
        let s = HypothesisSpace::new();
        let e = s.ind(&set(&[2]));
        let entries: Vec<_> = (0..6).map(|k| Some(s.pad(e, &[k % 2]))).collect();
        let seq = LearningSequence::new("2,#,#,#,#".parse().unwrap(), entries);
        assert!(matches!(check_ex(&s, &seq, e, opts()), CriterionVerdict::Refuted(Witness::Unstable { .. })));
        assert!(check_bc(&s, &seq, e, opts()).is_confirmed());
    }

    #[test]
    fn bc_refutes_empty_final_hypothesis() {
        let s = HypothesisSpace::new();
        let t = s.ind(&set(&[3]));
        let seq = LearningSequence::from_entries(vec![Some(t), Some(s.ind(&set(&[])))]);
        match check_bc(&s, &seq, t, opts()) {
            CriterionVerdict::Refuted(Witness::Language { refutation, wrong_positions, .. }) => {
                assert_eq!(refutation, LangEquality::RefutedMissing(3));
                assert_eq!(wrong_positions, vec![1]);
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn undefined_after_completion_refutes() {
        let s = HypothesisSpace::new();
        let t = s.ind(&set(&[3]));
        let seq = LearningSequence::new("3,#".parse().unwrap(), vec![Some(t), Some(t), None]);
        assert_eq!(check_ex(&s, &seq, t, opts()), CriterionVerdict::Refuted(Witness::Undefined { n: 2 }));
        let early = LearningSequence::new("#,#".parse().unwrap(), vec![Some(t), Some(t), None]);
        assert_eq!(
            check_ex(&s, &early, t, opts()),
            CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted)
        );
    }

    #[test]
    fn smon_examples() {
        let s = HypothesisSpace::new();
        let grow = LearningSequence::from_entries(vec![Some(s.ind(&set(&[1]))), Some(s.ind(&set(&[1, 2])))]);
        assert!(check_smon(&s, &grow, opts()).is_confirmed());
        let shrink = LearningSequence::from_entries(vec![Some(s.ind(&set(&[1, 2]))), Some(s.ind(&set(&[1])))]);
        assert_eq!(
            check_smon(&s, &shrink, opts()).monotonicity_witness(),
            Some(MonotonicityWitness { n: 0, m: 1, x: 2, tier: Tier::Exact })
        );
    }

    #[test]
    fn mon_examples() {
        let s = HypothesisSpace::new();
        let shrink = LearningSequence::from_entries(vec![Some(s.ind(&set(&[1, 2]))), Some(s.ind(&set(&[1])))]);
        let w = check_mon(&s, &shrink, s.ind(&set(&[1, 2])), opts()).monotonicity_witness().unwrap();
        assert_eq!(w.x, 2);
        // dropping an element outside the target is allowed
        assert!(check_mon(&s, &shrink, s.ind(&set(&[1])), opts()).is_confirmed());
        let single = LearningSequence::from_entries(vec![Some(s.evens())]);
        assert!(check_mon(&s, &single, s.ind(&set(&[0])), opts()).is_confirmed());
    }

    #[test]
    fn budget_witness_needs_permission() {
        use crate::hypospace::{LanguageDescriptor, LazyLanguage};
        use std::sync::Arc;
        struct Slow;
        impl LazyLanguage for Slow {
            fn describe(&self) -> String {
                "slow".into()
            }
            fn enumerate(&self, budget: Budget, _: &HypothesisSpace) -> BTreeSet<Nat> {
                if budget > 1000 {
                    BTreeSet::from([5])
                } else {
                    BTreeSet::new()
                }
            }
        }
        let s = HypothesisSpace::new();
        let lazy = s.index_of(LanguageDescriptor::Lazy(Arc::new(Slow)));
        let seq = LearningSequence::from_entries(vec![Some(s.ind(&set(&[5]))), Some(lazy)]);
        assert_eq!(check_smon(&s, &seq, opts()), CriterionVerdict::Inconclusive(InconclusiveReason::BudgetExhausted));
        let allowed = CheckOptions { allow_budget_witness: true, ..opts() };
        assert_eq!(
            check_smon(&s, &seq, allowed).monotonicity_witness(),
            Some(MonotonicityWitness { n: 0, m: 1, x: 5, tier: Tier::AtBudget(100) })
        );
    }

    #[test]
    fn global_vacuous() {
        let s = HypothesisSpace::new();
        let h = crate::learnkit::FnLearner::sd("c", |d, _, sp| crate::learnkit::Answer::Defined(sp.ind(d)));
        let g = check_global(&s, GlobalRestriction::Mon, h.as_ref(), &[], 5, opts());
        assert!(g.verdict.is_confirmed());
        assert_eq!(g.text, None);
    }

    #[test]
    fn verdict_json_shape() {
        let v = CriterionVerdict::Refuted(Witness::Monotonicity(MonotonicityWitness { n: 0, m: 3, x: 6, tier: Tier::Exact }));
        let j = verdict_json(Criterion::SMon, &v);
        assert_eq!(j["criterion"], "smon");
        assert_eq!(j["verdict"], "Refuted");
        assert_eq!(j["witness"]["x"], 6);
        assert_eq!(j["witness"]["tier"], "Exact");
    }
}
