//! Set-driven learners against the finite initial segments `⟦j⟧`.
//!
//! Elements are `x_i = triple(e, p, i)` where `p` probes for the first `k` with
//! `h′(⟦k⟧) = h′(⟦k+1⟧)`.

use super::{require_kind, AdversaryError, Budgets, Evidence, LearnerInput, Reentry, ReplayError, Variant, WitnessReport};
use crate::coding::{encode, pair, triple, untriple, Nat, Tag};
use crate::hypospace::{Budget, Decision, HypothesisSpace, Index, LanguageDescriptor, LazyLanguage, ProgramFamily};
use crate::learnkit::{LearnerKind, SharedLearner};
use crate::textkit::{Item, SequencePrefix};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, OnceLock};

struct State {
    e: Index,
    p: Nat,
    learner: SharedLearner,
    budgets: Budgets,
    r: Mutex<BTreeMap<Nat, Option<Index>>>,
    busy: Mutex<BTreeSet<Nat>>,
}

#[derive(Clone)]
struct Handle(Arc<State>);

impl Handle {
    fn x(&self, i: Nat) -> Nat {
        triple(self.0.e.code(), self.0.p, i)
    }

    fn segment(&self, j: Nat) -> BTreeSet<Nat> {
        (0..=j).map(|i| self.x(i)).collect()
    }

    /// `r_j = h′(⟦j⟧)`; `None` when the learner gives no answer.
    fn r(&self, j: Nat, space: &HypothesisSpace) -> Option<Index> {
        if let Some(&r) = self.0.r.lock().expect("r lock").get(&j) {
            return r;
        }
        let _guard = Reentry::enter(&self.0.busy, j)?;
        let r = LearnerInput::Content(self.segment(j))
            .ask(self.0.learner.as_ref(), self.0.budgets.enum_budget, space)
            .index();
        self.0.r.lock().expect("r lock").insert(j, r);
        r
    }

    /// First `k < limit` with `r_k = r_{k+1}`; `Err(j)` if `r_j` is undefined first.
    fn first_repeat(&self, limit: Nat, space: &HypothesisSpace) -> Result<Option<Nat>, Nat> {
        let mut prev = self.r(0, space).ok_or(0 as Nat)?;
        for k in 0..limit {
            let next = self.r(k + 1, space).ok_or(k + 1)?;
            if next == prev {
                return Ok(Some(k));
            }
            prev = next;
        }
        Ok(None)
    }
}

/// `W_e = {x_i | r_j ≠ r_{j+1} for all j ≤ i}`.
struct WeLang(Handle);

impl LazyLanguage for WeLang {
    fn describe(&self) -> String {
        format!("sd[{}].e", self.0 .0.e.code())
    }

    fn enumerate(&self, budget: Budget, space: &HypothesisSpace) -> BTreeSet<Nat> {
        let limit = budget.min(self.0 .0.budgets.search_bound);
        let end = match self.0.first_repeat(limit, space) {
            Ok(Some(k)) => k,
            Ok(None) => limit,
            Err(j) => j.saturating_sub(1),
        };
        (0..end).map(|i| self.0.x(i)).collect()
    }

    fn decide(&self, x: Nat, space: &HypothesisSpace) -> Decision {
        let (e, p, i) = untriple(x);
        if e != self.0 .0.e.code() || p != self.0 .0.p || i >= self.0 .0.budgets.search_bound {
            return Decision::No;
        }
        match self.0.first_repeat(i + 1, space) {
            Ok(None) => Decision::Yes,
            _ => Decision::No,
        }
    }
}

/// Halts iff the first repeat `k` exists with `k + 2 ≤ budget`.
struct Probe(OnceLock<Handle>);

impl ProgramFamily for Probe {
    fn call(&self, _local: Nat, _input: &[Item], budget: Budget, space: &HypothesisSpace) -> Option<Nat> {
        let h = self.0.get()?;
        let limit = budget.saturating_sub(1).min(h.0.budgets.search_bound);
        match h.first_repeat(limit, space) {
            Ok(Some(k)) => Some(k),
            _ => None,
        }
    }
}

pub struct SdSession {
    h: Handle,
}

impl SdSession {
    pub fn new(space: &HypothesisSpace, learner: SharedLearner, budgets: Budgets) -> Result<Self, AdversaryError> {
        require_kind("sd", &learner, LearnerKind::SetDriven)?;
        let probe = Arc::new(Probe(OnceLock::new()));
        let sid = space.register_family(probe.clone());
        let e = space.allocate();
        let h = Handle(Arc::new(State {
            e,
            p: encode(Tag::Prog, pair(sid, 0)),
            learner,
            budgets,
            r: Mutex::default(),
            busy: Mutex::default(),
        }));
        let _ = probe.0.set(h.clone());
        space.bind(e, LanguageDescriptor::Lazy(Arc::new(WeLang(h.clone())))).expect("fresh slot");
        Ok(SdSession { h })
    }

    pub fn e(&self) -> Index {
        self.h.0.e
    }

    pub fn probe(&self) -> Nat {
        self.h.0.p
    }

    pub fn element(&self, i: Nat) -> Nat {
        self.h.x(i)
    }

    /// `⟦j⟧ = {x_0, …, x_j}`.
    pub fn segment(&self, j: Nat) -> BTreeSet<Nat> {
        self.h.segment(j)
    }

    fn report(&self, variant: Variant, evidence: Vec<Evidence>) -> WitnessReport {
        WitnessReport {
            theorem: "sd".into(),
            learner: self.h.0.learner.name().to_string(),
            variant,
            evidence,
            budgets: self.h.0.budgets,
        }
    }

    pub fn diagnose(&self, space: &HypothesisSpace, goal: usize) -> WitnessReport {
        let limit = (goal as Nat).min(self.h.0.budgets.search_bound);
        match self.h.first_repeat(limit, space) {
            Err(j) => self.report(Variant::TotalityViolated { input: LearnerInput::Content(self.segment(j)) }, vec![]),
            Ok(None) if limit < goal as Nat => {
                self.report(Variant::BudgetExhausted { stage: format!("no repeat below {limit}") }, vec![])
            }
            Ok(None) => {
                let prefix = SequencePrefix::new((0..=limit).map(|i| Item::Elem(self.element(i))).collect());
                let evidence = vec![Evidence::MindChanges { prefix: prefix.clone(), count: goal }];
                self.report(Variant::InfiniteMindChanges { prefix, count: goal }, evidence)
            }
            Ok(Some(k)) => {
                let hyp = self.h.r(k, space).expect("computed");
                let l = space.ind(&self.segment(k));
                let l_prime = space.ind(&self.segment(k + 1));
                let evidence = vec![
                    Evidence::Conjecture { input: LearnerInput::Content(self.segment(k)), answer: Some(hyp) },
                    Evidence::Conjecture { input: LearnerInput::Content(self.segment(k + 1)), answer: Some(hyp) },
                    Evidence::Separates { left: l_prime, right: l, x: self.element(k + 1) },
                ];
                self.report(Variant::ConfusedPair { l, l_prime, hypothesis: hyp }, evidence)
            }
        }
    }

    pub fn verify(&self, space: &HypothesisSpace, report: &WitnessReport) -> Result<(), ReplayError> {
        super::replay(report, self.h.0.learner.as_ref(), space)?;
        match &report.variant {
            Variant::TotalityViolated { input } => {
                if input.ask(self.h.0.learner.as_ref(), report.budgets.enum_budget, space).index().is_none() {
                    Ok(())
                } else {
                    Err(ReplayError::Structure("learner answers".into()))
                }
            }
            Variant::ConfusedPair { l, l_prime, .. } => {
                let listed = |i: Index| space.enumerate(i, report.budgets.enum_budget);
                let (a, b) = (listed(*l), listed(*l_prime));
                if a.len() + 1 == b.len() && a.is_subset(&b) {
                    Ok(())
                } else {
                    Err(ReplayError::Structure("pair is not ⟦k⟧ ⊂ ⟦k+1⟧".into()))
                }
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{builtin, thm6_learner};
    use crate::learnkit::{Answer, FnLearner};

    fn small() -> Budgets {
        Budgets { horizon: 10, enum_budget: 50, search_bound: 10, goal: 4 }
    }

    #[test]
    fn set_copier_changes_forever() {
        let s = HypothesisSpace::new();
        let a = SdSession::new(&s, builtin("set-copier").unwrap(), small()).unwrap();
        let r = a.diagnose(&s, 4);
        let Variant::InfiniteMindChanges { prefix, count } = &r.variant else { panic!("{:?}", r.variant) };
        assert_eq!((prefix.len(), *count), (5, 4));
        a.verify(&s, &r).unwrap();
        assert_eq!(s.decide(a.e(), a.element(9)), Decision::Yes);
        assert_eq!(s.run_program(a.probe(), &[Item::Elem(0)], 100), None);
    }

    #[test]
    fn constant_confuses_first_pair() {
        let s = HypothesisSpace::new();
        let a = SdSession::new(&s, builtin("constant").unwrap(), small()).unwrap();
        let r = a.diagnose(&s, 4);
        let Variant::ConfusedPair { l, l_prime, hypothesis } = r.variant else { panic!("{:?}", r.variant) };
        assert_eq!(hypothesis, s.naturals());
        assert_eq!(s.enumerate(l, 10), a.segment(0));
        assert_eq!(s.enumerate(l_prime, 10), a.segment(1));
        a.verify(&s, &r).unwrap();
        assert!(s.enumerate(a.e(), 10).is_empty());
        assert_eq!(s.run_program(a.probe(), &[Item::Elem(0)], 1), None);
        assert_eq!(s.run_program(a.probe(), &[Item::Elem(0)], 2), Some(0));
    }

    #[test]
    fn thm6_learns_the_confused_pair() {
        let s = HypothesisSpace::new();
        // changes twice, then sticks
        let h = FnLearner::sd("twice", |d, _, sp| Answer::Defined(sp.ind_of([d.len().min(3) as Nat])));
        let a = SdSession::new(&s, h, small()).unwrap();
        let r = a.diagnose(&s, 6);
        let Variant::ConfusedPair { l, l_prime, .. } = r.variant else { panic!("{:?}", r.variant) };
        for (lang, j) in [(l, 2), (l_prime, 3)] {
            let d = a.segment(j);
            let guess = thm6_learner(&d, 20, &s);
            assert_eq!(s.enumerate(guess, 20), s.enumerate(lang, 20));
        }
    }

    #[test]
    fn partial_sd_learner_is_caught() {
        let s = HypothesisSpace::new();
        let h = FnLearner::sd("short", |d, _, sp| if d.len() < 3 { Answer::Defined(sp.ind(d)) } else { Answer::NoAnswerWithinBudget });
        let a = SdSession::new(&s, h, small()).unwrap();
        let r = a.diagnose(&s, 4);
        assert_eq!(r.variant, Variant::TotalityViolated { input: LearnerInput::Content(a.segment(2)) });
        a.verify(&s, &r).unwrap();
    }
}
