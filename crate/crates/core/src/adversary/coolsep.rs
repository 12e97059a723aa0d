//! Self-learning class against partially set-driven monotone Bc-learners.
//!
//! Family `j` consists of the elements `a_j(i) = family_element(s, j, i)`.
//! `f(j)` is the first `i` at which `h′` overgeneralizes on `a_j[i]`.

use super::{
    require_kind, AdversaryError, Budgets, Evidence, LearnerInput, Reentry, ReplayError, Variant, WitnessReport,
    WrongPosition,
};
use crate::canonical::{coolsep_case, CoolsepView};
use crate::coding::{unpair, Nat};
use crate::criteria::{MonotonicityWitness, Tier};
use crate::hypospace::{
    family_element, family_of, Budget, Decision, HypothesisSpace, Index, LanguageDescriptor, LazyLanguage,
    ProgramFamily,
};
use crate::learnkit::{ask_psd, LearnerKind, SharedLearner};
use crate::textkit::{Item, SequencePrefix};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Default, Clone, Copy)]
struct Progress {
    checked: Option<Nat>,
    found: Option<Nat>,
}

struct State {
    sid: Nat,
    learner: SharedLearner,
    budgets: Budgets,
    e: Index,
    f: Mutex<BTreeMap<Nat, Progress>>,
    hats: Mutex<BTreeMap<Nat, Index>>,
    busy: Mutex<BTreeSet<Nat>>,
}

#[derive(Clone)]
struct Handle(Arc<State>);

impl Handle {
    fn a(&self, j: Nat, i: Nat) -> Nat {
        family_element(self.0.sid, j, i)
    }

    fn block(&self, j: Nat, len: Nat) -> BTreeSet<Nat> {
        (0..len).map(|i| self.a(j, i)).collect()
    }

    fn overgeneralizes(&self, j: Nat, i: Nat, space: &HypothesisSpace) -> bool {
        let b = self.0.budgets.enum_budget;
        ask_psd(self.0.learner.as_ref(), &self.block(j, i), i as usize, b, space)
            .index()
            .is_some_and(|h| space.witnessed_member(h, self.a(j, i), b))
    }

    /// `(family, position)` of a session element.
    fn locate(&self, x: Nat) -> Option<(Nat, Nat)> {
        family_of(x).filter(|c| c.0 == self.0.sid).map(|c| (c.1, c.2))
    }

    fn f_full(&self, j: Nat, space: &HypothesisSpace) -> Option<Nat> {
        self.f_upto(j, self.0.budgets.search_bound, space)
    }
}

impl CoolsepView for Handle {
    fn session(&self) -> Nat {
        self.0.sid
    }

    fn hat_index(&self, k: Nat, space: &HypothesisSpace) -> Index {
        if let Some(&idx) = self.0.hats.lock().expect("hat lock").get(&k) {
            return idx;
        }
        let idx = space.allocate();
        space
            .bind(idx, LanguageDescriptor::Lazy(Arc::new(HatLang { h: self.clone(), k })))
            .expect("fresh slot");
        *self.0.hats.lock().expect("hat lock").entry(k).or_insert(idx)
    }

    fn e_index(&self, _: &HypothesisSpace) -> Index {
        self.0.e
    }

    fn f_upto(&self, j: Nat, limit: Nat, space: &HypothesisSpace) -> Option<Nat> {
        let limit = limit.min(self.0.budgets.search_bound);
        loop {
            let p = self.0.f.lock().expect("f lock").get(&j).copied().unwrap_or_default();
            if let Some(f) = p.found {
                return (f <= limit).then_some(f);
            }
            let next = p.checked.map_or(0, |c| c + 1);
            if next > limit {
                return None;
            }
            let _guard = Reentry::enter(&self.0.busy, j)?;
            let ok = self.overgeneralizes(j, next, space);
            let mut memo = self.0.f.lock().expect("f lock");
            let entry = memo.entry(j).or_default();
            if entry.checked.is_none_or(|c| c < next) {
                entry.checked = Some(next);
                if ok {
                    entry.found = Some(next);
                }
            }
        }
    }
}

/// `W_e = ∪_j content(a_j[f(j)])`.
struct WeLang(Handle);

impl LazyLanguage for WeLang {
    fn describe(&self) -> String {
        format!("coolsep[{}].e", self.0 .0.sid)
    }

    fn enumerate(&self, budget: Budget, space: &HypothesisSpace) -> BTreeSet<Nat> {
        let families = budget.min(self.0 .0.budgets.search_bound);
        (0..families)
            .filter_map(|j| self.0.f_full(j, space).map(|f| self.0.block(j, f)))
            .flatten()
            .collect()
    }

    fn decide(&self, x: Nat, space: &HypothesisSpace) -> Decision {
        match self.0.locate(x) {
            Some((j, i)) if self.0.f_full(j, space).is_some_and(|f| i < f) => Decision::Yes,
            _ => Decision::No,
        }
    }
}

/// `W_{ê_k} = ∪_{j ≤ k} content(a_j[f(j)]) ∪ {a_k(f(k))}`.
struct HatLang {
    h: Handle,
    k: Nat,
}

impl LazyLanguage for HatLang {
    fn describe(&self) -> String {
        format!("coolsep[{}].hat{}", self.h.0.sid, self.k)
    }

    fn enumerate(&self, _budget: Budget, space: &HypothesisSpace) -> BTreeSet<Nat> {
        let mut out = BTreeSet::new();
        for j in 0..=self.k {
            if let Some(f) = self.h.f_full(j, space) {
                out.extend(self.h.block(j, f));
                if j == self.k {
                    out.insert(self.h.a(j, f));
                }
            }
        }
        out
    }

    fn decide(&self, x: Nat, space: &HypothesisSpace) -> Decision {
        let Some((j, i)) = self.h.locate(x) else { return Decision::No };
        if j > self.k {
            return Decision::No;
        }
        match self.h.f_full(j, space) {
            Some(f) if i < f || (j == self.k && i == f) => Decision::Yes,
            _ => Decision::No,
        }
    }
}

struct Programs(OnceLock<Handle>);

impl ProgramFamily for Programs {
    fn call(&self, local: Nat, input: &[Item], budget: Budget, space: &HypothesisSpace) -> Option<Nat> {
        let h = self.0.get()?;
        let (j, _) = unpair(local);
        coolsep_case(h, j, input, budget, space).map(Index::code)
    }
}

pub struct CoolsepSession {
    h: Handle,
}

impl CoolsepSession {
    pub fn new(space: &HypothesisSpace, learner: SharedLearner, budgets: Budgets) -> Result<Self, AdversaryError> {
        require_kind("coolsep", &learner, LearnerKind::PartiallySetDriven)?;
        let programs = Arc::new(Programs(OnceLock::new()));
        let sid = space.register_family(programs.clone());
        let e = space.allocate();
        let h = Handle(Arc::new(State {
            sid,
            learner,
            budgets,
            e,
            f: Mutex::default(),
            hats: Mutex::default(),
            busy: Mutex::default(),
        }));
        let _ = programs.0.set(h.clone());
        space.bind(e, LanguageDescriptor::Lazy(Arc::new(WeLang(h.clone())))).expect("fresh slot");
        Ok(CoolsepSession { h })
    }

    pub fn session_id(&self) -> Nat {
        self.h.0.sid
    }

    pub fn element(&self, j: Nat, i: Nat) -> Nat {
        self.h.a(j, i)
    }

    pub fn budgets(&self) -> Budgets {
        self.h.0.budgets
    }

    /// `f(j)`, searched up to the session bound.
    pub fn f(&self, j: Nat, space: &HypothesisSpace) -> Option<Nat> {
        self.h.f_full(j, space)
    }

    pub fn e_j(&self, j: Nat, space: &HypothesisSpace) -> Index {
        self.h.family_index(j, space)
    }

    pub fn hat(&self, k: Nat, space: &HypothesisSpace) -> Index {
        self.h.hat_index(k, space)
    }

    pub fn e(&self) -> Index {
        self.h.0.e
    }

    /// `a_j(f(j)) ∈ W_{ê_j} ∖ W_e` and `content(a_j[f(j)]) ⊆ W_e`, decided exactly.
    pub fn geometry_holds(&self, j: Nat, space: &HypothesisSpace) -> Option<bool> {
        let f = self.f(j, space)?;
        let x = self.element(j, f);
        Some(
            space.decide(self.hat(j, space), x) == Decision::Yes
                && space.decide(self.e(), x) == Decision::No
                && (0..f).all(|i| space.decide(self.e(), self.element(j, i)) == Decision::Yes),
        )
    }

    fn report(&self, variant: Variant, evidence: Vec<Evidence>) -> WitnessReport {
        WitnessReport {
            theorem: "coolsep".into(),
            learner: self.h.0.learner.name().to_string(),
            variant,
            evidence,
            budgets: self.h.0.budgets,
        }
    }

    /// Walks the text `a_0[f(0)] a_1[f(1)] …` of `W_e` collecting positions at
    /// which `h′` keeps `a_j(f(j)) ∉ W_e`.
    pub fn diagnose(&self, space: &HypothesisSpace, error_goal: usize) -> WitnessReport {
        let budget = self.h.0.budgets.enum_budget;
        let bound = self.h.0.budgets.search_bound;
        let learner = self.h.0.learner.clone();
        let mut prefix = SequencePrefix::empty();
        let mut positions = Vec::new();
        let mut evidence = Vec::new();
        for j in 0..error_goal as Nat {
            let Some(f) = self.f(j, space) else {
                return self.report(Variant::FailsToOvergeneralize { family: j, bound }, Vec::new());
            };
            let x = self.element(j, f);
            let probe = LearnerInput::State { content: self.h.block(j, f), length: f as usize };
            let probe_hyp = probe.ask(learner.as_ref(), budget, space).index();
            evidence.push(Evidence::Conjecture { input: probe, answer: probe_hyp });
            if let Some(hyp) = probe_hyp {
                evidence.push(Evidence::Member { index: hyp, x });
            }
            let before = prefix.clone();
            for i in 0..f {
                prefix.push(Item::Elem(self.element(j, i)));
            }
            let position = prefix.len();
            let input = LearnerInput::State { content: prefix.content(), length: position };
            let Some(hyp) = input.ask(learner.as_ref(), budget, space).index() else {
                return self.report(Variant::BudgetExhausted { stage: format!("no hypothesis at position {position}") }, evidence);
            };
            if space.witnessed_member(hyp, x, budget) {
                evidence.push(Evidence::Conjecture { input, answer: Some(hyp) });
                evidence.push(Evidence::Member { index: hyp, x });
                evidence.push(Evidence::NonMember { index: self.e(), x });
                positions.push(WrongPosition { position, hypothesis: hyp, element: x });
            } else if space.decide(hyp, x) == Decision::No {
                // h′ drops a_j(f(j)) on a text of W_{ê_j} that starts with a_j[f(j)]
                let mut text = SequencePrefix::new((0..f).map(|i| Item::Elem(self.element(j, i))).collect());
                for &it in before.items() {
                    text.push(it);
                }
                let witness = MonotonicityWitness { n: f as usize, m: position, x, tier: Tier::Exact };
                let target = self.hat(j, space);
                return self.report(
                    Variant::MonotonicityTrap { sigma_k: text.clone(), kept: Vec::new() },
                    vec![Evidence::MonViolation { prefix: text, target, witness }],
                );
            } else {
                return self.report(
                    Variant::BudgetExhausted { stage: format!("membership of {x} at position {position}") },
                    evidence,
                );
            }
        }
        self.report(Variant::WrongForever { prefix, positions }, evidence)
    }

    /// Replays the evidence and re-derives what the evidence list leaves implicit.
    pub fn verify(&self, space: &HypothesisSpace, report: &WitnessReport) -> Result<(), ReplayError> {
        let learner = self.h.0.learner.clone();
        super::replay(report, learner.as_ref(), space)?;
        match &report.variant {
            Variant::WrongForever { positions, .. } => {
                for p in positions {
                    let (j, i) = self.h.locate(p.element).ok_or_else(|| ReplayError::Structure("foreign element".into()))?;
                    if self.f(j, space) != Some(i) || space.decide(self.e(), p.element) != Decision::No {
                        return Err(ReplayError::Structure(format!("position {} is not a_j(f(j))", p.position)));
                    }
                }
                Ok(())
            }
            Variant::FailsToOvergeneralize { family, bound } => {
                let hit = (0..=*bound).any(|i| self.h.overgeneralizes(*family, i, space));
                if hit {
                    Err(ReplayError::Structure(format!("family {family} overgeneralizes within {bound}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{builtin_for, coolsep_learner};
    use crate::learnkit::{Answer, FnLearner};

    fn small() -> Budgets {
        Budgets { horizon: 20, enum_budget: 50, search_bound: 20, goal: 3 }
    }

    fn session(name: &str, space: &HypothesisSpace) -> CoolsepSession {
        let h = builtin_for(name, LearnerKind::PartiallySetDriven, false).unwrap();
        CoolsepSession::new(space, h, small()).unwrap()
    }

    #[test]
    fn overgeneralizer_f_is_one() {
        let s = HypothesisSpace::new();
        let c = session("family-overgeneralizer", &s);
        for j in 0..5 {
            assert_eq!(c.f(j, &s), Some(1));
            assert_eq!(c.geometry_holds(j, &s), Some(true));
        }
        assert_eq!(s.decide(c.e_j(0, &s), c.element(0, 5)), Decision::Yes);
        assert_eq!(s.enumerate(c.e(), 3), (0..3).map(|j| c.element(j, 0)).collect());
        let hat1 = c.hat(1, &s);
        assert_eq!(s.decide(hat1, c.element(1, 1)), Decision::Yes);
        assert_eq!(s.decide(hat1, c.element(1, 2)), Decision::No);
    }

    #[test]
    fn set_copier_never_overgeneralizes() {
        let s = HypothesisSpace::new();
        let c = session("set-copier", &s);
        assert_eq!(c.f(0, &s), None);
        let r = c.diagnose(&s, 2);
        assert_eq!(r.variant, Variant::FailsToOvergeneralize { family: 0, bound: 20 });
        c.verify(&s, &r).unwrap();
    }

    #[test]
    fn table_like_learner_finds_f_at_one() {
        let s = HypothesisSpace::new();
        let cell: Arc<OnceLock<Index>> = Arc::new(OnceLock::new());
        let target = cell.clone();
        let h = FnLearner::psd("tbl", move |d, t, _, sp| match (d.len(), t, target.get()) {
            (1, 1, Some(&e0)) => Answer::Defined(e0),
            _ => Answer::Defined(sp.ind(d)),
        });
        let c = CoolsepSession::new(&s, h, small()).unwrap();
        cell.set(c.e_j(0, &s)).unwrap();
        assert_eq!(c.f(0, &s), Some(1));
    }

    #[test]
    fn diagnose_overgeneralizer() {
        let s = HypothesisSpace::new();
        let c = session("family-overgeneralizer", &s);
        let r = c.diagnose(&s, 4);
        let Variant::WrongForever { positions, .. } = &r.variant else { panic!("{:?}", r.variant) };
        assert_eq!(positions.len(), 4);
        assert_eq!(positions.iter().map(|p| p.position).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        c.verify(&s, &r).unwrap();
        let empty = c.diagnose(&s, 0);
        assert_eq!(empty.variant, Variant::WrongForever { prefix: SequencePrefix::empty(), positions: vec![] });
    }

    #[test]
    fn element_programs_follow_the_case_table() {
        let s = HypothesisSpace::new();
        let c = session("family-overgeneralizer", &s);
        let a = |j, i| Item::Elem(c.element(j, i));
        assert_eq!(coolsep_learner(&[a(0, 0), a(0, 3)], 10, &s), Answer::Defined(c.e_j(0, &s)));
        assert_eq!(coolsep_learner(&[a(0, 0), a(1, 0)], 10, &s), Answer::Defined(c.e()));
        assert_eq!(coolsep_learner(&[a(0, 0), a(1, 1)], 10, &s), Answer::Defined(c.hat(1, &s)));
    }

    #[test]
    fn kind_is_checked() {
        let s = HypothesisSpace::new();
        let h = crate::canonical::builtin("thm3").unwrap();
        assert!(CoolsepSession::new(&s, h, small()).is_err());
    }
}
