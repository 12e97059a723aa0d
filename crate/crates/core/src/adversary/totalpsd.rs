//! Two finite languages a total partially set-driven monotone learner cannot
//! tell apart.
//!
//! Element `a(i)` is a program which, on any input, names `pad(e, 1)` when
//! `P(i)` holds and `pad(e′, 2)` otherwise, where `P(i)` asks whether `h′`
//! changes its mind on reading `a(i)` after `t̂(i) + i` steps.

use super::{require_kind, AdversaryError, Budgets, Evidence, LearnerInput, Reentry, ReplayError, Variant, WitnessReport};
use crate::coding::{encode, pair, unpair, Nat, Tag};
use crate::criteria::{verify_monotonicity_witness, MonotonicityWitness, Tier};
use crate::hypospace::{Budget, Decision, HypothesisSpace, Index, LanguageDescriptor, LazyLanguage, ProgramFamily};
use crate::learnkit::{ask_psd, run, LearnerKind, SharedLearner};
use crate::textkit::{repeat, Item, SequencePrefix, Text};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Fail {
    NoAnswer(LearnerInput),
    Singleton(Nat),
    Reentered,
}

struct State {
    sid: Nat,
    e: Index,
    e_prime: Index,
    learner: SharedLearner,
    budgets: Budgets,
    t: Mutex<BTreeMap<Nat, Option<usize>>>,
    p: Mutex<BTreeMap<Nat, Result<bool, Fail>>>,
    busy: Mutex<BTreeSet<Nat>>,
}

#[derive(Clone)]
struct Handle(Arc<State>);

impl Handle {
    fn a(&self, i: Nat) -> Nat {
        encode(Tag::Prog, pair(self.0.sid, i))
    }

    fn index_of(&self, x: Nat) -> Option<Nat> {
        let (tag, payload) = unpair(x);
        let (s, i) = unpair(payload);
        (tag == Tag::Prog as Nat && s == self.0.sid).then_some(i)
    }

    fn prefix_set(&self, i: Nat) -> BTreeSet<Nat> {
        (0..i).map(|j| self.a(j)).collect()
    }

    fn ask(&self, content: BTreeSet<Nat>, length: usize, space: &HypothesisSpace) -> Result<Index, Fail> {
        let input = LearnerInput::State { content, length };
        input.ask(self.0.learner.as_ref(), self.0.budgets.enum_budget, space).index().ok_or(Fail::NoAnswer(input))
    }

    /// Least `t ≤ search_bound` with `x ∈ W_{h′({x}, t)}`.
    fn t_of(&self, i: Nat, space: &HypothesisSpace) -> Option<usize> {
        if let Some(&t) = self.0.t.lock().expect("t lock").get(&i) {
            return t;
        }
        let x = self.a(i);
        let d: BTreeSet<Nat> = [x].into();
        let b = self.0.budgets;
        let t = (1..=b.search_bound as usize).find(|&t| {
            ask_psd(self.0.learner.as_ref(), &d, t, b.enum_budget, space)
                .index()
                .is_some_and(|h| space.witnessed_member(h, x, b.enum_budget))
        });
        self.0.t.lock().expect("t lock").insert(i, t);
        t
    }

    /// `t̂(i) = max_{j ≤ i} t(a(j))`.
    fn t_hat(&self, i: Nat, space: &HypothesisSpace) -> Result<usize, Fail> {
        (0..=i).try_fold(0, |acc, j| self.t_of(j, space).map(|t| acc.max(t)).ok_or(Fail::Singleton(self.a(j))))
    }

    fn p(&self, i: Nat, space: &HypothesisSpace) -> Result<bool, Fail> {
        if let Some(r) = self.0.p.lock().expect("p lock").get(&i) {
            return r.clone();
        }
        let Some(_guard) = Reentry::enter(&self.0.busy, i) else {
            return Err(Fail::Reentered);
        };
        let r = self.p_uncached(i, space);
        self.0.p.lock().expect("p lock").insert(i, r.clone());
        r
    }

    fn p_uncached(&self, i: Nat, space: &HypothesisSpace) -> Result<bool, Fail> {
        let len = self.t_hat(i, space)? + i as usize;
        let before = self.ask(self.prefix_set(i), len, space)?;
        let after = self.ask(self.prefix_set(i + 1), len + 1, space)?;
        Ok(before != after)
    }

    /// `∀ j < i, P(j)`, with divergence read as false.
    fn all_p_below(&self, i: Nat, space: &HypothesisSpace) -> bool {
        i <= self.0.budgets.search_bound && (0..i).all(|j| self.p(j, space) == Ok(true))
    }
}

/// `W_e` (`strict`) or `W_e′`.
struct Lang {
    h: Handle,
    strict: bool,
}

impl LazyLanguage for Lang {
    fn describe(&self) -> String {
        format!("totalpsd[{}].{}", self.h.0.sid, if self.strict { "e" } else { "e'" })
    }

    fn enumerate(&self, budget: Budget, space: &HypothesisSpace) -> BTreeSet<Nat> {
        (0..=budget.min(self.h.0.budgets.search_bound))
            .take_while(|&i| self.h.all_p_below(i + self.strict as Nat, space))
            .map(|i| self.h.a(i))
            .collect()
    }

    fn decide(&self, x: Nat, space: &HypothesisSpace) -> Decision {
        match self.h.index_of(x) {
            Some(i) if self.h.all_p_below(i + self.strict as Nat, space) => Decision::Yes,
            _ => Decision::No,
        }
    }
}

struct Programs(OnceLock<Handle>);

impl ProgramFamily for Programs {
    fn call(&self, local: Nat, _input: &[Item], budget: Budget, space: &HypothesisSpace) -> Option<Nat> {
        let h = self.0.get()?;
        if budget == 0 || local > h.0.budgets.search_bound {
            return None;
        }
        match h.p(local, space) {
            Ok(true) => Some(space.pad(h.0.e, &[1]).code()),
            Ok(false) => Some(space.pad(h.0.e_prime, &[2]).code()),
            Err(_) => None,
        }
    }
}

pub struct TotalPsdSession {
    h: Handle,
}

impl TotalPsdSession {
    pub fn new(space: &HypothesisSpace, learner: SharedLearner, budgets: Budgets) -> Result<Self, AdversaryError> {
        require_kind("totalpsd", &learner, LearnerKind::PartiallySetDriven)?;
        let programs = Arc::new(Programs(OnceLock::new()));
        let sid = space.register_family(programs.clone());
        let e = space.allocate();
        let e_prime = space.allocate();
        let h = Handle(Arc::new(State {
            sid,
            e,
            e_prime,
            learner,
            budgets,
            t: Mutex::default(),
            p: Mutex::default(),
            busy: Mutex::default(),
        }));
        let _ = programs.0.set(h.clone());
        space.bind(e, LanguageDescriptor::Lazy(Arc::new(Lang { h: h.clone(), strict: true }))).expect("fresh slot");
        space.bind(e_prime, LanguageDescriptor::Lazy(Arc::new(Lang { h: h.clone(), strict: false }))).expect("fresh slot");
        Ok(TotalPsdSession { h })
    }

    pub fn e(&self) -> Index {
        self.h.0.e
    }

    pub fn e_prime(&self) -> Index {
        self.h.0.e_prime
    }

    pub fn element(&self, i: Nat) -> Nat {
        self.h.a(i)
    }

    fn report(&self, variant: Variant, evidence: Vec<Evidence>) -> WitnessReport {
        WitnessReport {
            theorem: "totalpsd".into(),
            learner: self.h.0.learner.name().to_string(),
            variant,
            evidence,
            budgets: self.h.0.budgets,
        }
    }

    fn failure(&self, f: Fail) -> WitnessReport {
        let variant = match f {
            Fail::NoAnswer(input) => Variant::TotalityViolated { input },
            Fail::Singleton(element) => Variant::SingletonNotLearned { element, bound: self.h.0.budgets.search_bound },
            Fail::Reentered => Variant::BudgetExhausted { stage: "re-entered".into() },
        };
        self.report(variant, vec![])
    }

    /// The text `#^{t̂(0)} a(0) #… a(1) …` on which `h′` changes its mind on
    /// every `a(i)`, up to `a(k−1)`.
    fn changing_text(&self, k: Nat, space: &HypothesisSpace) -> Result<SequencePrefix, Fail> {
        let mut s = SequencePrefix::empty();
        for i in 0..k {
            let target = self.h.t_hat(i, space)? + i as usize;
            while s.len() < target {
                s.push(Item::Pause);
            }
            s.push(Item::Elem(self.h.a(i)));
        }
        Ok(s)
    }

    pub fn diagnose(&self, space: &HypothesisSpace, goal: usize) -> WitnessReport {
        let b = self.h.0.budgets;
        let mut k = None;
        for i in 0..goal as Nat {
            match self.h.p(i, space) {
                Ok(true) => {}
                Ok(false) => {
                    k = Some(i);
                    break;
                }
                Err(f) => return self.failure(f),
            }
        }
        let Some(k) = k else {
            let prefix = match self.changing_text(goal as Nat, space) {
                Ok(p) => p,
                Err(f) => return self.failure(f),
            };
            let evidence = vec![Evidence::MindChanges { prefix: prefix.clone(), count: goal }];
            return self.report(Variant::InfiniteMindChanges { prefix, count: goal }, evidence);
        };
        let (t_hat, t_k) = match (self.h.t_hat(k, space), self.h.t_of(k, space)) {
            (Ok(th), Some(t)) => (th, t),
            (Err(f), _) => return self.failure(f),
            (_, None) => return self.failure(Fail::Singleton(self.h.a(k))),
        };
        let len = t_hat + k as usize;
        let x = self.h.a(k);
        let hyp = match self.h.ask(self.h.prefix_set(k), len, space) {
            Ok(h) => h,
            Err(f) => return self.failure(f),
        };
        let mut evidence = vec![
            Evidence::Conjecture { input: LearnerInput::State { content: self.h.prefix_set(k), length: len }, answer: Some(hyp) },
            Evidence::Conjecture {
                input: LearnerInput::State { content: self.h.prefix_set(k + 1), length: len + 1 },
                answer: Some(hyp),
            },
            Evidence::Separates { left: self.e_prime(), right: self.e(), x },
        ];
        let variant = Variant::ConfusedPair { l: self.e(), l_prime: self.e_prime(), hypothesis: hyp };
        if space.witnessed_member(hyp, x, b.enum_budget) {
            // a text for W_e stays at a[k]; h′ must eventually drop a(k), and then
            // the same prefix continued by a(k) is a Mon failure on W_e′
            let mut prefix = SequencePrefix::new(self.h.prefix_set(k).into_iter().map(Item::Elem).collect());
            while prefix.len() < len {
                prefix.push(Item::Pause);
            }
            for _ in 0..=b.horizon {
                let ev = self.violation(space, &prefix, x, len);
                if let Some(ev) = ev {
                    evidence.push(ev);
                    return self.report(variant, evidence);
                }
                prefix.push(Item::Pause);
            }
            evidence.push(Evidence::Member { index: hyp, x });
            evidence.push(Evidence::NonMember { index: self.e(), x });
            self.report(variant, evidence)
        } else if space.decide(hyp, x) == Decision::No {
            let mut prefix = repeat(x, t_k);
            while prefix.len() + (k as usize) < len + 1 {
                prefix.push(Item::Pause);
            }
            for i in 0..k {
                prefix.push(Item::Elem(self.h.a(i)));
            }
            match self.violation(space, &prefix, x, t_k) {
                Some(ev) => {
                    evidence.push(ev);
                    self.report(variant, evidence)
                }
                None => self.report(Variant::BudgetExhausted { stage: format!("violation at {k}") }, evidence),
            }
        } else {
            self.report(Variant::BudgetExhausted { stage: format!("membership of a({k})") }, evidence)
        }
    }

    fn violation(&self, space: &HypothesisSpace, prefix: &SequencePrefix, x: Nat, n: usize) -> Option<Evidence> {
        let budget = self.h.0.budgets.enum_budget;
        let seq = run(self.h.0.learner.as_ref(), &Text::finite(prefix.clone()), prefix.len(), budget, space);
        let witness = MonotonicityWitness { n, m: prefix.len(), x, tier: Tier::Exact };
        verify_monotonicity_witness(space, &seq, &witness, Some(self.e_prime()), budget).then(|| Evidence::MonViolation {
            prefix: prefix.clone(),
            target: self.e_prime(),
            witness,
        })
    }

    pub fn verify(&self, space: &HypothesisSpace, report: &WitnessReport) -> Result<(), ReplayError> {
        super::replay(report, self.h.0.learner.as_ref(), space)?;
        match &report.variant {
            Variant::ConfusedPair { l, l_prime, .. } if *l == self.e() && *l_prime == self.e_prime() => Ok(()),
            Variant::ConfusedPair { .. } => Err(ReplayError::Structure("foreign languages".into())),
            Variant::TotalityViolated { input } => {
                if input.ask(self.h.0.learner.as_ref(), report.budgets.enum_budget, space).index().is_none() {
                    Ok(())
                } else {
                    Err(ReplayError::Structure("learner answers".into()))
                }
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{builtin, builtin_for};
    use crate::learnkit::{ask_sd, Answer, FnLearner};

    fn small() -> Budgets {
        Budgets { horizon: 10, enum_budget: 50, search_bound: 10, goal: 4 }
    }

    fn session(name: &str, space: &HypothesisSpace) -> TotalPsdSession {
        TotalPsdSession::new(space, builtin_for(name, LearnerKind::PartiallySetDriven, true).unwrap(), small()).unwrap()
    }

    #[test]
    fn constant_is_confused_at_zero() {
        let s = HypothesisSpace::new();
        let c = session("constant", &s);
        let r = c.diagnose(&s, 4);
        let Variant::ConfusedPair { hypothesis, .. } = r.variant else { panic!("{:?}", r.variant) };
        assert_eq!(hypothesis, s.naturals());
        c.verify(&s, &r).unwrap();
        assert!(s.enumerate(c.e(), 10).is_empty());
        assert_eq!(s.enumerate(c.e_prime(), 10), [c.element(0)].into());
    }

    #[test]
    fn copier_changes_forever() {
        let s = HypothesisSpace::new();
        for name in ["min-consistent", "set-copier"] {
            let c = session(name, &s);
            let r = c.diagnose(&s, 4);
            assert_eq!(r.variant.name(), "InfiniteMindChanges", "{name}");
            c.verify(&s, &r).unwrap();
            assert_eq!(s.decide(c.e(), c.element(3)), Decision::Yes);
        }
    }

    #[test]
    fn partial_learner_violates_totality() {
        let s = HypothesisSpace::new();
        let h = FnLearner::psd("partial", |d, _, _, sp| {
            if d.len() > 1 {
                Answer::NoAnswerWithinBudget
            } else {
                Answer::Defined(sp.ind(d))
            }
        });
        let c = TotalPsdSession::new(&s, h, small()).unwrap();
        let r = c.diagnose(&s, 4);
        assert_eq!(r.variant.name(), "TotalityViolated");
        c.verify(&s, &r).unwrap();
    }

    #[test]
    fn confused_pair_is_learned_by_the_program_reader() {
        let s = HypothesisSpace::new();
        let c = session("constant", &s);
        let thm5 = builtin("thm5").unwrap();
        let d0: BTreeSet<Nat> = [c.element(0)].into();
        let guess = ask_sd(thm5.as_ref(), &d0, 10, &s).index().unwrap();
        assert_eq!(s.enumerate(guess, 10), s.enumerate(c.e_prime(), 10));
        assert_eq!(ask_sd(thm5.as_ref(), &BTreeSet::new(), 10, &s).index(), Some(s.pad(s.ind(&BTreeSet::new()), &[0])));
    }

    #[test]
    fn dropping_learner_gives_mon_violation() {
        let s = HypothesisSpace::new();
        // ind(D) on short states, ∅ on long ones: never moves when a(0) arrives late
        let h = FnLearner::psd("dropper", |d, t, _, sp| {
            Answer::Defined(if t > 1 { sp.ind(&BTreeSet::new()) } else { sp.ind(d) })
        });
        let c = TotalPsdSession::new(&s, h, small()).unwrap();
        let r = c.diagnose(&s, 4);
        assert!(r.evidence.iter().any(|e| matches!(e, Evidence::MonViolation { .. })), "{r:?}");
        c.verify(&s, &r).unwrap();
    }
}
