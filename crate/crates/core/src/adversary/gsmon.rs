//! Forcing mind changes out of a partially set-driven learner on strongly
//! monotone texts.
//!
//! The session's elements are `⟨e, m⟩ = pair(e, m)`. Stage `i` extends `σ_i` by
//! `⟨e, 2i+1⟩^t` or else `⟨e, 2i+2⟩^t` for the least `t ≤ search_bound` that
//! makes `h′` change its mind.

use super::{require_kind, AdversaryError, Budgets, Evidence, LearnerInput, Reentry, ReplayError, Variant, WitnessReport};
use crate::coding::{pair, unpair, Nat};
use crate::criteria::{verify_monotonicity_witness, MonotonicityWitness, Tier};
use crate::hypospace::{Budget, Decision, HypothesisSpace, Index, LanguageDescriptor, LazyLanguage};
use crate::learnkit::{ask_psd, run, LearnerKind, SharedLearner};
use crate::textkit::{repeat, Item, SequencePrefix, Text};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Step {
    x: Nat,
    t: usize,
    hyp: Index,
}

#[derive(Default)]
struct Chain {
    /// `h′(σ_0)` once asked.
    start: Option<Option<Index>>,
    steps: Vec<Step>,
    stuck: bool,
}

struct State {
    e: Index,
    learner: SharedLearner,
    budgets: Budgets,
    chain: Mutex<Chain>,
    busy: Mutex<BTreeSet<usize>>,
    padded: Mutex<BTreeMap<BTreeSet<Nat>, Index>>,
}

#[derive(Clone)]
struct Handle(Arc<State>);

impl Handle {
    fn elem(&self, m: Nat) -> Nat {
        pair(self.0.e.code(), m)
    }

    fn hyp(&self, content: &BTreeSet<Nat>, len: usize, space: &HypothesisSpace) -> Option<Index> {
        ask_psd(self.0.learner.as_ref(), content, len, self.0.budgets.enum_budget, space).index()
    }

    fn sigma(steps: &[Step]) -> SequencePrefix {
        let mut s = SequencePrefix::empty();
        for st in steps {
            s = s.concat(&repeat(st.x, st.t));
        }
        s
    }

    /// Steps `σ_0 … σ_k` for `k ≤ upto`, as far as they exist.
    fn steps(&self, upto: usize, space: &HypothesisSpace) -> (Option<Index>, Vec<Step>) {
        let upto = upto.min(self.0.budgets.search_bound as usize);
        loop {
            let (start, steps, stuck) = {
                let c = self.0.chain.lock().expect("chain lock");
                (c.start, c.steps.clone(), c.stuck)
            };
            let Some(start) = start else {
                let h0 = self.hyp(&BTreeSet::new(), 0, space);
                let mut c = self.0.chain.lock().expect("chain lock");
                c.start.get_or_insert(h0);
                c.stuck |= h0.is_none();
                continue;
            };
            if stuck || steps.len() >= upto {
                let n = steps.len().min(upto);
                return (start, steps[..n].to_vec());
            }
            let i = steps.len();
            let Some(_guard) = Reentry::enter(&self.0.busy, i) else {
                return (start, steps);
            };
            let current = steps.last().map_or(start, |s| Some(s.hyp)).expect("defined chain");
            let sigma = Self::sigma(&steps);
            let next = self.next_step(i, &sigma, current, space);
            let mut c = self.0.chain.lock().expect("chain lock");
            if c.steps.len() == i && !c.stuck {
                match next {
                    Some(s) => c.steps.push(s),
                    None => c.stuck = true,
                }
            }
        }
    }

    fn next_step(&self, i: usize, sigma: &SequencePrefix, current: Index, space: &HypothesisSpace) -> Option<Step> {
        let base = sigma.content();
        for m in [2 * i as Nat + 1, 2 * i as Nat + 2] {
            let x = self.elem(m);
            let mut d = base.clone();
            d.insert(x);
            for t in 1..=self.0.budgets.search_bound as usize {
                if let Some(h) = self.hyp(&d, sigma.len() + t, space) {
                    if h != current {
                        return Some(Step { x, t, hyp: h });
                    }
                }
            }
        }
        None
    }

    /// Least `t ≤ search_bound` with `x ∈ W_{h′({x}, t)}`.
    fn singleton_time(&self, x: Nat, space: &HypothesisSpace) -> Option<usize> {
        let d: BTreeSet<Nat> = [x].into();
        (1..=self.0.budgets.search_bound as usize).find(|&t| {
            self.hyp(&d, t, space).is_some_and(|h| space.witnessed_member(h, x, self.0.budgets.enum_budget))
        })
    }
}

/// `W_e = ∪_i content(σ_i)`.
struct WeLang(Handle);

impl LazyLanguage for WeLang {
    fn describe(&self) -> String {
        format!("gsmon[{}].e", self.0 .0.e.code())
    }

    fn enumerate(&self, budget: Budget, space: &HypothesisSpace) -> BTreeSet<Nat> {
        let (_, steps) = self.0.steps(budget as usize, space);
        steps.iter().map(|s| s.x).collect()
    }

    fn decide(&self, x: Nat, space: &HypothesisSpace) -> Decision {
        let (a, m) = unpair(x);
        if a != self.0 .0.e.code() || m == 0 {
            return Decision::No;
        }
        let stage = ((m - 1) / 2) as usize;
        let (_, steps) = self.0.steps(stage + 1, space);
        if steps.get(stage).is_some_and(|s| s.x == x) {
            Decision::Yes
        } else {
            Decision::No
        }
    }
}

pub struct GsmonSession {
    h: Handle,
}

impl GsmonSession {
    pub fn new(space: &HypothesisSpace, learner: SharedLearner, budgets: Budgets) -> Result<Self, AdversaryError> {
        require_kind("gsmon", &learner, LearnerKind::PartiallySetDriven)?;
        let e = space.allocate();
        let h = Handle(Arc::new(State {
            e,
            learner,
            budgets,
            chain: Mutex::default(),
            busy: Mutex::default(),
            padded: Mutex::default(),
        }));
        space.bind(e, LanguageDescriptor::Lazy(Arc::new(WeLang(h.clone())))).expect("fresh slot");
        Ok(GsmonSession { h })
    }

    pub fn e(&self) -> Index {
        self.h.0.e
    }

    pub fn element(&self, m: Nat) -> Nat {
        self.h.elem(m)
    }

    /// `σ_k`, if the construction gets that far.
    pub fn sigma(&self, k: usize, space: &HypothesisSpace) -> Option<SequencePrefix> {
        let (start, steps) = self.h.steps(k, space);
        (start.is_some() && steps.len() == k).then(|| Handle::sigma(&steps))
    }

    /// `a(D)` with `W_{a(D)} = D ∪ {⟨a(D), 0⟩}`.
    pub fn a_of(&self, d: &BTreeSet<Nat>, space: &HypothesisSpace) -> Index {
        let mut memo = self.h.0.padded.lock().expect("a(D) lock");
        if let Some(&a) = memo.get(d) {
            return a;
        }
        let a = space.allocate();
        let mut lang = d.clone();
        lang.insert(pair(a.code(), 0));
        space.bind(a, LanguageDescriptor::Finite(lang)).expect("fresh slot");
        memo.insert(d.clone(), a);
        a
    }

    fn report(&self, variant: Variant, evidence: Vec<Evidence>) -> WitnessReport {
        WitnessReport {
            theorem: "gsmon".into(),
            learner: self.h.0.learner.name().to_string(),
            variant,
            evidence,
            budgets: self.h.0.budgets,
        }
    }

    fn state(prefix: &SequencePrefix) -> LearnerInput {
        LearnerInput::State { content: prefix.content(), length: prefix.len() }
    }

    pub fn diagnose(&self, space: &HypothesisSpace, goal: usize) -> WitnessReport {
        let b = self.h.0.budgets;
        let (start, steps) = self.h.steps(goal, space);
        let Some(h0) = start else {
            return self.report(Variant::BudgetExhausted { stage: "no hypothesis on the empty sequence".into() }, vec![]);
        };
        let mut evidence = vec![Evidence::Conjecture { input: Self::state(&SequencePrefix::empty()), answer: Some(h0) }];
        for k in 1..=steps.len() {
            let s = Handle::sigma(&steps[..k]);
            evidence.push(Evidence::Conjecture { input: Self::state(&s), answer: Some(steps[k - 1].hyp) });
        }
        if steps.len() >= goal {
            let prefix = Handle::sigma(&steps);
            evidence.push(Evidence::MindChanges { prefix: prefix.clone(), count: goal });
            return self.report(Variant::InfiniteMindChanges { prefix, count: goal }, evidence);
        }
        let k = steps.len();
        if k == b.search_bound as usize {
            return self.report(Variant::BudgetExhausted { stage: format!("stage cap {k}") }, evidence);
        }
        let sigma = Handle::sigma(&steps);
        let hk = steps.last().map_or(h0, |s| s.hyp);
        let xs = [self.h.elem(2 * k as Nat + 1), self.h.elem(2 * k as Nat + 2)];
        let mut times = Vec::new();
        for &x in &xs {
            match self.h.singleton_time(x, space) {
                Some(t) => times.push(t),
                None => {
                    return self.report(Variant::SingletonNotLearned { element: x, bound: b.search_bound }, vec![]);
                }
            }
        }
        // h′ keeps hk on σ_k x^t for every t ≤ bound; a hypothesis that learns {x}
        // early and lacks x on σ_k breaks Mon on x^t σ_k.
        for (&x, &t) in xs.iter().zip(&times) {
            if space.decide(hk, x) != Decision::No {
                continue;
            }
            let mut prefix = repeat(x, t).concat(&sigma);
            if sigma.is_empty() {
                prefix.push(Item::Pause);
            }
            if let Some(ev) = self.violation(space, prefix, x, t, &sigma) {
                return self.report(Variant::MonotonicityTrap { sigma_k: sigma.clone(), kept: vec![] }, vec![ev]);
            }
        }
        if !xs.iter().all(|&x| space.witnessed_member(hk, x, b.enum_budget)) {
            return self.report(Variant::BudgetExhausted { stage: format!("membership at stage {k}") }, evidence);
        }
        // Pauses after σ_k: a hypothesis dropping x breaks Mon on a text for content(σ_k) ∪ {x}.
        for t in 1..=b.horizon {
            let mut prefix = sigma.clone();
            for _ in 0..t {
                prefix.push(Item::Pause);
            }
            for &x in &xs {
                if let Some(ev) = self.violation(space, prefix.clone(), x, sigma.len(), &sigma) {
                    return self.report(Variant::MonotonicityTrap { sigma_k: sigma.clone(), kept: vec![] }, vec![ev]);
                }
            }
        }
        for &x in &xs {
            evidence.push(Evidence::Member { index: hk, x });
            evidence.push(Evidence::NonMember { index: self.e(), x });
        }
        self.report(Variant::MonotonicityTrap { sigma_k: sigma, kept: xs.to_vec() }, evidence)
    }

    /// A Mon violation on `prefix` dropping `x` after position `n`, for the target
    /// `content(σ_k) ∪ {x}`.
    fn violation(
        &self,
        space: &HypothesisSpace,
        prefix: SequencePrefix,
        x: Nat,
        n: usize,
        sigma: &SequencePrefix,
    ) -> Option<Evidence> {
        let budget = self.h.0.budgets.enum_budget;
        let mut d = sigma.content();
        d.insert(x);
        let target = self.a_of(&d, space);
        let seq = run(self.h.0.learner.as_ref(), &Text::finite(prefix.clone()), prefix.len(), budget, space);
        let witness = MonotonicityWitness { n, m: prefix.len(), x, tier: Tier::Exact };
        verify_monotonicity_witness(space, &seq, &witness, Some(target), budget)
            .then_some(Evidence::MonViolation { prefix, target, witness })
    }

    pub fn verify(&self, space: &HypothesisSpace, report: &WitnessReport) -> Result<(), ReplayError> {
        super::replay(report, self.h.0.learner.as_ref(), space)?;
        let b = self.h.0.budgets;
        match &report.variant {
            Variant::InfiniteMindChanges { prefix, count } => {
                let own = prefix.content().iter().all(|&x| unpair(x).0 == self.e().code());
                if own && report.evidence.iter().any(|ev| matches!(ev, Evidence::MindChanges { count: c, .. } if c >= count)) {
                    Ok(())
                } else {
                    Err(ReplayError::Structure("mind changes are not on session elements".into()))
                }
            }
            Variant::MonotonicityTrap { sigma_k, kept } if !kept.is_empty() => {
                let hk = self
                    .h
                    .hyp(&sigma_k.content(), sigma_k.len(), space)
                    .ok_or_else(|| ReplayError::Structure("no hypothesis on σ_k".into()))?;
                for &x in kept {
                    let mut d = sigma_k.content();
                    d.insert(x);
                    for t in 1..=b.search_bound as usize {
                        if self.h.hyp(&d, sigma_k.len() + t, space).is_some_and(|h| h != hk) {
                            return Err(ReplayError::Structure(format!("h′ moves on σ_k {x}^{t}")));
                        }
                    }
                }
                Ok(())
            }
            Variant::SingletonNotLearned { element, .. } => match self.h.singleton_time(*element, space) {
                None => Ok(()),
                Some(t) => Err(ReplayError::Structure(format!("{{{element}}} learned at {t}"))),
            },
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::builtin_for;
    use crate::learnkit::{Answer, FnLearner};

    fn small() -> Budgets {
        Budgets { horizon: 10, enum_budget: 50, search_bound: 10, goal: 4 }
    }

    fn session(name: &str, space: &HypothesisSpace) -> GsmonSession {
        GsmonSession::new(space, builtin_for(name, LearnerKind::PartiallySetDriven, true).unwrap(), small()).unwrap()
    }

    #[test]
    fn min_consistent_changes_every_stage() {
        let s = HypothesisSpace::new();
        let g = session("min-consistent", &s);
        let r = g.diagnose(&s, 4);
        let Variant::InfiniteMindChanges { prefix, count } = &r.variant else { panic!("{:?}", r.variant) };
        assert_eq!(*count, 4);
        assert_eq!(prefix.items(), &[1, 3, 5, 7].map(|m| Item::Elem(g.element(m)))[..]);
        g.verify(&s, &r).unwrap();
        assert_eq!(s.decide(g.e(), g.element(3)), Decision::Yes);
        assert_eq!(s.decide(g.e(), g.element(4)), Decision::No);
        assert_eq!(s.decide(g.e(), 7), Decision::No);
    }

    #[test]
    fn constant_learner_is_trapped() {
        let s = HypothesisSpace::new();
        let g = session("constant", &s);
        let r = g.diagnose(&s, 4);
        assert_eq!(r.variant, Variant::MonotonicityTrap { sigma_k: SequencePrefix::empty(), kept: vec![g.element(1), g.element(2)] });
        g.verify(&s, &r).unwrap();
        assert!(s.enumerate(g.e(), 10).is_empty());
    }

    #[test]
    fn stubborn_singleton_learner_breaks_mon() {
        let s = HypothesisSpace::new();
        // {min D}: stuck after the first element, yet learns every singleton at once
        let h = FnLearner::psd("stubborn", |d, _, _, sp| Answer::Defined(sp.ind_of(d.iter().next().copied())));
        let g = GsmonSession::new(&s, h, small()).unwrap();
        let r = g.diagnose(&s, 4);
        let x1 = g.element(1);
        assert_eq!(r.variant, Variant::MonotonicityTrap { sigma_k: SequencePrefix::new(vec![Item::Elem(x1)]), kept: vec![] });
        g.verify(&s, &r).unwrap();
    }

    #[test]
    fn silent_learner_exhausts() {
        let s = HypothesisSpace::new();
        let h = FnLearner::psd("silent", |_, _, _, _| Answer::NoAnswerWithinBudget);
        let g = GsmonSession::new(&s, h, small()).unwrap();
        assert!(!g.diagnose(&s, 2).variant.is_definitive());
    }
}
