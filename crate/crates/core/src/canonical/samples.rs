//! Small restricted learners used as adversary targets.

use crate::coding::Nat;
use crate::hypospace::{family_of, HypothesisSpace, Index, Predicate};
use crate::learnkit::{Answer, FnLearner, LearnerKind, SharedLearner};
use std::collections::{BTreeMap, BTreeSet};

/// `ind(D)`.
pub fn set_copier(kind: LearnerKind) -> Option<SharedLearner> {
    match kind {
        LearnerKind::SetDriven => Some(FnLearner::sd("set-copier", |d, _, s| Answer::Defined(s.ind(d)))),
        LearnerKind::PartiallySetDriven => {
            Some(FnLearner::psd("set-copier", |d, _, _, s| Answer::Defined(s.ind(d))))
        }
        LearnerKind::Gold => None,
    }
}

/// Guesses the whole family range (or union of ranges) of the family elements
/// seen, plus whatever else was seen.
pub fn overgeneralize(d: &BTreeSet<Nat>, space: &HypothesisSpace) -> Index {
    let mut families: BTreeMap<Nat, BTreeSet<Nat>> = BTreeMap::new();
    let mut rest = BTreeSet::new();
    for &x in d {
        match family_of(x) {
            Some((s, j, _)) => {
                families.entry(s).or_default().insert(j);
            }
            None => {
                rest.insert(x);
            }
        }
    }
    let Some((&session, fams)) = families.iter().next() else {
        return space.ind(d);
    };
    for (&s, js) in families.iter().skip(1) {
        rest.extend(d.iter().copied().filter(|&x| matches!(family_of(x), Some((t, j, _)) if t == s && js.contains(&j))));
    }
    let base = if fams.len() == 1 {
        space.decidable(Predicate::FamilyRange { session, family: *fams.iter().next().expect("non-empty") })
    } else {
        space.decidable(Predicate::FamilyUnion { session, families: fams.clone() })
    };
    if rest.is_empty() {
        base
    } else {
        space.join(base, &rest)
    }
}

pub fn family_overgeneralizer(kind: LearnerKind) -> Option<SharedLearner> {
    const NAME: &str = "family-overgeneralizer";
    match kind {
        LearnerKind::SetDriven => Some(FnLearner::sd(NAME, |d, _, s| Answer::Defined(overgeneralize(d, s)))),
        LearnerKind::PartiallySetDriven => {
            Some(FnLearner::psd(NAME, |d, _, _, s| Answer::Defined(overgeneralize(d, s))))
        }
        LearnerKind::Gold => None,
    }
}

/// Least language consistent with the data: `ind(D)`.
pub fn min_consistent() -> SharedLearner {
    FnLearner::psd("min-consistent", |d, _, _, s| Answer::Defined(s.ind(d)))
}

/// Always `ℕ`.
pub fn constant_naturals(kind: LearnerKind) -> Option<SharedLearner> {
    match kind {
        LearnerKind::SetDriven => Some(FnLearner::sd("constant", |_, _, s| Answer::Defined(s.naturals()))),
        LearnerKind::PartiallySetDriven => {
            Some(FnLearner::psd("constant", |_, _, _, s| Answer::Defined(s.naturals())))
        }
        LearnerKind::Gold => None,
    }
}

/// `pad(ind(D), t)`: a new hypothesis at every step.
pub fn always_changer() -> SharedLearner {
    FnLearner::psd("always-changer", |d, t, _, s| Answer::Defined(s.pad(s.ind(d), &[t as Nat])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypospace::{family_element, Decision};
    use crate::learnkit::ask_psd;

    #[test]
    fn overgeneralizer_shapes() {
        let s = HypothesisSpace::new();
        assert_eq!(overgeneralize(&BTreeSet::new(), &s), s.ind(&BTreeSet::new()));
        let one = overgeneralize(&[family_element(0, 2, 0)].into(), &s);
        assert_eq!(s.decide(one, family_element(0, 2, 40)), Decision::Yes);
        assert_eq!(s.decide(one, family_element(0, 1, 0)), Decision::No);
        let two = overgeneralize(&[family_element(0, 2, 0), family_element(0, 1, 3), 5].into(), &s);
        assert_eq!(s.decide(two, family_element(0, 1, 0)), Decision::Yes);
        assert_eq!(s.decide(two, 5), Decision::Yes);
        assert_eq!(s.decide(two, 4), Decision::No);
    }

    #[test]
    fn always_changer_changes() {
        let s = HypothesisSpace::new();
        let h = always_changer();
        let d: BTreeSet<Nat> = [3].into();
        let a = ask_psd(h.as_ref(), &d, 1, 10, &s);
        let b = ask_psd(h.as_ref(), &d, 2, 10, &s);
        assert_ne!(a, b);
        assert_eq!(s.enumerate(a.index().unwrap(), 10), d);
    }
}
