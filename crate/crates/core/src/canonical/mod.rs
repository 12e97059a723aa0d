//! Concrete learners from the separation constructions, sample restricted
//! learners and the relation map between learning criteria.

mod registry;
mod relations;
mod samples;

pub use registry::{builtin, builtin_for, BuiltinError, BuiltinInfo, BUILTINS};
pub use relations::{relations_map, Relation, RelationEdge, RelationError, RelationMap, RelationNode};
pub use samples::{always_changer, constant_naturals, family_overgeneralizer, min_consistent, set_copier};

use crate::coding::{proj1, proj2, untriple, Nat};
use crate::hypospace::{family_of, Budget, HypothesisSpace, Index, Predicate};
use crate::learnkit::{Answer, FnLearner, SharedLearner};
use crate::textkit::{content, first, Item};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// `2ℕ` together with the languages `L_m = {0, 2, …, m−1, m}` for odd `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thm3Class {
    pub e2n: Index,
}

impl Thm3Class {
    pub fn new(space: &HypothesisSpace) -> Self {
        Thm3Class { e2n: space.evens() }
    }

    /// Index of `L_m`; `m` must be odd.
    pub fn p(&self, m: Nat, space: &HypothesisSpace) -> Index {
        debug_assert!(m % 2 == 1);
        space.ind_of((0..m).step_by(2).chain([m]))
    }

    pub fn language(m: Nat) -> BTreeSet<Nat> {
        (0..m).step_by(2).chain([m]).collect()
    }
}

pub fn thm3_learner(d: &BTreeSet<Nat>, space: &HypothesisSpace) -> Index {
    let class = Thm3Class::new(space);
    match d.iter().find(|&&x| x % 2 == 1) {
        None => class.e2n,
        Some(&m) => class.p(m, space),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AuxFlags {
    pub w: Nat,
    pub x: Nat,
    pub y: Nat,
    pub z: Nat,
}

pub fn aux_flags(sigma: &[Item]) -> AuxFlags {
    let c = content(sigma);
    let elems = || sigma.iter().filter_map(|it| it.elem());
    AuxFlags {
        w: Nat::from(!c.iter().all(|&x| x == 0)),
        x: Nat::from(c.len() > 1),
        y: elems().find(|&x| proj2(x) != 0).unwrap_or(0),
        z: elems().find(|&x| proj2(x) == 0).unwrap_or(0),
    }
}

pub fn thm4_learner(sigma: &[Item], space: &HypothesisSpace) -> Index {
    let AuxFlags { w, x, y, z } = aux_flags(sigma);
    let empty = space.ind(&BTreeSet::new());
    match (w != 0, x != 0, y != 0, z != 0) {
        (false, ..) => space.pad(empty, &[0, 0, 0, 0]),
        (true, false, true, false) => space.pad(space.ind_of([y]), &[w, 0, y, 0]),
        (true, false, false, true) => space.pad(space.ind_of([z]), &[w, 0, 0, z]),
        (true, true, true, false) => space.pad(Index::from_code(proj1(y)), &[w, x, y, 0]),
        (true, true, true, true) => space.pad(Index::from_code(proj1(z)), &[w, x, y, z]),
        _ => space.pad(empty, &[0, 0, 0, 0]),
    }
}

/// Second padding coordinate of a payload, if it is a padded index.
fn payload_parts(code: Nat, space: &HypothesisSpace) -> Option<(Nat, Nat)> {
    let idx = Index::from_code(code);
    Some((space.unpad(idx, 1).ok()?, space.unpad(idx, 2).ok()?))
}

/// Partial set-driven learner reading the payloads `φ_x(0)` of its data.
pub fn thm5_learner(d: &BTreeSet<Nat>, budget: Budget, space: &HypothesisSpace) -> Answer {
    let empty = space.ind(&BTreeSet::new());
    match d.len() {
        0 => return Answer::Defined(space.pad(empty, &[0])),
        1 => return Answer::Defined(space.pad(space.ind(d), &[0])),
        _ => {}
    }
    let mut payloads = Vec::with_capacity(d.len());
    for &x in d {
        let Some(code) = space.run_program(x, &[Item::Elem(0)], budget) else {
            return Answer::NoAnswerWithinBudget;
        };
        match payload_parts(code, space) {
            Some((e, mark)) if mark == 1 || mark == 2 => payloads.push((code, e, mark)),
            _ => return Answer::NoAnswerWithinBudget,
        }
    }
    let e0 = payloads[0].1;
    if payloads.iter().all(|&(_, e, _)| e == e0) {
        return Answer::Defined(Index::from_code(e0));
    }
    let mut ones = payloads.iter().filter(|p| p.2 == 1).map(|p| p.0);
    let ones_agree = match ones.next() {
        Some(y) => ones.all(|c| c == y),
        None => true,
    };
    let twos: BTreeSet<Nat> = payloads.iter().filter(|p| p.2 == 2).map(|p| p.1).collect();
    match (ones_agree, twos.len()) {
        (true, 1) => Answer::Defined(Index::from_code(*twos.iter().next().expect("one element"))),
        _ => Answer::NoAnswerWithinBudget,
    }
}

/// Total partially set-driven learner built around a halting probe `φ_p(0)`.
pub fn thm6_learner(d: &BTreeSet<Nat>, t: usize, space: &HypothesisSpace) -> Index {
    if d.is_empty() {
        return space.ind(&BTreeSet::new());
    }
    let coords: Vec<(Nat, Nat, Nat)> = d.iter().map(|&x| untriple(x)).collect();
    let es: BTreeSet<Nat> = coords.iter().map(|c| c.0).collect();
    let ps: BTreeSet<Nat> = coords.iter().map(|c| c.1).collect();
    if es.len() > 1 || ps.len() > 1 {
        return space.naturals();
    }
    let (e, p, _) = coords[0];
    let e = Index::from_code(e);
    match space.run_program(p, &[Item::Elem(0)], t as Budget) {
        None => e,
        Some(_) => space.join(e, d),
    }
}

/// The indices and the search `f` a self-learning element program consults.
pub trait CoolsepView {
    fn session(&self) -> Nat;
    /// `e_j` with `W_{e_j} = range(a_j)`.
    fn family_index(&self, j: Nat, space: &HypothesisSpace) -> Index {
        space.decidable(Predicate::FamilyRange { session: self.session(), family: j })
    }
    fn hat_index(&self, k: Nat, space: &HypothesisSpace) -> Index;
    fn e_index(&self, space: &HypothesisSpace) -> Index;
    /// Least `i <= limit` passing the overgeneralization test for family `j`.
    fn f_upto(&self, j: Nat, limit: Nat, space: &HypothesisSpace) -> Option<Nat>;
}

/// `φ_{a_j(i)}(σ)` for an element program of the session behind `view`.
///
/// Deciding whether `f(k) = i` needs the search up to `i`, so an element
/// `a_k(i)` with `i >= budget` leaves the answer undefined.
pub fn coolsep_case(view: &dyn CoolsepView, j: Nat, sigma: &[Item], budget: Budget, space: &HypothesisSpace) -> Option<Index> {
    let s = view.session();
    let members: Vec<Option<(Nat, Nat)>> = content(sigma)
        .into_iter()
        .map(|x| family_of(x).filter(|c| c.0 == s).map(|c| (c.1, c.2)))
        .collect();
    if members.iter().all(|m| matches!(m, Some((fam, _)) if *fam == j)) {
        return Some(view.family_index(j, space));
    }
    let mut hit = None;
    for &(k, i) in members.iter().flatten() {
        if i >= budget {
            return None;
        }
        if view.f_upto(k, i, space) == Some(i) && hit.is_none_or(|h| k > h) {
            hit = Some(k);
        }
    }
    if let Some(k) = hit {
        return Some(view.hat_index(k, space));
    }
    let max_family = members.iter().flatten().map(|m| m.0).max();
    let first_family = first(sigma).and_then(family_of).filter(|c| c.0 == s).map(|c| c.1);
    match (first_family, max_family) {
        (Some(a), Some(b)) if a == b => Some(view.hat_index(a, space)),
        _ => Some(view.e_index(space)),
    }
}

/// The Gold-style self-learning learner: dispatches to the program named by
/// the largest element seen.
pub fn coolsep_learner(sigma: &[Item], budget: Budget, space: &HypothesisSpace) -> Answer {
    let c = content(sigma);
    match c.iter().next_back() {
        None => Answer::Defined(space.ind(&BTreeSet::new())),
        Some(&max) => space.run_program(max, sigma, budget).map(Index::from_code).into(),
    }
}

pub fn thm3() -> SharedLearner {
    FnLearner::sd("thm3", |d, _, space| Answer::Defined(thm3_learner(d, space)))
}

pub fn thm4() -> SharedLearner {
    FnLearner::gold("thm4", |s, _, space| Answer::Defined(thm4_learner(s, space)))
}

pub fn thm5() -> SharedLearner {
    FnLearner::sd("thm5", thm5_learner)
}

pub fn thm6() -> SharedLearner {
    FnLearner::psd("thm6", |d, t, _, space| Answer::Defined(thm6_learner(d, t, space)))
}

pub fn coolsep() -> SharedLearner {
    FnLearner::gold("coolsep", coolsep_learner)
}
