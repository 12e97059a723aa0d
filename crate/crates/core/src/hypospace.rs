//! The hypothesis space: which language each [`Index`] names.
//!
//! Indices are tagged codes. `FIN` and `PAD` payloads are hash-consed inside the
//! space, so `ind` and `pad` are injective and syntactic equality of indices is
//! plain code equality. `REG` payloads are registry slots filled by
//! allocate-then-bind, which is how self-referential languages are built: the
//! index is handed out first and its descriptor may mention it afterwards.
//! `PROG` payloads name programs of a registered session family.
//!
//! Budgets are step counts. One step is one generator advancement or one learner
//! evaluation inside a lazy descriptor, so every enumeration terminates and is
//! reproducible.

use crate::coding::{decode, encode, pair, unpair, Nat, Tag};
use crate::textkit::Item;
use indexmap::IndexSet;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, RwLock};
use thiserror::Error;

pub type Budget = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Index(Nat);

impl Index {
    pub const fn from_code(code: Nat) -> Self {
        Index(code)
    }

    pub const fn code(self) -> Nat {
        self.0
    }

    pub fn tag(self) -> Option<Tag> {
        decode(self.0).map(|c| c.tag)
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Built-in decidable languages.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Predicate {
    Evens,
    Naturals,
    /// `range(a_j)` for the element family `j` of a session.
    FamilyRange { session: Nat, family: Nat },
    /// Union of several family ranges of one session.
    FamilyUnion { session: Nat, families: BTreeSet<Nat> },
}

/// Element `i` of family `j` in session `session`: a `PROG` code, strictly
/// increasing in `i`, with pairwise disjoint ranges for distinct `(session, j)`.
pub fn family_element(session: Nat, family: Nat, i: Nat) -> Nat {
    encode(Tag::Prog, pair(session, pair(family, i)))
}

/// Inverse of [`family_element`] on `PROG` codes.
pub fn family_of(x: Nat) -> Option<(Nat, Nat, Nat)> {
    let c = decode(x)?;
    if c.tag != Tag::Prog {
        return None;
    }
    let (session, rest) = unpair(c.payload);
    let (family, i) = unpair(rest);
    Some((session, family, i))
}

impl Predicate {
    pub fn contains(&self, x: Nat) -> bool {
        match self {
            Predicate::Evens => x.is_multiple_of(2),
            Predicate::Naturals => true,
            Predicate::FamilyRange { session, family } => {
                matches!(family_of(x), Some((s, j, _)) if s == *session && j == *family)
            }
            Predicate::FamilyUnion { session, families } => {
                matches!(family_of(x), Some((s, j, _)) if s == *session && families.contains(&j))
            }
        }
    }

    /// The `budget` smallest elements (per family for family predicates).
    pub fn enumerate(&self, budget: Budget) -> BTreeSet<Nat> {
        match self {
            Predicate::Evens => (0..budget).map(|k| 2 * k).collect(),
            Predicate::Naturals => (0..budget).collect(),
            Predicate::FamilyRange { session, family } => {
                (0..budget).map(|i| family_element(*session, *family, i)).collect()
            }
            Predicate::FamilyUnion { session, families } => families
                .iter()
                .flat_map(|&j| (0..budget).map(move |i| family_element(*session, j, i)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Yes,
    No,
    NotDecidable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Membership {
    Yes,
    Unknown,
}

/// A language whose enumeration is produced by a session on demand.
pub trait LazyLanguage: Send + Sync {
    fn describe(&self) -> String;

    /// Must be monotone non-decreasing in `budget` and deterministic.
    fn enumerate(&self, budget: Budget, space: &HypothesisSpace) -> BTreeSet<Nat>;

    fn decide(&self, _x: Nat, _space: &HypothesisSpace) -> Decision {
        Decision::NotDecidable
    }
}

/// Programs `φ_x` for `PROG` codes `x` whose payload is `pair(session, local)`.
pub trait ProgramFamily: Send + Sync {
    /// Runs program `local` on `input`; `None` when it does not halt within
    /// `budget` steps.
    fn call(&self, local: Nat, input: &[Item], budget: Budget, space: &HypothesisSpace)
        -> Option<Nat>;
}

#[derive(Clone)]
pub enum LanguageDescriptor {
    Finite(BTreeSet<Nat>),
    Decidable(Predicate),
    PadOf(Index, Vec<Nat>),
    JoinOf(Index, BTreeSet<Nat>),
    Lazy(Arc<dyn LazyLanguage>),
}

impl fmt::Debug for LanguageDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LanguageDescriptor::Finite(s) => f.debug_tuple("Finite").field(s).finish(),
            LanguageDescriptor::Decidable(p) => f.debug_tuple("Decidable").field(p).finish(),
            LanguageDescriptor::PadOf(e, ks) => f.debug_tuple("PadOf").field(e).field(ks).finish(),
            LanguageDescriptor::JoinOf(e, d) => f.debug_tuple("JoinOf").field(e).field(d).finish(),
            LanguageDescriptor::Lazy(l) => write!(f, "Lazy({})", l.describe()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpaceError {
    #[error("index {0} is not a padded index")]
    NotPadded(Index),
    #[error("index {0} has no coordinate {1}")]
    NoSuchCoordinate(Index, usize),
    #[error("index {0} is already bound")]
    DoubleBind(Index),
    #[error("index {0} was never allocated")]
    UnknownIndex(Index),
}

/// Outcome of a bounded equality test between a hypothesis and a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LangEquality {
    Confirmed,
    RefutedExtra(Nat),
    RefutedMissing(Nat),
    Inconclusive,
}

impl LangEquality {
    pub fn is_refuted(self) -> bool {
        matches!(self, LangEquality::RefutedExtra(_) | LangEquality::RefutedMissing(_))
    }
}

enum Slot {
    Unbound,
    Bound(LanguageDescriptor),
}

#[derive(Default)]
struct Registry {
    sets: IndexSet<BTreeSet<Nat>>,
    pads: IndexSet<(Index, Vec<Nat>)>,
    slots: Vec<Slot>,
    predicate_slots: HashMap<Predicate, Nat>,
    join_slots: HashMap<(Index, BTreeSet<Nat>), Nat>,
    families: Vec<Arc<dyn ProgramFamily>>,
}

enum Resolved {
    Empty,
    Unbound,
    Descriptor(LanguageDescriptor),
}

/// Registry of descriptors behind indices.
///
/// Reads may run concurrently; allocations and bindings take the write lock.
/// No lock is held while a lazy generator or program runs, so generators may
/// call back into the space.
#[derive(Default)]
pub struct HypothesisSpace {
    registry: RwLock<Registry>,
}

impl HypothesisSpace {
    pub fn new() -> Self {
        Self::default()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Registry> {
        self.registry.read().expect("registry lock poisoned")
    }

    fn write(&self) -> std::sync::RwLockWriteGuard<'_, Registry> {
        self.registry.write().expect("registry lock poisoned")
    }

    pub fn ind(&self, set: &BTreeSet<Nat>) -> Index {
        if let Some(pos) = self.read().sets.get_index_of(set) {
            return Index(encode(Tag::Fin, pos as Nat));
        }
        let (pos, _) = self.write().sets.insert_full(set.clone());
        Index(encode(Tag::Fin, pos as Nat))
    }

    pub fn ind_of<I: IntoIterator<Item = Nat>>(&self, items: I) -> Index {
        self.ind(&items.into_iter().collect())
    }

    /// Padded copy of `e`. An empty `extras` list returns `e` unchanged.
    pub fn pad(&self, e: Index, extras: &[Nat]) -> Index {
        if extras.is_empty() {
            return e;
        }
        let key = (e, extras.to_vec());
        if let Some(pos) = self.read().pads.get_index_of(&key) {
            return Index(encode(Tag::Pad, pos as Nat));
        }
        let (pos, _) = self.write().pads.insert_full(key);
        Index(encode(Tag::Pad, pos as Nat))
    }

    fn pad_parts(&self, x: Index) -> Result<(Index, Vec<Nat>), SpaceError> {
        match decode(x.code()) {
            Some(c) if c.tag == Tag::Pad => self
                .read()
                .pads
                .get_index(c.payload as usize)
                .cloned()
                .ok_or(SpaceError::NotPadded(x)),
            _ => Err(SpaceError::NotPadded(x)),
        }
    }

    /// Coordinate `i` (1-based) of a padded index: `unpad(x, 1)` is the padded
    /// index itself, `unpad(x, i + 1)` the `i`-th extra.
    pub fn unpad(&self, x: Index, i: usize) -> Result<Nat, SpaceError> {
        let (e, extras) = self.pad_parts(x)?;
        match i {
            0 => Err(SpaceError::NoSuchCoordinate(x, 0)),
            1 => Ok(e.code()),
            _ => extras.get(i - 2).copied().ok_or(SpaceError::NoSuchCoordinate(x, i)),
        }
    }

    pub fn join(&self, e: Index, set: &BTreeSet<Nat>) -> Index {
        let key = (e, set.clone());
        if let Some(&slot) = self.read().join_slots.get(&key) {
            return Index(encode(Tag::Reg, slot));
        }
        let mut reg = self.write();
        if let Some(&slot) = reg.join_slots.get(&key) {
            return Index(encode(Tag::Reg, slot));
        }
        let slot = reg.slots.len() as Nat;
        reg.slots.push(Slot::Bound(LanguageDescriptor::JoinOf(e, set.clone())));
        reg.join_slots.insert(key, slot);
        Index(encode(Tag::Reg, slot))
    }

    pub fn decidable(&self, pred: Predicate) -> Index {
        if let Some(&slot) = self.read().predicate_slots.get(&pred) {
            return Index(encode(Tag::Reg, slot));
        }
        let mut reg = self.write();
        if let Some(&slot) = reg.predicate_slots.get(&pred) {
            return Index(encode(Tag::Reg, slot));
        }
        let slot = reg.slots.len() as Nat;
        reg.slots.push(Slot::Bound(LanguageDescriptor::Decidable(pred.clone())));
        reg.predicate_slots.insert(pred, slot);
        Index(encode(Tag::Reg, slot))
    }

    pub fn evens(&self) -> Index {
        self.decidable(Predicate::Evens)
    }

    pub fn naturals(&self) -> Index {
        self.decidable(Predicate::Naturals)
    }

    /// Index for an arbitrary descriptor. Structural descriptors are
    /// hash-consed; lazy ones receive a fresh slot.
    pub fn index_of(&self, desc: LanguageDescriptor) -> Index {
        match desc {
            LanguageDescriptor::Finite(s) => self.ind(&s),
            LanguageDescriptor::Decidable(p) => self.decidable(p),
            LanguageDescriptor::PadOf(e, ks) => self.pad(e, &ks),
            LanguageDescriptor::JoinOf(e, d) => self.join(e, &d),
            lazy @ LanguageDescriptor::Lazy(_) => {
                let x = self.allocate();
                self.bind(x, lazy).expect("fresh slot is unbound");
                x
            }
        }
    }

    pub fn allocate(&self) -> Index {
        let mut reg = self.write();
        let slot = reg.slots.len() as Nat;
        reg.slots.push(Slot::Unbound);
        Index(encode(Tag::Reg, slot))
    }

    pub fn bind(&self, x: Index, desc: LanguageDescriptor) -> Result<(), SpaceError> {
        let c = decode(x.code()).filter(|c| c.tag == Tag::Reg).ok_or(SpaceError::UnknownIndex(x))?;
        let mut reg = self.write();
        let slot = reg.slots.get_mut(c.payload as usize).ok_or(SpaceError::UnknownIndex(x))?;
        match slot {
            Slot::Unbound => {
                *slot = Slot::Bound(desc);
                Ok(())
            }
            Slot::Bound(_) => Err(SpaceError::DoubleBind(x)),
        }
    }

    /// Registers a program family; the returned session id is the first
    /// component of the `PROG` payloads it answers for.
    pub fn register_family(&self, family: Arc<dyn ProgramFamily>) -> Nat {
        let mut reg = self.write();
        reg.families.push(family);
        (reg.families.len() - 1) as Nat
    }

    /// Runs `φ_code(input)` for `PROG` codes; every other code diverges.
    pub fn run_program(&self, code: Nat, input: &[Item], budget: Budget) -> Option<Nat> {
        let c = decode(code).filter(|c| c.tag == Tag::Prog)?;
        let (session, local) = unpair(c.payload);
        let family = self.read().families.get(session as usize).cloned()?;
        family.call(local, input, budget, self)
    }

    pub fn descriptor(&self, e: Index) -> Option<LanguageDescriptor> {
        match self.resolve(e) {
            Resolved::Descriptor(d) => Some(d),
            _ => None,
        }
    }

    fn resolve(&self, e: Index) -> Resolved {
        let Some(c) = decode(e.code()) else {
            return Resolved::Empty;
        };
        let reg = self.read();
        let found = match c.tag {
            Tag::Fin => reg.sets.get_index(c.payload as usize).cloned().map(LanguageDescriptor::Finite),
            Tag::Pad => reg
                .pads
                .get_index(c.payload as usize)
                .cloned()
                .map(|(e, ks)| LanguageDescriptor::PadOf(e, ks)),
            Tag::Reg => match reg.slots.get(c.payload as usize) {
                Some(Slot::Bound(d)) => Some(d.clone()),
                Some(Slot::Unbound) => return Resolved::Unbound,
                None => None,
            },
            Tag::Prog | Tag::Plain => None,
        };
        found.map_or(Resolved::Empty, Resolved::Descriptor)
    }

    pub fn enumerate(&self, e: Index, budget: Budget) -> BTreeSet<Nat> {
        match self.resolve(e) {
            Resolved::Empty | Resolved::Unbound => BTreeSet::new(),
            Resolved::Descriptor(d) => self.enumerate_descriptor(&d, budget),
        }
    }

    pub fn enumerate_descriptor(&self, desc: &LanguageDescriptor, budget: Budget) -> BTreeSet<Nat> {
        match desc {
            LanguageDescriptor::Finite(s) => s.clone(),
            LanguageDescriptor::Decidable(p) => p.enumerate(budget),
            LanguageDescriptor::PadOf(e, _) => self.enumerate(*e, budget),
            LanguageDescriptor::JoinOf(e, d) => {
                let mut out = self.enumerate(*e, budget);
                out.extend(d.iter().copied());
                out
            }
            LanguageDescriptor::Lazy(l) => l.enumerate(budget, self),
        }
    }

    pub fn member(&self, e: Index, x: Nat, budget: Budget) -> Membership {
        if self.enumerate(e, budget).contains(&x) {
            Membership::Yes
        } else {
            Membership::Unknown
        }
    }

    pub fn decide(&self, e: Index, x: Nat) -> Decision {
        match self.resolve(e) {
            Resolved::Empty => Decision::No,
            Resolved::Unbound => Decision::NotDecidable,
            Resolved::Descriptor(d) => self.decide_descriptor(&d, x),
        }
    }

    pub fn decide_descriptor(&self, desc: &LanguageDescriptor, x: Nat) -> Decision {
        let yes_no = |b: bool| if b { Decision::Yes } else { Decision::No };
        match desc {
            LanguageDescriptor::Finite(s) => yes_no(s.contains(&x)),
            LanguageDescriptor::Decidable(p) => yes_no(p.contains(x)),
            LanguageDescriptor::PadOf(e, _) => self.decide(*e, x),
            LanguageDescriptor::JoinOf(e, d) => {
                if d.contains(&x) {
                    Decision::Yes
                } else {
                    self.decide(*e, x)
                }
            }
            LanguageDescriptor::Lazy(l) => l.decide(x, self),
        }
    }

    /// `x ∈ W_e` witnessed either exactly or by enumeration within `budget`.
    pub fn witnessed_member(&self, e: Index, x: Nat, budget: Budget) -> bool {
        match self.decide(e, x) {
            Decision::Yes => true,
            Decision::No => false,
            Decision::NotDecidable => self.member(e, x, budget) == Membership::Yes,
        }
    }

    /// True when `decide` is exact for every element of `W_e`.
    pub fn is_decidable(&self, e: Index) -> bool {
        match self.resolve(e) {
            Resolved::Empty => true,
            Resolved::Unbound => false,
            Resolved::Descriptor(d) => match d {
                LanguageDescriptor::Finite(_) | LanguageDescriptor::Decidable(_) => true,
                LanguageDescriptor::PadOf(e, _) | LanguageDescriptor::JoinOf(e, _) => self.is_decidable(e),
                LanguageDescriptor::Lazy(_) => false,
            },
        }
    }

    /// Bounded equality of `W_e` with a target language.
    ///
    /// Extras are searched among `enumerate(e, budget)`; missing elements among
    /// target members `<= bound`. A missing element only refutes when `W_e`
    /// excludes it exactly.
    pub fn lang_equal(&self, e: Index, target: Index, budget: Budget, bound: Nat) -> LangEquality {
        let listed = self.enumerate(e, budget);
        let mut inconclusive = false;
        for &x in &listed {
            match self.decide(target, x) {
                Decision::No => return LangEquality::RefutedExtra(x),
                Decision::NotDecidable => inconclusive = true,
                Decision::Yes => {}
            }
        }
        for x in 0..=bound {
            match self.decide(target, x) {
                Decision::Yes if !listed.contains(&x) => match self.decide(e, x) {
                    Decision::No => return LangEquality::RefutedMissing(x),
                    Decision::NotDecidable => inconclusive = true,
                    Decision::Yes => {}
                },
                Decision::NotDecidable => inconclusive = true,
                _ => {}
            }
        }
        if inconclusive {
            LangEquality::Inconclusive
        } else {
            LangEquality::Confirmed
        }
    }

    /// Human-readable tag name for trace dumps.
    pub fn tag_name(&self, e: Index) -> &'static str {
        e.tag().map_or("INVALID", Tag::name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[Nat]) -> BTreeSet<Nat> {
        xs.iter().copied().collect()
    }

    #[test]
    fn ind_membership_and_injectivity() {
        let s = HypothesisSpace::new();
        let empty = s.ind(&set(&[]));
        for b in 0..5 {
            assert!(s.enumerate(empty, b).is_empty());
        }
        let e = s.ind(&set(&[3, 7]));
        assert_eq!(s.member(e, 7, 0), Membership::Yes);
        assert_eq!(s.decide(e, 4), Decision::No);
        assert_eq!(s.ind(&set(&[7, 3])), e);
        assert_ne!(s.ind(&set(&[3])), e);
        assert_eq!(s.enumerate(s.ind(&set(&[1, 2])), 0), set(&[1, 2]));
    }

    #[test]
    fn pad_laws() {
        let s = HypothesisSpace::new();
        let e = s.ind(&set(&[5]));
        let p = s.pad(e, &[0]);
        for b in 0..4 {
            assert_eq!(s.enumerate(p, b), set(&[5]));
        }
        let q = s.pad(e, &[1, 2, 3]);
        assert_eq!(s.unpad(q, 1), Ok(e.code()));
        assert_eq!(s.unpad(q, 3), Ok(2));
        assert_ne!(s.pad(e, &[0]), s.pad(e, &[1]));
        assert_eq!(s.unpad(e, 1), Err(SpaceError::NotPadded(e)));
        assert_eq!(s.unpad(q, 9), Err(SpaceError::NoSuchCoordinate(q, 9)));
    }

    #[test]
    fn join_laws() {
        let s = HypothesisSpace::new();
        let j = s.join(s.ind(&set(&[])), &set(&[1]));
        assert_eq!(s.enumerate(j, 3), set(&[1]));
        let evens = s.evens();
        let neutral = s.join(evens, &set(&[]));
        for b in 0..10 {
            assert_eq!(s.enumerate(neutral, b), s.enumerate(evens, b));
        }
        assert_eq!(s.enumerate(s.join(s.ind(&set(&[2])), &set(&[2, 4])), 0), set(&[2, 4]));
        assert_eq!(s.decide(s.join(evens, &set(&[7])), 7), Decision::Yes);
        assert_eq!(s.join(evens, &set(&[7])), s.join(evens, &set(&[7])));
    }

    #[test]
    fn allocate_then_bind() {
        let s = HypothesisSpace::new();
        let x = s.allocate();
        assert!(s.enumerate(x, 10).is_empty());
        assert_eq!(s.decide(x, 0), Decision::NotDecidable);
        s.bind(x, LanguageDescriptor::Finite(set(&[pair(x.code(), 0)]))).unwrap();
        assert_eq!(s.member(x, pair(x.code(), 0), 1), Membership::Yes);
        assert_eq!(
            s.bind(x, LanguageDescriptor::Finite(set(&[]))),
            Err(SpaceError::DoubleBind(x))
        );
        let stray = Index::from_code(encode(Tag::Reg, 999));
        assert_eq!(
            s.bind(stray, LanguageDescriptor::Finite(set(&[]))),
            Err(SpaceError::UnknownIndex(stray))
        );
    }

    #[test]
    fn self_referential_a_of_d() {
        let s = HypothesisSpace::new();
        let d = set(&[4, 9]);
        let a = s.allocate();
        let mut lang = d.clone();
        lang.insert(pair(a.code(), 0));
        s.bind(a, LanguageDescriptor::Finite(lang)).unwrap();
        let mut expected = d;
        expected.insert(pair(a.code(), 0));
        assert_eq!(s.enumerate(a, 0), expected);
    }

    #[test]
    fn evens_are_sound_and_decided() {
        let s = HypothesisSpace::new();
        let e = s.evens();
        assert!(s.enumerate(e, 10).iter().all(|x| x % 2 == 0));
        assert_eq!(s.decide(e, 7), Decision::No);
        assert!(s.is_decidable(e));
    }

    #[test]
    fn lang_equal_cases() {
        let s = HypothesisSpace::new();
        let l5 = s.ind(&set(&[0, 2, 4, 5]));
        let target = s.ind(&set(&[0, 2, 4, 5]));
        assert_eq!(s.lang_equal(l5, target, 10, 10), LangEquality::Confirmed);
        let evens = s.evens();
        assert_eq!(s.lang_equal(s.ind(&set(&[])), evens, 10, 10), LangEquality::RefutedMissing(0));
        assert_eq!(
            s.lang_equal(s.join(evens, &set(&[1])), evens, 50, 20),
            LangEquality::RefutedExtra(1)
        );
        assert_eq!(s.lang_equal(evens, evens, 50, 20), LangEquality::Confirmed);
    }

    #[test]
    fn unknown_codes_are_empty() {
        let s = HypothesisSpace::new();
        let junk = Index::from_code(pair(9, 9));
        assert!(s.enumerate(junk, 5).is_empty());
        assert_eq!(s.decide(junk, 0), Decision::No);
        assert_eq!(s.run_program(junk.code(), &[], 5), None);
    }

    #[test]
    fn family_codes_round_trip() {
        let x = family_element(2, 5, 7);
        assert_eq!(family_of(x), Some((2, 5, 7)));
        assert!(family_element(2, 5, 7) < family_element(2, 5, 8));
        let pred = Predicate::FamilyRange { session: 2, family: 5 };
        assert!(pred.contains(x));
        assert!(!pred.contains(family_element(2, 4, 7)));
        assert_eq!(family_of(4), None);
    }
}
