//! Built-in learners by name.

use super::samples::{always_changer, constant_naturals, family_overgeneralizer, min_consistent, set_copier};
use crate::learnkit::{star, wrap_as_psd, LearnerKind, SharedLearner};
use serde::Serialize;
use thiserror::Error;

use LearnerKind::{Gold as G, PartiallySetDriven as Psd, SetDriven as Sd};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BuiltinInfo {
    pub name: &'static str,
    /// Offered kinds; the first is the default.
    pub kinds: &'static [LearnerKind],
    pub summary: &'static str,
}

pub const BUILTINS: &[BuiltinInfo] = &[
    BuiltinInfo { name: "thm3", kinds: &[Sd], summary: "2N unless an odd element m is seen, then L_m" },
    BuiltinInfo { name: "thm4", kinds: &[G], summary: "flag table over first elements with zero / non-zero second coordinate" },
    BuiltinInfo { name: "thm5", kinds: &[Sd], summary: "partial; reads program payloads of its data" },
    BuiltinInfo { name: "thm6", kinds: &[Psd], summary: "total; halting probe on the common program coordinate" },
    BuiltinInfo { name: "coolsep", kinds: &[G], summary: "runs the program named by the largest element" },
    BuiltinInfo { name: "set-copier", kinds: &[Sd, Psd], summary: "ind(content)" },
    BuiltinInfo { name: "family-overgeneralizer", kinds: &[Psd, Sd], summary: "whole family ranges of the elements seen" },
    BuiltinInfo { name: "min-consistent", kinds: &[Psd], summary: "ind(content)" },
    BuiltinInfo { name: "constant", kinds: &[Sd, Psd], summary: "always N" },
    BuiltinInfo { name: "always-changer", kinds: &[Psd], summary: "pad(ind(content), length)" },
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuiltinError {
    #[error("unknown learner {0:?}")]
    Unknown(String),
    #[error("learner {name:?} is not available as {wanted} (offers {offered}); pass --wrap for the starred or psd-wrapped form")]
    KindUnavailable { name: String, wanted: LearnerKind, offered: String },
}

fn make(name: &str, kind: LearnerKind) -> Option<SharedLearner> {
    match (name, kind) {
        ("thm3", Sd) => Some(super::thm3()),
        ("thm4", G) => Some(super::thm4()),
        ("thm5", Sd) => Some(super::thm5()),
        ("thm6", Psd) => Some(super::thm6()),
        ("coolsep", G) => Some(super::coolsep()),
        ("set-copier", k) => set_copier(k),
        ("family-overgeneralizer", k) => family_overgeneralizer(k),
        ("min-consistent", Psd) => Some(min_consistent()),
        ("constant", k) => constant_naturals(k),
        ("always-changer", Psd) => Some(always_changer()),
        _ => None,
    }
}

fn info(name: &str) -> Result<&'static BuiltinInfo, BuiltinError> {
    BUILTINS.iter().find(|b| b.name == name).ok_or_else(|| BuiltinError::Unknown(name.to_string()))
}

/// A built-in learner in its default kind.
pub fn builtin(name: &str) -> Result<SharedLearner, BuiltinError> {
    let info = info(name)?;
    Ok(make(name, info.kinds[0]).expect("default kind is constructible"))
}

/// A built-in learner of kind `wanted`. With `wrap`, a set-driven learner may
/// stand in for a partially set-driven one and any learner for a Gold-style
/// one (via its starred form).
pub fn builtin_for(name: &str, wanted: LearnerKind, wrap: bool) -> Result<SharedLearner, BuiltinError> {
    let info = info(name)?;
    if info.kinds.contains(&wanted) {
        return Ok(make(name, wanted).expect("offered kind is constructible"));
    }
    if wrap {
        match wanted {
            Psd if info.kinds.contains(&Sd) => return Ok(wrap_as_psd(make(name, Sd).expect("offered"))),
            G => return Ok(star(make(name, info.kinds[0]).expect("offered"))),
            _ => {}
        }
    }
    Err(BuiltinError::KindUnavailable {
        name: name.to_string(),
        wanted,
        offered: info.kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_offered_kind_is_constructible() {
        for b in BUILTINS {
            for &k in b.kinds {
                let h = builtin_for(b.name, k, false).unwrap();
                assert_eq!(h.kind(), k, "{}", b.name);
            }
        }
    }

    #[test]
    fn kind_mismatch_needs_wrap() {
        assert!(matches!(builtin_for("thm3", Psd, false), Err(BuiltinError::KindUnavailable { .. })));
        assert_eq!(builtin_for("thm3", Psd, true).unwrap().kind(), Psd);
        assert_eq!(builtin_for("thm6", G, true).unwrap().kind(), G);
        assert!(matches!(builtin("nope"), Err(BuiltinError::Unknown(_))));
    }
}
