//! Pairing arithmetic and the tagged code space.
//!
//! Every code, index, element and budget in the workbench is a [`Nat`]. Pairs
//! use the Cantor pairing function; tuples with more than two components are
//! right-nested pairs, so `triple(e, p, i) = pair(e, pair(p, i))`.

use serde::{Deserialize, Serialize};
use std::fmt;

pub type Nat = u64;

/// Cantor pairing `(x + y)(x + y + 1) / 2 + y`.
///
/// Panics if the result does not fit into a [`Nat`]; all codes produced by the
/// workbench stay far below that limit.
pub fn pair(x: Nat, y: Nat) -> Nat {
    let s = x as u128 + y as u128;
    let z = s * (s + 1) / 2 + y as u128;
    Nat::try_from(z).expect("pair: code exceeds 64 bits")
}

/// Inverse of [`pair`].
pub fn unpair(z: Nat) -> (Nat, Nat) {
    let w = triangular_root(z);
    let t = (w as u128) * (w as u128 + 1) / 2;
    let y = (z as u128 - t) as Nat;
    (w - y, y)
}

pub fn proj1(z: Nat) -> Nat {
    unpair(z).0
}

pub fn proj2(z: Nat) -> Nat {
    unpair(z).1
}

pub fn triple(e: Nat, p: Nat, i: Nat) -> Nat {
    pair(e, pair(p, i))
}

pub fn untriple(z: Nat) -> (Nat, Nat, Nat) {
    let (e, rest) = unpair(z);
    let (p, i) = unpair(rest);
    (e, p, i)
}

/// Largest `w` with `w(w+1)/2 <= z`.
fn triangular_root(z: Nat) -> Nat {
    let z = z as u128;
    // float estimate, then correct by at most a couple of steps
    let mut w = ((((8.0 * z as f64) + 1.0).sqrt() - 1.0) / 2.0) as u128;
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    w as Nat
}

/// Tags partitioning the code space. The numeric values are part of the trace
/// format and must not change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Fin = 0,
    Pad = 1,
    Reg = 2,
    Prog = 3,
    Plain = 4,
}

impl Tag {
    pub const ALL: [Tag; 5] = [Tag::Fin, Tag::Pad, Tag::Reg, Tag::Prog, Tag::Plain];

    pub fn as_nat(self) -> Nat {
        self as Nat
    }

    pub fn from_nat(n: Nat) -> Option<Tag> {
        Tag::ALL.get(usize::try_from(n).ok()?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::Fin => "FIN",
            Tag::Pad => "PAD",
            Tag::Reg => "REG",
            Tag::Prog => "PROG",
            Tag::Plain => "PLAIN",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedCode {
    pub tag: Tag,
    pub payload: Nat,
}

pub fn encode(tag: Tag, payload: Nat) -> Nat {
    pair(tag.as_nat(), payload)
}

/// Decodes a code into its tag and payload. Codes whose first component is not
/// a known tag lie outside the range of [`encode`] and yield `None`.
pub fn decode(code: Nat) -> Option<TaggedCode> {
    let (t, payload) = unpair(code);
    Tag::from_nat(t).map(|tag| TaggedCode { tag, payload })
}
