//! Texts, finite sequences and the order on partially set-driven states.

use crate::coding::Nat;
use crate::hypospace::{HypothesisSpace, Index};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

/// One position of a text: an element or the pause symbol `#`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Item {
    Elem(Nat),
    Pause,
}

impl Item {
    pub fn elem(self) -> Option<Nat> {
        match self {
            Item::Elem(x) => Some(x),
            Item::Pause => None,
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Elem(x) => write!(f, "{x}"),
            Item::Pause => f.write_str("#"),
        }
    }
}

impl Serialize for Item {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Item::Elem(x) => s.serialize_u64(*x),
            Item::Pause => s.serialize_str("#"),
        }
    }
}

impl<'de> Deserialize<'de> for Item {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(Nat),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Item::Elem(x)),
            Raw::Str(s) if s == "#" => Ok(Item::Pause),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad text item {s:?}"))),
        }
    }
}

/// A finite initial segment `T[n]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SequencePrefix(pub Vec<Item>);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid sequence item {0:?}")]
pub struct PrefixParseError(pub String);

impl SequencePrefix {
    pub fn new(items: Vec<Item>) -> Self {
        SequencePrefix(items)
    }

    pub fn empty() -> Self {
        SequencePrefix(Vec::new())
    }

    pub fn items(&self) -> &[Item] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn content(&self) -> BTreeSet<Nat> {
        content(&self.0)
    }

    pub fn first(&self) -> Option<Nat> {
        first(&self.0)
    }

    pub fn concat(&self, other: &SequencePrefix) -> SequencePrefix {
        let mut items = self.0.clone();
        items.extend_from_slice(&other.0);
        SequencePrefix(items)
    }

    pub fn push(&mut self, item: Item) {
        self.0.push(item);
    }

    pub fn truncated(&self, n: usize) -> SequencePrefix {
        SequencePrefix(self.0[..n.min(self.0.len())].to_vec())
    }
}

impl fmt::Display for SequencePrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(Item::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Literal syntax `0,2,#,5`, optionally parenthesised as printed; the empty
/// string is the empty sequence.
impl FromStr for SequencePrefix {
    type Err = PrefixParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(s).trim();
        if s.is_empty() {
            return Ok(SequencePrefix::empty());
        }
        s.split(',')
            .map(|tok| match tok.trim() {
                "#" => Ok(Item::Pause),
                t => t.parse::<Nat>().map(Item::Elem).map_err(|_| PrefixParseError(t.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(SequencePrefix)
    }
}

pub fn content(items: &[Item]) -> BTreeSet<Nat> {
    items.iter().filter_map(|i| i.elem()).collect()
}

/// First non-pause element.
pub fn first(items: &[Item]) -> Option<Nat> {
    items.iter().find_map(|i| i.elem())
}

pub fn repeat(x: Nat, t: usize) -> SequencePrefix {
    SequencePrefix(vec![Item::Elem(x); t])
}

/// `(D, t) ⪯ (D', t')`: some text has content `D` after `t` items and content
/// `D'` after `t'` items.
///
/// Closed form: `t <= t'`, `D ⊆ D'`, `|D| <= t` and `|D' \ D| <= t' - t`.
pub fn psd_reachable(from: (&BTreeSet<Nat>, usize), to: (&BTreeSet<Nat>, usize)) -> bool {
    let (d, t) = from;
    let (d2, t2) = to;
    t <= t2 && d.is_subset(d2) && d.len() <= t && d2.difference(d).count() <= t2 - t
}

/// A block of a stitched text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    Prefix(SequencePrefix),
    Repeat(Nat, usize),
}

impl Block {
    fn len(&self) -> usize {
        match self {
            Block::Prefix(p) => p.len(),
            Block::Repeat(_, t) => *t,
        }
    }

    fn push_into(&self, out: &mut Vec<Item>) {
        match self {
            Block::Prefix(p) => out.extend_from_slice(p.items()),
            Block::Repeat(x, t) => out.extend(std::iter::repeat_n(Item::Elem(*x), *t)),
        }
    }
}

/// Source of items for texts produced by an adversary session.
pub trait TextGenerator: Send + Sync {
    fn describe(&self) -> String;
    fn prefix(&self, n: usize, space: &HypothesisSpace) -> Vec<Item>;
}

#[derive(Clone)]
pub enum TextSource {
    /// The listed items followed by pauses forever.
    FinitePlusPauses(SequencePrefix),
    /// Elements of a finite or decidable language in strictly increasing order.
    Canonical(Index),
    /// Blocks, then `tail` starting at its position `tail_offset`.
    Stitched { blocks: Vec<Block>, tail: Box<Text>, tail_offset: usize },
    SessionGenerated(Arc<dyn TextGenerator>),
}

impl fmt::Debug for TextSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextSource::FinitePlusPauses(p) => write!(f, "FinitePlusPauses{p}"),
            TextSource::Canonical(e) => write!(f, "Canonical({e})"),
            TextSource::Stitched { blocks, tail, tail_offset } => f
                .debug_struct("Stitched")
                .field("blocks", blocks)
                .field("tail", tail)
                .field("tail_offset", tail_offset)
                .finish(),
            TextSource::SessionGenerated(g) => write!(f, "SessionGenerated({})", g.describe()),
        }
    }
}

/// A total presentation, optionally carrying a descriptor of its full content.
#[derive(Debug, Clone)]
pub struct Text {
    pub source: TextSource,
    pub content: Option<Index>,
}

impl Text {
    pub fn finite(prefix: SequencePrefix) -> Self {
        Text { source: TextSource::FinitePlusPauses(prefix), content: None }
    }

    /// A finite sequence followed by pauses, declaring its content as `ind(content)`.
    pub fn finite_with_content(prefix: SequencePrefix, space: &HypothesisSpace) -> Self {
        let content = space.ind(&prefix.content());
        Text { source: TextSource::FinitePlusPauses(prefix), content: Some(content) }
    }

    pub fn canonical(lang: Index) -> Self {
        Text { source: TextSource::Canonical(lang), content: Some(lang) }
    }

    pub fn stitched(blocks: Vec<Block>, tail: Text, tail_offset: usize) -> Self {
        Text {
            source: TextSource::Stitched { blocks, tail: Box::new(tail), tail_offset },
            content: None,
        }
    }

    pub fn generated(gen: Arc<dyn TextGenerator>, content: Option<Index>) -> Self {
        Text { source: TextSource::SessionGenerated(gen), content }
    }

    pub fn with_content(mut self, content: Index) -> Self {
        self.content = Some(content);
        self
    }

    /// `T[n]`.
    pub fn prefix(&self, n: usize, space: &HypothesisSpace) -> SequencePrefix {
        SequencePrefix(self.items(n, space))
    }

    pub fn item(&self, n: usize, space: &HypothesisSpace) -> Item {
        self.items(n + 1, space)[n]
    }

    fn items(&self, n: usize, space: &HypothesisSpace) -> Vec<Item> {
        let mut out = match &self.source {
            TextSource::FinitePlusPauses(p) => p.items().iter().copied().take(n).collect(),
            TextSource::Canonical(e) => space
                .enumerate(*e, n as u64)
                .into_iter()
                .take(n)
                .map(Item::Elem)
                .collect(),
            TextSource::Stitched { blocks, tail, tail_offset } => {
                let mut out = Vec::with_capacity(n);
                for b in blocks {
                    if out.len() >= n {
                        break;
                    }
                    b.push_into(&mut out);
                }
                let head: usize = blocks.iter().map(Block::len).sum();
                if n > head {
                    let rest = tail.items(tail_offset + (n - head), space);
                    out.extend_from_slice(&rest[*tail_offset..]);
                }
                out.truncate(n);
                out
            }
            TextSource::SessionGenerated(g) => g.prefix(n, space),
        };
        out.resize(n, Item::Pause);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> SequencePrefix {
        s.parse().unwrap()
    }

    fn set(xs: &[Nat]) -> BTreeSet<Nat> {
        xs.iter().copied().collect()
    }

    #[test]
    fn canonical_texts() {
        let s = HypothesisSpace::new();
        assert_eq!(Text::canonical(s.ind(&set(&[2, 5]))).prefix(4, &s), p("2,5,#,#"));
        assert_eq!(Text::canonical(s.ind(&set(&[]))).prefix(3, &s), p("#,#,#"));
        assert_eq!(Text::canonical(s.evens()).prefix(3, &s), p("0,2,4"));
        assert_eq!(Text::canonical(s.ind(&set(&[1]))).prefix(2, &s), p("1,#"));
        let j = s.join(s.evens(), &set(&[3]));
        assert_eq!(Text::canonical(j).prefix(5, &s), p("0,2,3,4,6"));
    }

    #[test]
    fn content_and_first() {
        assert_eq!(p("#,3,#,3").content(), set(&[3]));
        assert_eq!(p("#,#,5,2").first(), Some(5));
        assert_eq!(p("#,#").first(), None);
    }

    #[test]
    fn concat_repeat_parse() {
        assert_eq!(p("1").concat(&p("2,#")), p("1,2,#"));
        assert_eq!(repeat(7, 3), p("7,7,7"));
        assert_eq!(p("0, 2 ,#,5").to_string(), "(0,2,#,5)");
        assert_eq!(p(""), SequencePrefix::empty());
        assert!("1,x".parse::<SequencePrefix>().is_err());
    }

    #[test]
    fn stitched_text_with_tail_offset() {
        let s = HypothesisSpace::new();
        let t = Text::stitched(
            vec![Block::Prefix(p("4,0")), Block::Repeat(9, 2)],
            Text::canonical(s.evens()),
            3,
        );
        assert_eq!(t.prefix(7, &s), p("4,0,9,9,6,8,10"));
        assert_eq!(t.item(1, &s), Item::Elem(0));
        assert_eq!(t.prefix(2, &s), p("4,0"));
    }

    #[test]
    fn psd_order_examples() {
        let e = set(&[]);
        assert!(psd_reachable((&e, 0), (&e, 0)));
        assert!(psd_reachable((&set(&[1]), 1), (&set(&[1, 2]), 2)));
        assert!(!psd_reachable((&set(&[1, 2]), 2), (&set(&[1]), 3)));
        assert!(!psd_reachable((&set(&[1, 2]), 1), (&set(&[1, 2]), 3)));
    }

    #[test]
    fn item_json() {
        let json = serde_json::to_string(&p("3,#")).unwrap();
        assert_eq!(json, r##"[3,"#"]"##);
        let back: SequencePrefix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p("3,#"));
    }
}
