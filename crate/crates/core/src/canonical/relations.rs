//! Inclusions, strict inclusions and collapses between learning criteria.
//!
//! Node names are ASCII: `tau(SMon)-Psd-Ex`, `R-G-Mon-Bc`, `Sd-Ex`. The forms
//! `τ(…)` and `ℛ-` are accepted on input.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use thiserror::Error;

const OPERATORS: [&str; 3] = ["G", "Psd", "Sd"];
const CONVERGENCE: [&str; 2] = ["Ex", "Bc"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    Inclusion,
    StrictInclusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationNode {
    pub name: String,
    /// Maps the node is drawn in: `smon`, `mon-ex`, `mon-bc`.
    pub maps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationMap {
    pub nodes: Vec<RelationNode>,
    pub collapse_classes: Vec<Vec<String>>,
    /// `from ⊆ to`.
    pub edges: Vec<RelationEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Equal,
    Inclusion,
    StrictInclusion,
    Superset,
    StrictSuperset,
    Unknown,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelationError {
    #[error("unknown criterion {0:?}")]
    UnknownNode(String),
    #[error("criterion {0:?} lies in two collapse classes")]
    OverlappingClasses(String),
    #[error("strict edge {0} -> {1} inside one collapse class")]
    StrictInsideClass(String, String),
    #[error("inclusion edges form a cycle through {0:?}")]
    Cycle(String),
}

fn restricted(r: &str, b: &str, c: &str) -> String {
    format!("{b}-{r}-{c}")
}

pub fn normalize(name: &str) -> String {
    name.trim().replace('τ', "tau").replace('ℛ', "R").replace(' ', "")
}

pub fn relations_map() -> RelationMap {
    let mut nodes: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut add = |name: String, map: &str| {
        nodes.entry(name).or_default().insert(map.to_string());
    };
    for c in CONVERGENCE {
        let mon_map = if c == "Ex" { "mon-ex" } else { "mon-bc" };
        for b in OPERATORS {
            for r in ["SMon", "Mon"] {
                let map = if r == "SMon" { "smon" } else { mon_map };
                add(format!("tau({r})-{b}-{c}"), map);
                add(restricted(r, b, c), map);
                add(format!("R-{}", restricted(r, b, c)), map);
            }
            add(format!("tau(SMon)-{b}-{c}"), mon_map);
            add(format!("{b}-{c}"), mon_map);
            add(format!("R-{b}-{c}"), mon_map);
        }
    }

    let mut classes: Vec<Vec<String>> = Vec::new();
    for b in OPERATORS {
        classes.push(vec![format!("tau(SMon)-{b}-Ex"), format!("tau(Mon)-{b}-Ex")]);
    }
    for tail in ["SMon-Ex", "Mon-Ex", "Ex"] {
        classes.push(vec![format!("G-{tail}"), format!("R-G-{tail}")]);
    }
    classes.push(vec!["tau(SMon)-Sd-Bc".into(), "tau(Mon)-Sd-Bc".into()]);
    let mut smon_bc = Vec::new();
    for b in ["G", "Psd"] {
        smon_bc.extend([
            format!("tau(SMon)-{b}-Bc"),
            format!("tau(Mon)-{b}-Bc"),
            format!("{b}-SMon-Bc"),
            format!("R-{b}-SMon-Bc"),
        ]);
    }
    classes.push(smon_bc);
    classes.push(vec!["Sd-SMon-Bc".into(), "R-Sd-SMon-Bc".into()]);
    for b in OPERATORS {
        for tail in ["Mon-Bc", "Bc"] {
            classes.push(vec![format!("{b}-{tail}"), format!("R-{b}-{tail}")]);
        }
    }

    let mut edges: BTreeMap<(String, String), EdgeKind> = BTreeMap::new();
    let mut inc = |from: String, to: String| {
        edges.entry((from, to)).or_insert(EdgeKind::Inclusion);
    };
    for c in CONVERGENCE {
        for b in OPERATORS {
            for r in ["SMon", "Mon"] {
                let plain = restricted(r, b, c);
                inc(format!("R-{plain}"), plain.clone());
                inc(format!("tau({r})-{b}-{c}"), plain);
            }
            inc(format!("tau(SMon)-{b}-{c}"), format!("tau(Mon)-{b}-{c}"));
            for pre in ["", "R-"] {
                inc(format!("{pre}{b}-SMon-{c}"), format!("{pre}{b}-Mon-{c}"));
                inc(format!("{pre}{b}-Mon-{c}"), format!("{pre}{b}-{c}"));
            }
            inc(format!("R-{b}-{c}"), format!("{b}-{c}"));
        }
        let forms: Vec<String> = ["tau(SMon)-{}", "tau(Mon)-{}", "{}-SMon", "{}-Mon", "R-{}-SMon", "R-{}-Mon", "{}", "R-{}"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for form in &forms {
            let at = |b: &str| format!("{}-{c}", form.replace("{}", b));
            inc(at("Sd"), at("Psd"));
            inc(at("Psd"), at("G"));
        }
    }
    for name in nodes.keys().filter(|n| n.ends_with("-Ex")).cloned().collect::<Vec<_>>() {
        inc(name.clone(), format!("{}Bc", &name[..name.len() - 2]));
    }

    let mut strict = |from: String, to: String| {
        edges.insert((from, to), EdgeKind::StrictInclusion);
    };
    for c in CONVERGENCE {
        for b in OPERATORS {
            strict(format!("{b}-SMon-{c}"), format!("{b}-Mon-{c}"));
            strict(format!("R-{b}-SMon-{c}"), format!("R-{b}-Mon-{c}"));
        }
    }
    strict("Psd-Mon-Ex".into(), "G-Mon-Ex".into());
    strict("Psd-SMon-Ex".into(), "G-SMon-Ex".into());
    strict("R-Psd-Mon-Ex".into(), "Psd-Mon-Ex".into());
    for form in ["{}-Mon-Ex", "{}-SMon-Ex", "{}-Ex", "tau(SMon)-{}-Ex", "R-{}-Mon-Ex"] {
        strict(form.replace("{}", "Sd"), form.replace("{}", "Psd"));
    }
    for form in ["{}-Mon-Bc", "{}-SMon-Bc", "{}-Bc", "tau(SMon)-{}-Bc"] {
        strict(form.replace("{}", "Sd"), form.replace("{}", "Psd"));
    }
    strict("Psd-Mon-Bc".into(), "G-Mon-Bc".into());

    RelationMap {
        nodes: nodes
            .into_iter()
            .map(|(name, maps)| RelationNode { name, maps: maps.into_iter().collect() })
            .collect(),
        collapse_classes: classes,
        edges: edges.into_iter().map(|((from, to), kind)| RelationEdge { from, to, kind }).collect(),
    }
}

struct Quotient {
    class_of: HashMap<String, usize>,
    adj: Vec<Vec<(usize, bool)>>,
}

impl RelationMap {
    pub fn contains(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n.name == name)
    }

    fn quotient(&self) -> Result<Quotient, RelationError> {
        let mut class_of = HashMap::new();
        for (i, class) in self.collapse_classes.iter().enumerate() {
            for name in class {
                if !self.contains(name) {
                    return Err(RelationError::UnknownNode(name.clone()));
                }
                if class_of.insert(name.clone(), i).is_some() {
                    return Err(RelationError::OverlappingClasses(name.clone()));
                }
            }
        }
        let mut next = self.collapse_classes.len();
        for n in &self.nodes {
            class_of.entry(n.name.clone()).or_insert_with(|| {
                next += 1;
                next - 1
            });
        }
        let mut adj = vec![Vec::new(); next];
        for e in &self.edges {
            let (Some(&a), Some(&b)) = (class_of.get(&e.from), class_of.get(&e.to)) else {
                return Err(RelationError::UnknownNode(if class_of.contains_key(&e.from) {
                    e.to.clone()
                } else {
                    e.from.clone()
                }));
            };
            let is_strict = e.kind == EdgeKind::StrictInclusion;
            if a == b {
                if is_strict {
                    return Err(RelationError::StrictInsideClass(e.from.clone(), e.to.clone()));
                }
                continue;
            }
            adj[a].push((b, is_strict));
        }
        Ok(Quotient { class_of, adj })
    }

    /// Structural checks: disjoint classes, known endpoints, and an acyclic
    /// edge relation on the collapse quotient.
    pub fn validate(&self) -> Result<(), RelationError> {
        let q = self.quotient()?;
        let n = q.adj.len();
        let mut indegree = vec![0usize; n];
        for out in &q.adj {
            for &(b, _) in out {
                indegree[b] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(a) = queue.pop_front() {
            seen += 1;
            for &(b, _) in &q.adj[a] {
                indegree[b] -= 1;
                if indegree[b] == 0 {
                    queue.push_back(b);
                }
            }
        }
        if seen == n {
            return Ok(());
        }
        let stuck = (0..n).find(|&i| indegree[i] > 0).expect("cycle node");
        let name = q.class_of.iter().filter(|(_, &c)| c == stuck).map(|(k, _)| k.clone()).min().unwrap_or_default();
        Err(RelationError::Cycle(name))
    }

    /// Whether some path leads from `a` to `b`, and whether one of them uses a
    /// strict edge.
    fn reach(q: &Quotient, a: usize, b: usize) -> Option<bool> {
        let mut seen = vec![[false; 2]; q.adj.len()];
        let mut queue = VecDeque::from([(a, false)]);
        seen[a][0] = true;
        let mut found = None;
        while let Some((x, s)) = queue.pop_front() {
            if x == b {
                found = Some(found.unwrap_or(false) || s);
            }
            for &(y, st) in &q.adj[x] {
                let ns = s || st;
                if !seen[y][ns as usize] {
                    seen[y][ns as usize] = true;
                    queue.push_back((y, ns));
                }
            }
        }
        found
    }

    /// How `sub` relates to `sup`, read as `sub ⊆ sup`.
    pub fn query(&self, sub: &str, sup: &str) -> Result<Relation, RelationError> {
        let (sub, sup) = (normalize(sub), normalize(sup));
        let q = self.quotient()?;
        let a = *q.class_of.get(&sub).ok_or_else(|| RelationError::UnknownNode(sub.clone()))?;
        let b = *q.class_of.get(&sup).ok_or_else(|| RelationError::UnknownNode(sup.clone()))?;
        if sub == sup {
            return Ok(Relation::Inclusion);
        }
        if a == b {
            return Ok(Relation::Equal);
        }
        Ok(match (Self::reach(&q, a, b), Self::reach(&q, b, a)) {
            (Some(true), _) => Relation::StrictInclusion,
            (Some(false), _) => Relation::Inclusion,
            (None, Some(true)) => Relation::StrictSuperset,
            (None, Some(false)) => Relation::Superset,
            (None, None) => Relation::Unknown,
        })
    }

    pub fn class_of(&self, name: &str) -> Option<&[String]> {
        let name = normalize(name);
        self.collapse_classes.iter().find(|c| c.contains(&name)).map(Vec::as_slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_is_valid() {
        relations_map().validate().unwrap();
    }

    #[test]
    fn required_relations() {
        let m = relations_map();
        assert_eq!(m.query("Psd-Mon-Bc", "G-Mon-Bc").unwrap(), Relation::StrictInclusion);
        assert_eq!(m.query("G-Mon-Bc", "Psd-Mon-Bc").unwrap(), Relation::StrictSuperset);
        assert_eq!(m.query("R-Psd-Mon-Ex", "Psd-Mon-Ex").unwrap(), Relation::StrictInclusion);
        assert_eq!(m.query("Sd-Mon-Ex", "Psd-Mon-Ex").unwrap(), Relation::StrictInclusion);
        assert_eq!(m.query("Psd-Mon-Ex", "G-Mon-Ex").unwrap(), Relation::StrictInclusion);
        for b in OPERATORS {
            for c in CONVERGENCE {
                assert_eq!(
                    m.query(&format!("τ(Mon)-{b}-{c}"), &format!("tau(SMon)-{b}-{c}")).unwrap(),
                    Relation::Equal
                );
            }
            assert_eq!(m.query(&format!("R-{b}-Mon-Bc"), &format!("{b}-Mon-Bc")).unwrap(), Relation::Equal);
        }
        assert_eq!(m.query("G-Mon-Ex", "G-Mon-Ex").unwrap(), Relation::Inclusion);
        assert!(matches!(m.query("G-Foo", "G-Mon-Ex"), Err(RelationError::UnknownNode(_))));
    }

    #[test]
    fn validation_catches_cycles() {
        let mut m = relations_map();
        m.edges.push(RelationEdge { from: "G-Bc".into(), to: "Sd-SMon-Ex".into(), kind: EdgeKind::Inclusion });
        assert!(matches!(m.validate(), Err(RelationError::Cycle(_))));
        let mut m = relations_map();
        m.edges.push(RelationEdge { from: "G-Ex".into(), to: "R-G-Ex".into(), kind: EdgeKind::StrictInclusion });
        assert!(matches!(m.validate(), Err(RelationError::StrictInsideClass(..))));
    }
}
