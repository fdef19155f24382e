//! Directed, heterogeneous relation graphs between software artifacts.
//!
//! The text format is line oriented UTF-8. Blank lines and lines starting
//! with `#` are ignored. Every other line is one of
//!
//! ```text
//! class  <label>
//! member <label> of <class-label>
//! arc    <src-label> <dst-label> <KIND> <count>
//! ```
//!
//! Tokens are separated by ASCII whitespace, so labels cannot contain
//! whitespace. `KIND` is one of `CALL`, `INHERITANCE`, `FIELD_ACCESS`,
//! `TYPE_USAGE`, `PARAM_RETURN`; `count` is a positive integer. Labels may be
//! referenced before they are declared. Artifacts are indexed densely in
//! declaration order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsu;

pub const RELATIONS_HEADER: &str = "# archclust relations v1";

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: member `{member}` belongs to unknown class `{class}`")]
    DanglingMembership { line: usize, member: String, class: String },
    #[error("line {line}: unknown artifact `{label}`")]
    UnknownArtifact { line: usize, label: String },
    #[error("negative weight {weight} for relation kind {kind}")]
    NegativeWeight { kind: RelationKind, weight: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArtifactLevel {
    Class,
    Member,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactId {
    pub index: usize,
    pub label: String,
    pub level: ArtifactLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationKind {
    Call,
    Inheritance,
    FieldAccess,
    TypeUsage,
    ParamReturn,
}

impl RelationKind {
    pub const ALL: [RelationKind; 5] = [
        RelationKind::Call,
        RelationKind::Inheritance,
        RelationKind::FieldAccess,
        RelationKind::TypeUsage,
        RelationKind::ParamReturn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Call => "CALL",
            RelationKind::Inheritance => "INHERITANCE",
            RelationKind::FieldAccess => "FIELD_ACCESS",
            RelationKind::TypeUsage => "TYPE_USAGE",
            RelationKind::ParamReturn => "PARAM_RETURN",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown relation kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationArc {
    pub src: usize,
    pub dst: usize,
    pub kind: RelationKind,
    pub count: u64,
}

/// Typed multigraph over class and member artifacts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationGraph {
    pub artifacts: Vec<ArtifactId>,
    pub arcs: Vec<RelationArc>,
    /// Member artifact index -> owning class index.
    pub membership: BTreeMap<usize, usize>,
}

impl RelationGraph {
    pub fn len(&self) -> usize {
        self.artifacts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.artifacts.is_empty()
    }

    /// Owning class of an artifact; classes map to themselves.
    pub fn class_of(&self, v: usize) -> usize {
        self.membership.get(&v).copied().unwrap_or(v)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.artifacts.iter().position(|a| a.label == label)
    }

    /// Connected components of the undirected view of the arcs.
    pub fn components(&self) -> Vec<Vec<usize>> {
        dsu::connected_components(self.len(), self.arcs.iter().map(|a| (a.src, a.dst)))
    }

    /// Renders the graph in the text format accepted by [`parse_relations`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(RELATIONS_HEADER);
        out.push('\n');
        for a in &self.artifacts {
            match a.level {
                ArtifactLevel::Class => out.push_str(&format!("class {}\n", a.label)),
                ArtifactLevel::Member => {
                    let owner = &self.artifacts[self.membership[&a.index]].label;
                    out.push_str(&format!("member {} of {}\n", a.label, owner));
                }
            }
        }
        for arc in &self.arcs {
            out.push_str(&format!(
                "arc {} {} {} {}\n",
                self.artifacts[arc.src].label, self.artifacts[arc.dst].label, arc.kind, arc.count
            ));
        }
        out
    }
}

pub fn load_relations(path: impl AsRef<Path>) -> Result<RelationGraph, RelationError> {
    let text = std::fs::read_to_string(path)?;
    parse_relations(&text)
}

struct PendingArc<'a> {
    line: usize,
    src: &'a str,
    dst: &'a str,
    kind: RelationKind,
    count: u64,
}

pub fn parse_relations(text: &str) -> Result<RelationGraph, RelationError> {
    let mut artifacts: Vec<ArtifactId> = Vec::new();
    let mut by_label: HashMap<&str, usize> = HashMap::new();
    let mut members: Vec<(usize, usize, &str)> = Vec::new();
    let mut pending: Vec<PendingArc<'_>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_ascii_whitespace().collect();
        let err = |message: String| RelationError::Parse { line, message };
        match toks[0] {
            "class" => {
                if toks.len() != 2 {
                    return Err(err("expected `class <label>`".into()));
                }
                add_artifact(&mut artifacts, &mut by_label, toks[1], ArtifactLevel::Class, line)?;
            }
            "member" => {
                if toks.len() != 4 || toks[2] != "of" {
                    return Err(err("expected `member <label> of <class>`".into()));
                }
                let m = add_artifact(&mut artifacts, &mut by_label, toks[1], ArtifactLevel::Member, line)?;
                members.push((line, m, toks[3]));
            }
            "arc" => {
                if toks.len() != 5 {
                    return Err(err("expected `arc <src> <dst> <KIND> <count>`".into()));
                }
                let kind = toks[3].parse::<RelationKind>().map_err(err)?;
                let count = toks[4]
                    .parse::<u64>()
                    .ok()
                    .filter(|&c| c >= 1)
                    .ok_or_else(|| err(format!("count must be a positive integer, got `{}`", toks[4])))?;
                pending.push(PendingArc {
                    line,
                    src: toks[1],
                    dst: toks[2],
                    kind,
                    count,
                });
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let mut membership = BTreeMap::new();
    for (line, m, class) in members {
        match by_label.get(class) {
            Some(&c) if artifacts[c].level == ArtifactLevel::Class => {
                membership.insert(m, c);
            }
            _ => {
                return Err(RelationError::DanglingMembership {
                    line,
                    member: artifacts[m].label.clone(),
                    class: class.to_string(),
                })
            }
        }
    }

    let resolve = |line: usize, label: &str| {
        by_label
            .get(label)
            .copied()
            .ok_or_else(|| RelationError::UnknownArtifact {
                line,
                label: label.to_string(),
            })
    };
    let mut arcs = Vec::with_capacity(pending.len());
    for p in pending {
        arcs.push(RelationArc {
            src: resolve(p.line, p.src)?,
            dst: resolve(p.line, p.dst)?,
            kind: p.kind,
            count: p.count,
        });
    }

    Ok(RelationGraph {
        artifacts,
        arcs,
        membership,
    })
}

fn add_artifact<'a>(
    artifacts: &mut Vec<ArtifactId>,
    by_label: &mut HashMap<&'a str, usize>,
    label: &'a str,
    level: ArtifactLevel,
    line: usize,
) -> Result<usize, RelationError> {
    if by_label.contains_key(label) {
        return Err(RelationError::DuplicateLabel {
            line,
            label: label.to_string(),
        });
    }
    let index = artifacts.len();
    by_label.insert(label, index);
    artifacts.push(ArtifactId {
        index,
        label: label.to_string(),
        level,
    });
    Ok(index)
}

/// Per-kind multipliers applied when collapsing relation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindWeights([f64; 5]);

impl Default for KindWeights {
    fn default() -> Self {
        KindWeights([1.0; 5])
    }
}

impl KindWeights {
    pub fn get(&self, kind: RelationKind) -> f64 {
        self.0[kind.slot()]
    }

    pub fn set(&mut self, kind: RelationKind, weight: f64) -> Result<(), RelationError> {
        if weight.is_nan() || weight < 0.0 {
            return Err(RelationError::NegativeWeight { kind, weight });
        }
        self.0[kind.slot()] = weight;
        Ok(())
    }
}

/// Relation graph whose arcs carry one real weight per ordered pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedRelationGraph {
    pub artifacts: Vec<ArtifactId>,
    pub membership: BTreeMap<usize, usize>,
    /// `(src, dst, weight)`, sorted by `(src, dst)`, weights > 0.
    pub arcs: Vec<(usize, usize, f64)>,
}

impl WeightedRelationGraph {
    pub fn class_of(&self, v: usize) -> usize {
        self.membership.get(&v).copied().unwrap_or(v)
    }
}

/// Weights every arc by its kind and sums parallel arcs across kinds.
///
/// Arcs whose weighted count is zero are dropped.
pub fn merge_relation_kinds(g: &RelationGraph, weights: &KindWeights) -> Result<WeightedRelationGraph, RelationError> {
    for kind in RelationKind::ALL {
        let w = weights.get(kind);
        if w.is_nan() || w < 0.0 {
            return Err(RelationError::NegativeWeight { kind, weight: w });
        }
    }
    let mut summed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for arc in &g.arcs {
        let w = arc.count as f64 * weights.get(arc.kind);
        if w > 0.0 {
            *summed.entry((arc.src, arc.dst)).or_insert(0.0) += w;
        }
    }
    Ok(WeightedRelationGraph {
        artifacts: g.artifacts.clone(),
        membership: g.membership.clone(),
        arcs: summed.into_iter().map(|((s, d), w)| (s, d, w)).collect(),
    })
}
