//! Fan-in normalization of directed relations into the undirected,
//! class-level clustering input.
//!
//! Every arc `i -> j` of weight `w` is divided by the fan-in `S_j` of its
//! target (the total weight of arcs entering `j`), optionally scaled by
//! `max(ln S_j, clamp)`, and the two directions of a pair are summed into a
//! single undirected edge. Heavily used artifacts therefore receive a bounded
//! amount of weight no matter how many callers they have.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::UndirectedGraph;
use crate::relations::{ArtifactLevel, WeightedRelationGraph};

/// Lifted edges lighter than this are dropped.
pub const DROP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum NormalizeError {
    #[error("artifact `{0}` maps to an artifact that is not a class")]
    DanglingMembership(String),
    #[error("log clamp must be positive, got {0}")]
    InvalidClamp(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Leverage {
    None,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiftOrder {
    /// Aggregate member arcs per class pair, then normalize the class graph.
    LiftThenNormalize,
    /// Normalize the member-level graph, then sum undirected weights per class pair.
    NormalizeThenLift,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationConfig {
    pub leverage: Leverage,
    pub lift_order: LiftOrder,
    pub log_clamp: f64,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            leverage: Leverage::None,
            lift_order: LiftOrder::NormalizeThenLift,
            log_clamp: 1.0,
        }
    }
}

/// Fan-in `S_j` per vertex, ignoring self-loops.
pub fn fan_in(n: usize, arcs: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut s = vec![0.0; n];
    for &(i, j, w) in arcs {
        if i != j {
            s[j] += w;
        }
    }
    s
}

/// Replaces each arc weight by its normalized value; self-loops are removed.
pub fn normalize_directed(
    n: usize,
    arcs: &[(usize, usize, f64)],
    leverage: Leverage,
    log_clamp: f64,
) -> Vec<(usize, usize, f64)> {
    let s = fan_in(n, arcs);
    let factor: Vec<f64> = s
        .iter()
        .map(|&sj| match leverage {
            Leverage::None => 1.0,
            Leverage::Log => sj.ln().max(log_clamp),
        })
        .collect();
    arcs.iter()
        .filter(|&&(i, j, _)| i != j)
        .map(|&(i, j, w)| (i, j, w / s[j] * factor[j]))
        .collect()
}

/// Sums opposite arcs into one edge per unordered pair, `(min, max, u)`.
pub fn symmetrize(arcs: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut m: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(i, j, w) in arcs {
        if i == j {
            continue;
        }
        *m.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
    }
    m.into_iter().map(|((a, b), w)| (a, b, w)).collect()
}

/// Sums weights over mapped endpoint pairs; pairs mapping onto one class
/// become self-loops and are discarded. Orientation is kept.
pub fn lift(pairs: &[(usize, usize, f64)], class_map: &[usize]) -> Vec<(usize, usize, f64)> {
    let mut m: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(k, l, w) in pairs {
        let (i, j) = (class_map[k], class_map[l]);
        if i != j {
            *m.entry((i, j)).or_insert(0.0) += w;
        }
    }
    m.into_iter().map(|((a, b), w)| (a, b, w)).collect()
}

/// Produces the class-level undirected graph used for clustering.
pub fn normalize(g: &WeightedRelationGraph, cfg: &NormalizationConfig) -> Result<UndirectedGraph, NormalizeError> {
    if cfg.log_clamp.is_nan() || cfg.log_clamp <= 0.0 {
        return Err(NormalizeError::InvalidClamp(cfg.log_clamp));
    }
    let mut class_pos = vec![usize::MAX; g.artifacts.len()];
    let mut labels = Vec::new();
    for a in &g.artifacts {
        if a.level == ArtifactLevel::Class {
            class_pos[a.index] = labels.len();
            labels.push(a.label.clone());
        }
    }
    let mut class_map = Vec::with_capacity(g.artifacts.len());
    for a in &g.artifacts {
        let owner = g.class_of(a.index);
        let pos = class_pos.get(owner).copied().unwrap_or(usize::MAX);
        if pos == usize::MAX {
            return Err(NormalizeError::DanglingMembership(a.label.clone()));
        }
        class_map.push(pos);
    }

    let edges = match cfg.lift_order {
        LiftOrder::LiftThenNormalize => {
            let lifted = lift(&g.arcs, &class_map);
            symmetrize(&normalize_directed(labels.len(), &lifted, cfg.leverage, cfg.log_clamp))
        }
        LiftOrder::NormalizeThenLift => {
            let member_level = symmetrize(&normalize_directed(
                g.artifacts.len(),
                &g.arcs,
                cfg.leverage,
                cfg.log_clamp,
            ));
            symmetrize(&lift(&member_level, &class_map))
        }
    };
    Ok(UndirectedGraph::new(
        labels,
        edges.into_iter().filter(|&(_, _, w)| w >= DROP_THRESHOLD),
    ))
}
