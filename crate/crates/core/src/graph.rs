//! Undirected real-weighted graphs, the input of cut clustering.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsu;

pub const GRAPH_HEADER: &str = "# archclust undirected-graph v1";

#[derive(Debug, Error)]
pub enum GraphFileError {
    #[error("missing or unsupported header, expected `{GRAPH_HEADER}`")]
    Header,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Simple undirected graph with positive real edge weights.
///
/// Edges are stored once with `a < b`, sorted by `(a, b)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UndirectedGraph {
    labels: Vec<String>,
    edges: Vec<Edge>,
}

impl UndirectedGraph {
    /// Builds a graph, summing parallel edges and dropping self-loops and
    /// non-positive weights.
    pub fn new<I>(labels: Vec<String>, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let n = labels.len();
        let mut summed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} vertices");
            if a == b {
                continue;
            }
            let key = if a < b { (a, b) } else { (b, a) };
            *summed.entry(key).or_insert(0.0) += w;
        }
        let edges = summed
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|((a, b), weight)| Edge { a, b, weight })
            .collect();
        UndirectedGraph { labels, edges }
    }

    /// Unlabeled graph; vertices are named by their index.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::new((0..n).map(|i| i.to_string()).collect(), edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for e in &self.edges {
            adj[e.a].push((e.b, e.weight));
            adj[e.b].push((e.a, e.weight));
        }
        adj
    }

    /// Sum of incident edge weights per vertex.
    pub fn adjacent_weights(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.vertex_count()];
        for e in &self.edges {
            s[e.a] += e.weight;
            s[e.b] += e.weight;
        }
        s
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        dsu::connected_components(self.vertex_count(), self.edges.iter().map(|e| (e.a, e.b)))
    }

    /// Induced subgraph; local vertex `i` is `vertices[i]`.
    pub fn subgraph(&self, vertices: &[usize]) -> UndirectedGraph {
        let local: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let labels = vertices.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self.edges.iter().filter_map(|e| {
            let a = *local.get(&e.a)?;
            let b = *local.get(&e.b)?;
            Some((a, b, e.weight))
        });
        UndirectedGraph::new(labels, edges)
    }

    /// Total weight of edges with exactly one endpoint in `side`.
    pub fn cut_weight(&self, side: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|e| side[e.a] != side[e.b])
            .map(|e| e.weight)
            .sum()
    }

    /// Tab-separated dump: `vertex <label>` lines, then `<label> <label> <weight>`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(32 * (self.labels.len() + self.edges.len()));
        out.push_str(GRAPH_HEADER);
        out.push('\n');
        for l in &self.labels {
            out.push_str("vertex\t");
            out.push_str(l);
            out.push('\n');
        }
        for e in &self.edges {
            out.push_str(&format!("{}\t{}\t{}\n", self.labels[e.a], self.labels[e.b], e.weight));
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Self, GraphFileError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == GRAPH_HEADER => {}
            _ => return Err(GraphFileError::Header),
        }
        let mut labels = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut edges = Vec::new();
        for (i, raw) in lines {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = t.split('\t').collect();
            let err = |message: String| GraphFileError::Parse { line, message };
            match f.as_slice() {
                ["vertex", label] => {
                    if index.insert(label.to_string(), labels.len()).is_some() {
                        return Err(err(format!("duplicate vertex `{label}`")));
                    }
                    labels.push(label.to_string());
                }
                [a, b, w] => {
                    let look = |l: &str| {
                        index
                            .get(l)
                            .copied()
                            .ok_or_else(|| err(format!("unknown vertex `{l}`")))
                    };
                    let w: f64 = w.parse().map_err(|_| err(format!("bad weight `{w}`")))?;
                    if !(w > 0.0 && w.is_finite()) {
                        return Err(err(format!("weight must be positive, got {w}")));
                    }
                    edges.push((look(a)?, look(b)?, w));
                }
                _ => return Err(err("expected `vertex<TAB>label` or `a<TAB>b<TAB>weight`".into())),
            }
        }
        Ok(UndirectedGraph::new(labels, edges))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphFileError> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }
}
