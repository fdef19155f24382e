//! Re-nesting of flat nodes.
//!
//! A node whose children all appeared at once (many clusters splitting off
//! within an infinitesimal alpha step) carries no structure among those
//! children. The children are connected by their aggregated input weight,
//! the maximum spanning tree of that graph is rooted, and every tree edge
//! becomes a nesting step.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsu::DisjointSets;
use crate::graph::UndirectedGraph;
use crate::tree::{ClusterTree, NodeId};

#[derive(Debug, Error, PartialEq)]
pub enum PerfectizeError {
    #[error("child threshold must be at least 3, got {0}")]
    InvalidThreshold(usize),
    #[error("child graph is disconnected")]
    Disconnected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootHeuristic {
    /// Union heavy edges and cycles first; the root is where everything meets last.
    HeavyCyclesDeep,
    /// Peel the tree from its leaves, heaviest edge first; the root is the last vertex reached.
    CentralPrioritizedBfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfectizeConfig {
    pub child_threshold: usize,
    pub root_heuristic: RootHeuristic,
}

impl Default for PerfectizeConfig {
    fn default() -> Self {
        PerfectizeConfig {
            child_threshold: 16,
            root_heuristic: RootHeuristic::CentralPrioritizedBfs,
        }
    }
}

/// Weighted graph over the children of one node; edge endpoints index `children`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildGraph {
    pub children: Vec<NodeId>,
    /// `(i, j, weight)` with `i < j`, sorted.
    pub edges: Vec<(usize, usize, f64)>,
}

pub fn build_child_graph(tree: &ClusterTree, node: NodeId, g: &UndirectedGraph) -> ChildGraph {
    let children = tree.node(node).children.clone();
    let mut owner = vec![usize::MAX; g.vertex_count()];
    for (i, &c) in children.iter().enumerate() {
        for leaf in tree.leaves_under(c) {
            owner[leaf] = i;
        }
    }
    let mut summed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in g.edges() {
        let (i, j) = (owner[e.a], owner[e.b]);
        if i != usize::MAX && j != usize::MAX && i != j {
            *summed.entry((i.min(j), i.max(j))).or_insert(0.0) += e.weight;
        }
    }
    ChildGraph {
        children,
        edges: summed.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
    }
}

/// Maximum spanning forest by Kruskal on `B - w`, `B = 1 + max w`; equal
/// weights are taken in lexicographic `(i, j)` order. Returned edges carry
/// the original weights.
pub fn max_spanning_forest(n: usize, edges: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let bound = 1.0 + edges.iter().map(|e| e.2).fold(0.0, f64::max);
    let mut order: Vec<(f64, usize, usize, f64)> = edges
        .iter()
        .map(|&(i, j, w)| (bound - w, i.min(j), i.max(j), w))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut sets = DisjointSets::new(n);
    order
        .into_iter()
        .filter(|&(_, i, j, _)| sets.union(i, j))
        .map(|(_, i, j, w)| (i, j, w))
        .collect()
}

pub fn max_spanning_tree(n: usize, edges: &[(usize, usize, f64)]) -> Result<Vec<(usize, usize, f64)>, PerfectizeError> {
    let forest = max_spanning_forest(n, edges);
    if n > 0 && forest.len() + 1 != n {
        return Err(PerfectizeError::Disconnected);
    }
    Ok(forest)
}

fn tree_adjacency(n: usize, tree: &[(usize, usize, f64)]) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j, w) in tree {
        adj[i].push((j, w));
        adj[j].push((i, w));
    }
    adj
}

#[derive(PartialEq)]
struct Ready {
    weight: f64,
    vertex: usize,
}

impl Eq for Ready {}

impl PartialOrd for Ready {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ready {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(other.vertex.cmp(&self.vertex))
    }
}

/// Root of a spanning tree over `0..n`; `all_edges` is the full child graph.
pub fn select_root(
    n: usize,
    tree: &[(usize, usize, f64)],
    all_edges: &[(usize, usize, f64)],
    heuristic: RootHeuristic,
) -> usize {
    match heuristic {
        RootHeuristic::CentralPrioritizedBfs => central_root(n, tree),
        RootHeuristic::HeavyCyclesDeep => deep_cycle_root(n, tree, all_edges),
    }
}

fn central_root(n: usize, tree: &[(usize, usize, f64)]) -> usize {
    if n <= 1 {
        return 0;
    }
    let adj = tree_adjacency(n, tree);
    let mut to_go: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut heap = BinaryHeap::new();
    let mut last = 0;
    for v in 0..n {
        if to_go[v] == 1 {
            heap.push(Ready {
                weight: adj[v][0].1,
                vertex: v,
            });
            last = v;
        }
    }
    let mut done = vec![false; n];
    while let Some(Ready { vertex: x, .. }) = heap.pop() {
        done[x] = true;
        for &(y, w) in &adj[x] {
            if done[y] {
                continue;
            }
            to_go[y] -= 1;
            if to_go[y] == 1 {
                heap.push(Ready { weight: w, vertex: y });
                last = y;
            }
        }
    }
    last
}

/// Vertices on the tree path from `a` to `b`, with edge weights between them.
fn tree_path(adj: &[Vec<(usize, f64)>], a: usize, b: usize) -> (Vec<usize>, Vec<f64>) {
    let n = adj.len();
    let mut prev = vec![(usize::MAX, 0.0); n];
    let mut seen = vec![false; n];
    let mut stack = vec![a];
    seen[a] = true;
    while let Some(v) = stack.pop() {
        if v == b {
            break;
        }
        for &(u, w) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                prev[u] = (v, w);
                stack.push(u);
            }
        }
    }
    let mut vertices = vec![b];
    let mut weights = Vec::new();
    let mut v = b;
    while v != a {
        let (p, w) = prev[v];
        weights.push(w);
        vertices.push(p);
        v = p;
    }
    vertices.reverse();
    weights.reverse();
    (vertices, weights)
}

fn deep_cycle_root(n: usize, tree: &[(usize, usize, f64)], all_edges: &[(usize, usize, f64)]) -> usize {
    if n <= 1 {
        return 0;
    }
    let adj = tree_adjacency(n, tree);
    let in_tree: std::collections::HashSet<(usize, usize)> =
        tree.iter().map(|&(i, j, _)| (i.min(j), i.max(j))).collect();
    let mut order: Vec<(usize, usize, f64)> = all_edges.iter().map(|&(i, j, w)| (i.min(j), i.max(j), w)).collect();
    order.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut sets = DisjointSets::new(n);
    for (i, j, _) in order {
        if in_tree.contains(&(i, j)) {
            let (si, sj) = (sets.set_size(i), sets.set_size(j));
            let merged = sets.union(i, j);
            if merged && sets.set_count() == 1 {
                return match si.cmp(&sj) {
                    Ordering::Less => i,
                    Ordering::Greater => j,
                    Ordering::Equal => i.min(j),
                };
            }
        } else {
            let (path, weights) = tree_path(&adj, i, j);
            let mut merged = false;
            for w in path.windows(2) {
                merged |= sets.union(w[0], w[1]);
            }
            if merged && sets.set_count() == 1 {
                return weighted_middle(&path, &weights);
            }
        }
    }
    // the tree edges alone always connect everything; unreachable for a spanning tree
    0
}

/// Path vertex whose distance to both ends is most balanced; ties to the lower index.
fn weighted_middle(path: &[usize], weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut best = (f64::INFINITY, usize::MAX);
    let mut at = 0.0;
    for (k, &v) in path.iter().enumerate() {
        if k > 0 {
            at += weights[k - 1];
        }
        let imbalance = (2.0 * at - total).abs();
        if imbalance < best.0 || (imbalance == best.0 && v < best.1) {
            best = (imbalance, v);
        }
    }
    best.1
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerfectizeStats {
    pub nodes_rebuilt: usize,
    pub synthetic_nodes: usize,
}

/// Rebuilds every node with at least `child_threshold` children, bottom-up.
/// Nodes already rebuilt and synthetic nodes are left alone, so a second
/// run changes nothing.
pub fn perfectize(
    tree: &mut ClusterTree,
    g: &UndirectedGraph,
    cfg: &PerfectizeConfig,
) -> Result<PerfectizeStats, PerfectizeError> {
    if cfg.child_threshold < 3 {
        return Err(PerfectizeError::InvalidThreshold(cfg.child_threshold));
    }
    let mut stats = PerfectizeStats::default();
    let candidates: Vec<NodeId> = tree
        .post_order(tree.fake_root())
        .into_iter()
        .filter(|&v| {
            let node = tree.node(v);
            v != tree.fake_root()
                && !tree.is_leaf(v)
                && !node.synthetic
                && !node.perfected
                && node.children.len() >= cfg.child_threshold
        })
        .collect();
    for p in candidates {
        stats.synthetic_nodes += rebuild(tree, p, g, cfg.root_heuristic);
        stats.nodes_rebuilt += 1;
    }
    Ok(stats)
}

fn rebuild(tree: &mut ClusterTree, p: NodeId, g: &UndirectedGraph, heuristic: RootHeuristic) -> usize {
    let cg = build_child_graph(tree, p, g);
    let n = cg.children.len();
    let forest = max_spanning_forest(n, &cg.edges);
    let low = tree.node(p).alpha.expect("inner node without alpha");
    let high = cg
        .children
        .iter()
        .filter_map(|&c| tree.node(c).alpha)
        .fold(f64::INFINITY, f64::min);
    let high = if high.is_finite() { high } else { low + 1.0 };

    let mut piece_of = DisjointSets::new(n);
    for &(i, j, _) in &forest {
        piece_of.union(i, j);
    }
    let mut pieces: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        pieces.entry(piece_of.find(v)).or_default().push(v);
    }

    let adj = tree_adjacency(n, &forest);
    let mut created = 0;
    for members in pieces.values() {
        if members.len() < 2 {
            continue;
        }
        let local: BTreeMap<usize, usize> = members.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let piece_tree: Vec<(usize, usize, f64)> = forest
            .iter()
            .filter(|e| local.contains_key(&e.0))
            .map(|&(i, j, w)| (local[&i], local[&j], w))
            .collect();
        let piece_edges: Vec<(usize, usize, f64)> = cg
            .edges
            .iter()
            .filter(|e| local.contains_key(&e.0))
            .map(|&(i, j, w)| (local[&i], local[&j], w))
            .collect();
        let root = members[select_root(members.len(), &piece_tree, &piece_edges, heuristic)];

        // depth and tree-children of every vertex of the rooted piece
        let mut depth = vec![0usize; n];
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut order = vec![root];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut k = 0;
        while k < order.len() {
            let v = order[k];
            k += 1;
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    depth[u] = depth[v] + 1;
                    kids[v].push(u);
                    order.push(u);
                }
            }
        }
        let deepest = order.iter().map(|&v| depth[v]).max().unwrap_or(0);

        let mut holder: Vec<NodeId> = cg.children.clone();
        for &x in order.iter().rev() {
            if x == root || kids[x].is_empty() {
                continue;
            }
            let mut inside = vec![cg.children[x]];
            inside.extend(kids[x].iter().map(|&y| holder[y]));
            let alpha = low + (high - low) * depth[x] as f64 / (deepest + 1) as f64;
            holder[x] = tree.adopt(p, &inside, alpha, true);
            created += 1;
        }
    }
    tree.node_mut(p).perfected = true;
    created
}
