//! Gusfield-style trees encoding all pairwise minimum cuts.

use crate::dsu;
use crate::maxflow::{Capacity, FlowNetwork, FlowSolver};

use super::{ClusterError, ScaledNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CutTreeEdge {
    pub child: usize,
    pub parent: usize,
    pub value: Capacity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutTree {
    pub root: usize,
    /// One edge per non-root vertex, in processing order.
    pub edges: Vec<CutTreeEdge>,
}

impl CutTree {
    /// Smallest edge value on the tree path between `a` and `b`.
    pub fn path_min(&self, a: usize, b: usize) -> Option<Capacity> {
        if a == b {
            return None;
        }
        let n = self.edges.len() + 1;
        let mut adj = vec![Vec::new(); n.max(a + 1).max(b + 1).max(self.root + 1)];
        for e in &self.edges {
            adj[e.child].push((e.parent, e.value));
            adj[e.parent].push((e.child, e.value));
        }
        let mut best = vec![None; adj.len()];
        let mut seen = vec![false; adj.len()];
        let mut stack = vec![a];
        seen[a] = true;
        best[a] = Some(Capacity::MAX);
        while let Some(v) = stack.pop() {
            for &(u, w) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    best[u] = best[v].map(|m: Capacity| m.min(w));
                    stack.push(u);
                }
            }
        }
        best[b]
    }
}

/// Equivalent-flow tree: vertex 0 is the root, every later vertex is cut
/// from its current neighbour, and only vertices after it are re-hung.
pub fn min_cut_tree(net: &FlowNetwork) -> Result<CutTree, ClusterError> {
    let n = net.vertex_count();
    let mut parent = vec![0usize; n];
    let mut value = vec![0 as Capacity; n];
    let mut solver = FlowSolver::new(net)?;
    for s in 1..n {
        let t = parent[s];
        let cut = solver.solve(s, t)?;
        value[s] = cut.value;
        for (i, p) in parent.iter_mut().enumerate().skip(s + 1) {
            if cut.source_side[i] && *p == t {
                *p = s;
            }
        }
    }
    Ok(CutTree {
        root: 0,
        edges: (1..n)
            .map(|s| CutTreeEdge {
                child: s,
                parent: parent[s],
                value: value[s],
            })
            .collect(),
    })
}

/// Cut tree proper: every tree edge also induces a minimum cut of the graph.
///
/// `root` is processed first; the others follow in index order.
pub fn gomory_hu_tree(net: &FlowNetwork, root: usize) -> Result<CutTree, ClusterError> {
    let n = net.vertex_count();
    let order: Vec<usize> = std::iter::once(root).chain((0..n).filter(|&v| v != root)).collect();
    let mut parent = vec![root; n];
    let mut value = vec![0 as Capacity; n];
    let mut solver = FlowSolver::new(net)?;
    for &s in &order[1..] {
        let t = parent[s];
        let cut = solver.solve(s, t)?;
        for &i in &order[1..] {
            if i != s && cut.source_side[i] && parent[i] == t {
                parent[i] = s;
            }
        }
        if t != root && cut.source_side[parent[t]] {
            parent[s] = parent[t];
            parent[t] = s;
            value[s] = value[t];
            value[t] = cut.value;
        } else {
            value[s] = cut.value;
        }
    }
    let edges = order[1..]
        .iter()
        .map(|&v| CutTreeEdge {
            child: v,
            parent: parent[v],
            value: value[v],
        })
        .collect();
    Ok(CutTree { root, edges })
}

/// Clusters read off a full cut tree rooted at the sink: drop the sink and
/// return the remaining connected pieces.
pub fn cut_tree_clustering(scaled: &ScaledNetwork) -> Result<Vec<Vec<usize>>, ClusterError> {
    let sink = scaled.sink();
    let tree = gomory_hu_tree(&scaled.network, sink)?;
    let kept = tree
        .edges
        .iter()
        .filter(|e| e.child != sink && e.parent != sink)
        .map(|e| (e.child, e.parent));
    let mut pieces = dsu::connected_components(scaled.network.vertex_count(), kept);
    pieces.retain(|p| p != &[sink]);
    Ok(pieces)
}
