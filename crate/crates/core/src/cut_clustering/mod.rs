//! Single-alpha cut clustering: scale the graph to integer capacities, attach
//! an artificial sink to every vertex with capacity alpha, and collect the
//! communities of the vertices with respect to that sink.

mod cut_tree;
pub mod worker;

pub use cut_tree::{cut_tree_clustering, gomory_hu_tree, min_cut_tree, CutTree, CutTreeEdge};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::UndirectedGraph;
use crate::maxflow::{Capacity, FlowError, FlowNetwork, FlowSolver, CAPACITY_HEADROOM};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("alpha {alpha} rounds to zero at scale 2^{scale_exp}")]
    AlphaUnderflow { alpha: f64, scale_exp: i32 },
    #[error("graph weights cannot be scaled into integer capacities")]
    Unscalable,
    #[error("pass order must list every non-sink vertex once")]
    BadOrder,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Dimacs(#[from] crate::maxflow::DimacsError),
    #[error("worker file {file}: {message}")]
    WorkerFormat { file: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Integer version of a graph plus its artificial sink.
///
/// Vertex `i` of the graph is vertex `i` of the network; the sink is vertex
/// `n`. Every real weight `w` becomes `round(w * 2^scale_exp)`.
#[derive(Debug, Clone)]
pub struct ScaledNetwork {
    pub network: FlowNetwork,
    pub scale_exp: i32,
    pub alpha_int: Capacity,
    /// Graph edges that rounded to zero and were left out.
    pub dropped_edges: usize,
    /// Integer capacity per graph edge, in `UndirectedGraph::edges` order (0 if dropped).
    pub edge_caps: Vec<Capacity>,
}

impl ScaledNetwork {
    pub fn scale(&self) -> f64 {
        2f64.powi(self.scale_exp)
    }

    pub fn sink(&self) -> usize {
        self.network.sink
    }

    pub fn vertex_count(&self) -> usize {
        self.network.sink
    }
}

/// Scales with the largest power of two that keeps every vertex's adjacent
/// weight plus alpha at or below the capacity headroom.
pub fn scale_to_integer(g: &UndirectedGraph, alpha: f64) -> Result<ScaledNetwork, ClusterError> {
    check_alpha(alpha)?;
    let peak = g
        .adjacent_weights()
        .into_iter()
        .map(|u| u + alpha)
        .fold(alpha, f64::max);
    let headroom = CAPACITY_HEADROOM as f64;
    let mut exp = (headroom / peak).log2().floor() as i32;
    while peak * 2f64.powi(exp) > headroom {
        exp -= 1;
    }
    while peak * 2f64.powi(exp + 1) <= headroom {
        exp += 1;
    }
    // rounding may push a vertex sum past the headroom; back off until it fits
    for _ in 0..64 {
        let scaled = scale_with_exponent(g, alpha, exp)?;
        if fits_headroom(&scaled) {
            return Ok(scaled);
        }
        exp -= 1;
    }
    Err(ClusterError::Unscalable)
}

/// Scales by exactly `2^scale_exp`; used directly by tests that need a coarse grid.
pub fn scale_with_exponent(g: &UndirectedGraph, alpha: f64, scale_exp: i32) -> Result<ScaledNetwork, ClusterError> {
    check_alpha(alpha)?;
    let n = g.vertex_count();
    let scale = 2f64.powi(scale_exp);
    let quantize = |w: f64| -> Result<Capacity, ClusterError> {
        let q = (w * scale).round();
        if !q.is_finite() || q > i64::MAX as f64 / 2.0 {
            return Err(ClusterError::Unscalable);
        }
        Ok(q as Capacity)
    };
    let alpha_int = quantize(alpha)?;
    if alpha_int == 0 {
        return Err(ClusterError::AlphaUnderflow { alpha, scale_exp });
    }
    let mut network = FlowNetwork::new(n + 1, 0, n);
    let mut dropped_edges = 0;
    let mut edge_caps = Vec::with_capacity(g.edges().len());
    for e in g.edges() {
        let c = quantize(e.weight)?;
        edge_caps.push(c);
        if c == 0 {
            dropped_edges += 1;
        } else {
            network.add_edge(e.a, e.b, c);
        }
    }
    if dropped_edges > 0 {
        log::warn!("{dropped_edges} edges rounded to zero at scale 2^{scale_exp}");
    }
    for v in 0..n {
        network.add_edge(v, n, alpha_int);
    }
    Ok(ScaledNetwork {
        network,
        scale_exp,
        alpha_int,
        dropped_edges,
        edge_caps,
    })
}

fn check_alpha(alpha: f64) -> Result<(), ClusterError> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(ClusterError::InvalidAlpha(alpha))
    }
}

fn fits_headroom(net: &ScaledNetwork) -> bool {
    let n = net.vertex_count();
    let mut sums = vec![0i128; n];
    for a in net.network.arcs() {
        if a.tail < n {
            sums[a.tail] += a.capacity as i128;
        }
        if a.head < n {
            sums[a.head] += a.reverse_capacity as i128;
        }
    }
    sums.iter().all(|&s| s <= CAPACITY_HEADROOM as i128)
}

/// Clusters of one probe, ordered by smallest member, members ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub alpha: f64,
    pub clusters: Vec<Vec<usize>>,
    /// Per cluster: the vertex whose cut produced it, followed by the heads
    /// of communities it absorbed.
    pub heads: Vec<Vec<usize>>,
}

impl Partition {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn singletons(alpha: f64, n: usize) -> Self {
        Partition {
            alpha,
            clusters: (0..n).map(|v| vec![v]).collect(),
            heads: (0..n).map(|v| vec![v]).collect(),
        }
    }

    /// Cluster index per vertex.
    pub fn assignment(&self, n: usize) -> Vec<usize> {
        let mut of = vec![usize::MAX; n];
        for (c, members) in self.clusters.iter().enumerate() {
            for &v in members {
                of[v] = c;
            }
        }
        of
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraversalStats {
    pub flow_calls: u64,
    pub remarks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Communities {
    pub clusters: Vec<Vec<usize>>,
    pub heads: Vec<Vec<usize>>,
    pub stats: TraversalStats,
}

/// Vertices by decreasing adjacent weight, ties by index.
pub fn pass_order(g: &UndirectedGraph) -> Vec<usize> {
    let weights = g.adjacent_weights();
    let mut order: Vec<usize> = (0..g.vertex_count()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order
}

/// Walks `order`, cutting every not yet assigned vertex from the sink and
/// giving the whole source side to its community. Communities found earlier
/// that end up inside a later source side are absorbed.
pub fn community_traversal(net: &FlowNetwork, order: &[usize]) -> Result<Communities, ClusterError> {
    let sink = net.sink;
    let n = net.vertex_count();
    let mut listed = vec![false; n];
    for &v in order {
        if v >= n || v == sink || std::mem::replace(&mut listed[v], true) {
            return Err(ClusterError::BadOrder);
        }
    }
    if order.len() + 1 != n {
        return Err(ClusterError::BadOrder);
    }

    let mut solver = FlowSolver::new(net)?;
    let mut owner = vec![usize::MAX; n];
    let mut heads: Vec<Vec<usize>> = Vec::new();
    let mut alive: Vec<bool> = Vec::new();
    let mut stats = TraversalStats::default();
    for &s in order {
        if owner[s] != usize::MAX {
            continue;
        }
        let cut = solver.solve(s, sink)?;
        stats.flow_calls += 1;
        let id = heads.len();
        let mut own_heads = vec![s];
        for v in cut.source_vertices() {
            let previous = owner[v];
            if previous != usize::MAX && alive[previous] {
                alive[previous] = false;
                stats.remarks += 1;
                own_heads.extend_from_slice(&heads[previous]);
            }
            owner[v] = id;
        }
        heads.push(own_heads);
        alive.push(true);
    }
    debug_assert!(owner.iter().enumerate().all(|(v, &o)| (v == sink) == (o == usize::MAX)));

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); heads.len()];
    for (v, &o) in owner.iter().enumerate() {
        if o != usize::MAX {
            members[o].push(v);
        }
    }
    let mut found: Vec<(Vec<usize>, Vec<usize>)> = members
        .into_iter()
        .zip(heads)
        .zip(alive)
        .filter(|(_, alive)| *alive)
        .map(|(pair, _)| pair)
        .collect();
    found.sort_by_key(|(m, _)| m[0]);
    let (clusters, heads) = found.into_iter().unzip();
    Ok(Communities { clusters, heads, stats })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub flow_calls: u64,
    pub remarks: u64,
    pub dropped_edges: u64,
}

/// One probe: the partition of `g` at `alpha` plus counters.
pub fn cut_cluster_probe(g: &UndirectedGraph, alpha: f64) -> Result<(Partition, ProbeStats), ClusterError> {
    check_alpha(alpha)?;
    let n = g.vertex_count();
    if n <= 1 {
        return Ok((Partition::singletons(alpha, n), ProbeStats::default()));
    }
    let scaled = scale_to_integer(g, alpha)?;
    let found = community_traversal(&scaled.network, &pass_order(g))?;
    let stats = ProbeStats {
        flow_calls: found.stats.flow_calls,
        remarks: found.stats.remarks,
        dropped_edges: scaled.dropped_edges as u64,
    };
    Ok((
        Partition {
            alpha,
            clusters: found.clusters,
            heads: found.heads,
        },
        stats,
    ))
}

pub fn basic_cut_cluster(g: &UndirectedGraph, alpha: f64) -> Result<Partition, ClusterError> {
    cut_cluster_probe(g, alpha).map(|(p, _)| p)
}

/// A cluster that breaks one of the two quality bounds of cut clustering.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundViolation {
    #[error("cluster {cluster:?}: boundary {boundary} exceeds alpha * {outside}")]
    Boundary {
        cluster: Vec<usize>,
        boundary: i128,
        outside: usize,
    },
    #[error("cluster {cluster:?}: split {part:?} costs {cost}, below alpha * {smaller}")]
    Inner {
        cluster: Vec<usize>,
        part: Vec<usize>,
        cost: i128,
        smaller: usize,
    },
}

/// Checks both bounds in the integer domain of `scaled`, allowing one quantum.
///
/// Boundary: `c(S, V-S) <= alpha * |V-S|`, with `V` the connected component
/// containing `S`. Inner: every bipartition `(P, Q)` of `S` has
/// `c(P, Q) >= alpha * min(|P|, |Q|)`; only checked for clusters of at most
/// `inner_limit` vertices since it enumerates all of them.
pub fn check_bounds(
    g: &UndirectedGraph,
    scaled: &ScaledNetwork,
    partition: &Partition,
    inner_limit: usize,
) -> Result<(), BoundViolation> {
    let n = g.vertex_count();
    let alpha = scaled.alpha_int as i128;
    let mut component = vec![0usize; n];
    let mut component_size = Vec::new();
    for (c, members) in g.components().iter().enumerate() {
        for &v in members {
            component[v] = c;
        }
        component_size.push(members.len());
    }
    let assignment = partition.assignment(n);
    let mut boundary = vec![0i128; partition.clusters.len()];
    for (e, &cap) in g.edges().iter().zip(&scaled.edge_caps) {
        let (ca, cb) = (assignment[e.a], assignment[e.b]);
        if ca != cb {
            boundary[ca] += cap as i128;
            boundary[cb] += cap as i128;
        }
    }
    for (c, members) in partition.clusters.iter().enumerate() {
        let outside = component_size[component[members[0]]] - members.len();
        if boundary[c] > alpha * outside as i128 + 1 {
            return Err(BoundViolation::Boundary {
                cluster: members.clone(),
                boundary: boundary[c],
                outside,
            });
        }
        if members.len() >= 2 && members.len() <= inner_limit {
            check_inner(g, scaled, members, alpha)?;
        }
    }
    Ok(())
}

fn check_inner(
    g: &UndirectedGraph,
    scaled: &ScaledNetwork,
    members: &[usize],
    alpha: i128,
) -> Result<(), BoundViolation> {
    let k = members.len();
    let mut local = vec![usize::MAX; g.vertex_count()];
    for (i, &v) in members.iter().enumerate() {
        local[v] = i;
    }
    let inner: Vec<(usize, usize, i128)> = g
        .edges()
        .iter()
        .zip(&scaled.edge_caps)
        .filter(|(e, _)| local[e.a] != usize::MAX && local[e.b] != usize::MAX)
        .map(|(e, &c)| (local[e.a], local[e.b], c as i128))
        .collect();
    // vertex 0 stays in P, so every bipartition is visited once
    for mask in 1u32..(1 << (k - 1)) {
        let in_q = |i: usize| i > 0 && mask >> (i - 1) & 1 == 1;
        let q = mask.count_ones() as usize;
        let smaller = q.min(k - q);
        let cost: i128 = inner
            .iter()
            .filter(|&&(a, b, _)| in_q(a) != in_q(b))
            .map(|&(_, _, c)| c)
            .sum();
        if cost + 1 < alpha * smaller as i128 {
            return Err(BoundViolation::Inner {
                cluster: members.to_vec(),
                part: (0..k).filter(|&i| in_q(i)).map(|i| members[i]).collect(),
                cost,
                smaller,
            });
        }
    }
    Ok(())
}
