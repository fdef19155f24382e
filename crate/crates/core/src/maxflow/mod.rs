//! Maximum flow and minimum s-t cuts on integer-capacity networks.

mod dimacs;
mod push_relabel;

pub use dimacs::{parse_dimacs, write_dimacs, DimacsError};
pub use push_relabel::{FlowSolver, FlowStats};

use thiserror::Error;

pub type Capacity = i64;

/// Upper bound on the total capacity leaving the source, so that no excess
/// or residual capacity can overflow an `i64`.
pub const CAPACITY_HEADROOM: Capacity = 1 << 62;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("source and sink must differ (both are {0})")]
    SameTerminals(usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("arc {tail}->{head} has negative capacity")]
    NegativeCapacity { tail: usize, head: usize },
    #[error("capacity overflow guard violated at vertex {vertex}")]
    Overflow { vertex: usize },
    #[error("preflow could not be converted into a flow")]
    Internal,
}

/// One capacity pair. An undirected edge of capacity `c` has
/// `capacity == reverse_capacity == c`; a directed arc has `reverse_capacity == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowArc {
    pub tail: usize,
    pub head: usize,
    pub capacity: Capacity,
    pub reverse_capacity: Capacity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowNetwork {
    n: usize,
    pub source: usize,
    pub sink: usize,
    arcs: Vec<FlowArc>,
}

impl FlowNetwork {
    pub fn new(n: usize, source: usize, sink: usize) -> Self {
        FlowNetwork {
            n,
            source,
            sink,
            arcs: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[FlowArc] {
        &self.arcs
    }

    pub fn add_edge(&mut self, a: usize, b: usize, capacity: Capacity) {
        self.push(a, b, capacity, capacity);
    }

    pub fn add_arc(&mut self, tail: usize, head: usize, capacity: Capacity) {
        self.push(tail, head, capacity, 0);
    }

    fn push(&mut self, tail: usize, head: usize, capacity: Capacity, reverse_capacity: Capacity) {
        self.n = self.n.max(tail + 1).max(head + 1);
        self.arcs.push(FlowArc {
            tail,
            head,
            capacity,
            reverse_capacity,
        });
    }

    /// Capacity of the cut `(side, V - side)` counted in the forward direction.
    pub fn cut_capacity(&self, side: &[bool]) -> Capacity {
        self.arcs
            .iter()
            .map(|a| match (side[a.tail], side[a.head]) {
                (true, false) => a.capacity,
                (false, true) => a.reverse_capacity,
                _ => 0,
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinCut {
    pub value: Capacity,
    /// Vertices reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

impl MinCut {
    pub fn source_vertices(&self) -> Vec<usize> {
        self.source_side
            .iter()
            .enumerate()
            .filter_map(|(v, &inside)| inside.then_some(v))
            .collect()
    }
}

pub fn max_flow(net: &FlowNetwork) -> Result<MinCut, FlowError> {
    min_cut_between(net, net.source, net.sink)
}

pub fn min_cut_between(net: &FlowNetwork, s: usize, t: usize) -> Result<MinCut, FlowError> {
    FlowSolver::new(net)?.solve(s, t)
}
