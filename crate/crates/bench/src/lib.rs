//! Synthetic inputs shared by the benchmarks.

use std::collections::BTreeSet;

use archclust::{FlowNetwork, UndirectedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected graph of `n` vertices and about `m` edges, where a share
/// `intra` of the extra edges stays inside one of `modules` equal groups.
pub fn planted_graph(seed: u64, n: usize, m: usize, modules: usize, intra: f64) -> UndirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = BTreeSet::new();
    for v in 1..n {
        pairs.insert((rng.gen_range(0..v), v));
    }
    let size = n.div_ceil(modules);
    while pairs.len() < m.max(n - 1) {
        let a = rng.gen_range(0..n);
        let b = if rng.gen_bool(intra) {
            let base = (a / size) * size;
            rng.gen_range(base..(base + size).min(n))
        } else {
            rng.gen_range(0..n)
        };
        if a != b {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    let labels = (0..n).map(|v| format!("m{}.C{v}", v / size)).collect();
    UndirectedGraph::new(labels, pairs.into_iter().map(|(a, b)| (a, b, rng.gen_range(0.5..5.0))))
}

/// Integer flow network with undirected edges, source 0 and sink `n - 1`.
pub fn random_network(seed: u64, n: usize, m: usize) -> FlowNetwork {
    let g = planted_graph(seed, n, m, 1, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut net = FlowNetwork::new(n, 0, n - 1);
    for e in g.edges() {
        net.add_edge(e.a, e.b, rng.gen_range(1..1000));
    }
    net
}
