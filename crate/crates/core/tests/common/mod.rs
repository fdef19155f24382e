//! Brute-force oracles and random inputs shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use archclust::{ClusterTree, FlowNetwork, NodeId, UndirectedGraph};
use num::{BigInt, BigRational, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Random connected simple graph: a random spanning tree plus each other
/// pair with probability `density`.
pub fn connected_edges<W>(
    rng: &mut ChaCha8Rng,
    n: usize,
    density: f64,
    mut weight: impl FnMut(&mut ChaCha8Rng) -> W,
) -> Vec<(usize, usize, W)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = BTreeSet::new();
    for i in 1..n {
        let j = order[rng.gen_range(0..i)];
        let v = order[i];
        pairs.insert((v.min(j), v.max(j)));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                pairs.insert((a, b));
            }
        }
    }
    pairs.into_iter().map(|(a, b)| (a, b, weight(rng))).collect()
}

pub fn int_network(n: usize, edges: &[(usize, usize, i64)]) -> FlowNetwork {
    let mut net = FlowNetwork::new(n, 0, n.saturating_sub(1));
    for &(a, b, w) in edges {
        net.add_edge(a, b, w);
    }
    net
}

pub fn real_graph(n: usize, edges: &[(usize, usize, f64)]) -> UndirectedGraph {
    UndirectedGraph::from_edges(n, edges.iter().copied())
}

/// Minimum `s`-`t` cut by enumerating every vertex subset.
pub fn brute_min_cut(n: usize, edges: &[(usize, usize, i64)], s: usize, t: usize) -> i64 {
    (0u32..1 << n)
        .filter(|m| m & (1 << s) != 0 && m & (1 << t) == 0)
        .map(|m| {
            edges
                .iter()
                .filter(|&&(a, b, _)| ((m >> a) & 1) != ((m >> b) & 1))
                .map(|e| e.2)
                .sum()
        })
        .min()
        .expect("s != t")
}

pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Exact value of the cut `(side, rest + sink)` where every side vertex also
/// pays `alpha` to the sink.
pub fn rational_sink_cut(edges: &[(usize, usize, BigRational)], alpha: &BigRational, side: u32) -> BigRational {
    let mut total = BigRational::zero();
    for (a, b, w) in edges {
        if ((side >> a) & 1) != ((side >> b) & 1) {
            total += w;
        }
    }
    total + alpha * BigRational::from_integer(BigInt::from(side.count_ones()))
}

/// Smallest minimum cut separating `s` from the artificial sink, computed
/// in exact rationals; also returns the optimum value.
pub fn rational_min_sink_side(
    n: usize,
    edges: &[(usize, usize, BigRational)],
    alpha: &BigRational,
    s: usize,
) -> (u32, BigRational) {
    let mut best: Option<BigRational> = None;
    let mut sides: Vec<u32> = Vec::new();
    for m in (0u32..1 << n).filter(|m| m & (1 << s) != 0) {
        let v = rational_sink_cut(edges, alpha, m);
        match &best {
            Some(b) if v > *b => {}
            Some(b) if v == *b => sides.push(m),
            _ => {
                best = Some(v);
                sides = vec![m];
            }
        }
    }
    let minimal = sides.iter().fold(u32::MAX, |acc, &m| acc & m);
    (minimal, best.unwrap())
}

/// Maximum spanning tree weight and edge set by enumerating every labelled
/// tree through its Pruefer sequence.
pub fn brute_max_spanning_tree(n: usize, edges: &[(usize, usize, f64)]) -> Option<(f64, BTreeSet<(usize, usize)>)> {
    if n == 1 {
        return Some((0.0, BTreeSet::new()));
    }
    let mut weight = vec![vec![None; n]; n];
    for &(a, b, w) in edges {
        weight[a][b] = Some(w);
        weight[b][a] = Some(w);
    }
    let mut best: Option<(f64, BTreeSet<(usize, usize)>)> = None;
    let len = n - 2;
    let total = n.pow(len as u32);
    let mut seq = vec![0usize; len];
    for code in 0..total {
        let mut c = code;
        for slot in seq.iter_mut() {
            *slot = c % n;
            c /= n;
        }
        let tree = pruefer_decode(n, &seq);
        let mut sum = 0.0;
        let mut ok = true;
        for &(a, b) in &tree {
            match weight[a][b] {
                Some(w) => sum += w,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.as_ref().is_none_or(|(bw, _)| sum > *bw) {
            best = Some((sum, tree));
        }
    }
    best
}

fn pruefer_decode(n: usize, seq: &[usize]) -> BTreeSet<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut out = BTreeSet::new();
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        out.insert((leaf.min(x), leaf.max(x)));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    out.insert((rest[0], rest[1]));
    out
}

/// Lowest node whose subtree holds all of `leaves`, found by walking parents.
pub fn lca(tree: &ClusterTree, leaves: &[usize]) -> NodeId {
    let path = |v: NodeId| {
        let mut p = vec![v];
        let mut at = v;
        while let Some(u) = tree.node(at).parent {
            p.push(u);
            at = u;
        }
        p
    };
    let mut common = path(leaves[0]);
    for &l in &leaves[1..] {
        let other: BTreeSet<NodeId> = path(l).into_iter().collect();
        common.retain(|v| other.contains(v));
    }
    common[0]
}

/// Planted-module graph: `modules` groups, a share `intra` of edges inside
/// groups, real weights in `[0.5, 5)`.
pub fn planted_graph(rng: &mut ChaCha8Rng, n: usize, m: usize, modules: usize, intra: f64) -> UndirectedGraph {
    let mut pairs = BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        pairs.insert((u, v));
    }
    let size = n.div_ceil(modules);
    while pairs.len() < m {
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

/// Fixed 10-leaf tree: two components, nested clusters and one synthetic node.
pub fn fixture_tree() -> ClusterTree {
    let labels = [
        "app.core.Engine",
        "app.core.Config",
        "app.core.Loader",
        "app.ui.Window",
        "app.ui.Button",
        "app.ui.Menu",
        "lib.util.Strings",
        "lib.util.Lists",
        "lib.io.Files",
        "tools.Main",
    ];
    let component = [0, 0, 0, 0, 0, 0, 0, 0, 0, 1];
    let mut t = ClusterTree::new(labels.iter().map(|s| s.to_string()).collect(), &component);
    t.merge_cluster(&[0, 1, 2, 3, 4, 5, 6, 7, 8], 0.25, &[0]).unwrap();
    t.merge_cluster(&[0, 1, 2, 3, 4, 5], 0.5, &[0, 3]).unwrap();
    t.merge_cluster(&[0, 1, 2], 1.0, &[0]).unwrap();
    t.merge_cluster(&[0, 1], 2.0, &[1]).unwrap();
    t.merge_cluster(&[3, 4, 5], 0.75, &[4]).unwrap();
    t.merge_cluster(&[6, 7], 1.5, &[6]).unwrap();
    let ui = lca(&t, &[3, 4, 5]);
    t.adopt(ui, &[4, 5], 1.0, true);
    t.validate().unwrap();
    t
}
