//! Package ubiquity: where in the tree the classes of a package meet.
//!
//! A label such as `com.a.B$C` has the token-wise prefixes `com`, `com.a`
//! and `com.a.B`. At every inner node where `k >= 2` children contain
//! labels with a given prefix, that prefix records `k - 1` merge events.
//! Depth, height and subtree size of the event nodes are averaged, weighted
//! by event count.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::tree::{ClusterTree, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrefixStats {
    pub prefix: String,
    pub suffix_count: usize,
    pub avg_match_height: f64,
    pub avg_match_depth: f64,
    pub avg_subtree_nodes: f64,
    pub rank: usize,
}

/// Proper token-wise prefixes of a label, split on `.` and `$`.
pub fn label_prefixes(label: &str) -> impl Iterator<Item = &str> {
    label
        .char_indices()
        .filter(|&(i, c)| (c == '.' || c == '$') && i > 0)
        .map(move |(i, _)| &label[..i])
}

#[derive(Default)]
struct Tally {
    labels: Vec<NodeId>,
    events: f64,
    depth: f64,
    height: f64,
    size: f64,
}

pub fn ubiquity_stats(tree: &ClusterTree) -> Vec<PrefixStats> {
    let mut by_prefix: BTreeMap<&str, Tally> = BTreeMap::new();
    for leaf in 0..tree.leaf_count() {
        let mut seen = Vec::new();
        for p in label_prefixes(tree.label(leaf)) {
            if !seen.contains(&p) {
                seen.push(p);
                by_prefix.entry(p).or_default().labels.push(leaf);
            }
        }
    }
    let heights = tree.heights();
    let sizes = tree.subtree_sizes();
    let fake = tree.fake_root();

    let mut stats = Vec::new();
    for (prefix, mut tally) in by_prefix {
        if tally.labels.len() < 2 {
            continue;
        }
        // children of each ancestor that lead to a labelled leaf
        let mut reached: HashMap<NodeId, usize> = HashMap::new();
        let mut visited: std::collections::HashSet<NodeId> = std::collections::HashSet::new();
        for &leaf in &tally.labels {
            let mut cur = leaf;
            if !visited.insert(cur) {
                continue;
            }
            while let Some(p) = tree.node(cur).parent.filter(|&p| p != fake) {
                *reached.entry(p).or_insert(0) += 1;
                if !visited.insert(p) {
                    break;
                }
                cur = p;
            }
        }
        for (node, k) in reached {
            if k >= 2 {
                let events = (k - 1) as f64;
                tally.events += events;
                tally.depth += events * tree.depth(node) as f64;
                tally.height += events * heights[node] as f64;
                tally.size += events * sizes[node] as f64;
            }
        }
        if tally.events == 0.0 {
            continue;
        }
        stats.push(PrefixStats {
            prefix: prefix.to_string(),
            suffix_count: tally.labels.len(),
            avg_match_height: tally.height / tally.events,
            avg_match_depth: tally.depth / tally.events,
            avg_subtree_nodes: tally.size / tally.events,
            rank: 0,
        });
    }
    assign_ranks(&mut stats);
    stats
}

/// Signed wins of `x` against every value: +1 per smaller, -1 per larger.
fn wins(sorted: &[f64], x: f64) -> i64 {
    let below = sorted.partition_point(|&v| v < x);
    let above = sorted.len() - sorted.partition_point(|&v| v <= x);
    below as i64 - above as i64
}

/// Pairwise scoring: higher match height, larger subtrees and shallower
/// matches each win a comparison. Rank is one plus the number of strictly
/// better scores; ties are listed by prefix.
fn assign_ranks(stats: &mut [PrefixStats]) {
    let column = |f: fn(&PrefixStats) -> f64| {
        let mut v: Vec<f64> = stats.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let heights = column(|s| s.avg_match_height);
    let sizes = column(|s| s.avg_subtree_nodes);
    let depths = column(|s| s.avg_match_depth);
    let scores: Vec<i64> = stats
        .iter()
        .map(|s| {
            wins(&heights, s.avg_match_height) + wins(&sizes, s.avg_subtree_nodes) - wins(&depths, s.avg_match_depth)
        })
        .collect();
    let mut sorted_scores = scores.clone();
    sorted_scores.sort_unstable();
    for (s, &score) in stats.iter_mut().zip(&scores) {
        s.rank = 1 + sorted_scores.len() - sorted_scores.partition_point(|&v| v <= score);
    }
    stats.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.prefix.cmp(&b.prefix)));
}

/// `%g`-style rendering with six significant digits.
fn significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let text = format!("{x:.decimals$}");
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        text
    }
}

pub fn stats_tsv(stats: &[PrefixStats]) -> String {
    let mut out = String::from("rank\tavgMH\tavgMD\tavgNU\t!Suff.!\tPrefix\n");
    for s in stats {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.rank,
            significant(s.avg_match_height),
            significant(s.avg_match_depth),
            significant(s.avg_subtree_nodes),
            s.suffix_count,
            s.prefix
        );
    }
    out
}

pub fn stats_xml(stats: &[PrefixStats]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<packageStats>\n");
    for s in stats {
        let _ = writeln!(
            out,
            "  <package prefix=\"{}\" rank=\"{}\" avgMH=\"{}\" avgMD=\"{}\" avgNU=\"{}\" suffixCount=\"{}\" />",
            s.prefix
                .replace('&', "&amp;")
                .replace('"', "&quot;")
                .replace('<', "&lt;"),
            s.rank,
            significant(s.avg_match_height),
            significant(s.avg_match_depth),
            significant(s.avg_subtree_nodes),
            s.suffix_count
        );
    }
    out.push_str("</packageStats>\n");
    out
}
