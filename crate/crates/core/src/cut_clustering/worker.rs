//! File boundary between the search coordinator and an out-of-process probe
//! worker.
//!
//! A task directory holds `network.dimacs` (the scaled network with its
//! sink) and `pass_order.txt` (one vertex index per line). The worker writes
//! `clusters.txt` and `heads.txt`, one cluster per line as space-separated
//! vertex indices, in the same order.

use std::fs;
use std::path::Path;

use crate::maxflow::{parse_dimacs, write_dimacs, FlowNetwork};

use super::{community_traversal, ClusterError, Communities, TraversalStats};

pub const NETWORK_FILE: &str = "network.dimacs";
pub const ORDER_FILE: &str = "pass_order.txt";
pub const CLUSTERS_FILE: &str = "clusters.txt";
pub const HEADS_FILE: &str = "heads.txt";

pub fn write_task(dir: &Path, net: &FlowNetwork, order: &[usize]) -> Result<(), ClusterError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(NETWORK_FILE), write_dimacs(net))?;
    let mut text = String::with_capacity(order.len() * 6);
    for v in order {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    fs::write(dir.join(ORDER_FILE), text)?;
    Ok(())
}

/// Runs the community traversal described by a task directory and writes
/// the result files next to it.
pub fn run_task(dir: &Path) -> Result<Communities, ClusterError> {
    let net = parse_dimacs(&fs::read_to_string(dir.join(NETWORK_FILE))?)?;
    let order_text = fs::read_to_string(dir.join(ORDER_FILE))?;
    let order = order_text
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format_error(ORDER_FILE, e.to_string()))?;
    let found = community_traversal(&net, &order)?;
    fs::write(dir.join(CLUSTERS_FILE), render_lines(&found.clusters))?;
    fs::write(dir.join(HEADS_FILE), render_lines(&found.heads))?;
    Ok(found)
}

/// Reads back a finished task. Counters are not part of the file boundary
/// and come back as zero.
pub fn read_result(dir: &Path) -> Result<Communities, ClusterError> {
    let clusters = parse_lines(dir, CLUSTERS_FILE)?;
    let heads = parse_lines(dir, HEADS_FILE)?;
    if clusters.len() != heads.len() {
        return Err(format_error(HEADS_FILE, "line count differs from clusters".into()));
    }
    Ok(Communities {
        clusters,
        heads,
        stats: TraversalStats::default(),
    })
}

fn render_lines(rows: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn parse_lines(dir: &Path, file: &str) -> Result<Vec<Vec<usize>>, ClusterError> {
    fs::read_to_string(dir.join(file))?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|e| format_error(file, e.to_string())))
                .collect()
        })
        .collect()
}

fn format_error(file: &str, message: String) -> ClusterError {
    ClusterError::WorkerFormat {
        file: file.to_string(),
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut_clustering::{pass_order, scale_to_integer};
    use crate::graph::UndirectedGraph;

    #[test]
    fn task_round_trip_matches_in_process() {
        let g = UndirectedGraph::from_edges(
            6,
            [
                (0, 1, 1.0),
                (0, 2, 1.0),
                (1, 2, 1.0),
                (3, 4, 1.0),
                (3, 5, 1.0),
                (4, 5, 1.0),
                (2, 3, 0.2),
            ],
        );
        let scaled = scale_to_integer(&g, 0.5).unwrap();
        let order = pass_order(&g);
        let dir = tempfile::tempdir().unwrap();
        write_task(dir.path(), &scaled.network, &order).unwrap();
        let ran = run_task(dir.path()).unwrap();
        let read = read_result(dir.path()).unwrap();
        let direct = community_traversal(&scaled.network, &order).unwrap();
        assert_eq!(ran, direct);
        assert_eq!(read.clusters, direct.clusters);
        assert_eq!(read.heads, direct.heads);
        assert_eq!(read.clusters, vec![vec![0, 1, 2], vec![3, 4, 5]]);
    }
}
