//! DIMACS max-flow text format.
//!
//! ```text
//! c comment
//! p max <nodes> <arcs>
//! n <id> s
//! n <id> t
//! a <tail> <head> <capacity>
//! ```
//!
//! Node ids are 1-based. Undirected edges are written as two opposite arcs.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Capacity, FlowNetwork};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing problem line")]
    MissingProblem,
    #[error("missing {0} designation")]
    MissingTerminal(&'static str),
    #[error("declared {declared} arcs, found {found}")]
    ArcCount { declared: usize, found: usize },
}

pub fn write_dimacs(net: &FlowNetwork) -> String {
    let arc_count: usize = net.arcs().iter().map(|a| 1 + usize::from(a.reverse_capacity > 0)).sum();
    let mut out = String::new();
    let _ = writeln!(out, "p max {} {}", net.vertex_count(), arc_count);
    let _ = writeln!(out, "n {} s", net.source + 1);
    let _ = writeln!(out, "n {} t", net.sink + 1);
    for a in net.arcs() {
        let _ = writeln!(out, "a {} {} {}", a.tail + 1, a.head + 1, a.capacity);
        if a.reverse_capacity > 0 {
            let _ = writeln!(out, "a {} {} {}", a.head + 1, a.tail + 1, a.reverse_capacity);
        }
    }
    out
}

pub fn parse_dimacs(text: &str) -> Result<FlowNetwork, DimacsError> {
    let mut net: Option<FlowNetwork> = None;
    let mut declared = 0usize;
    let mut found = 0usize;
    let (mut source, mut sink) = (None, None);

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: &str| DimacsError::Parse {
            line,
            message: message.to_string(),
        };
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.as_slice() {
            [] | ["c", ..] => {}
            ["p", "max", n, m] => {
                if net.is_some() {
                    return Err(err("duplicate problem line"));
                }
                let n: usize = n.parse().map_err(|_| err("bad node count"))?;
                declared = m.parse().map_err(|_| err("bad arc count"))?;
                net = Some(FlowNetwork::new(n, 0, 0));
            }
            ["n", id, role] => {
                let n = net.as_ref().ok_or(DimacsError::MissingProblem)?.vertex_count();
                let v = node_index(id, n).ok_or_else(|| err("node id out of range"))?;
                match *role {
                    "s" => source = Some(v),
                    "t" => sink = Some(v),
                    _ => return Err(err("node role must be `s` or `t`")),
                }
            }
            ["a", tail, head, cap] => {
                let g = net.as_mut().ok_or(DimacsError::MissingProblem)?;
                let n = g.vertex_count();
                let tail = node_index(tail, n).ok_or_else(|| err("tail out of range"))?;
                let head = node_index(head, n).ok_or_else(|| err("head out of range"))?;
                let cap: Capacity = cap.parse().map_err(|_| err("bad capacity"))?;
                if cap < 0 {
                    return Err(err("negative capacity"));
                }
                g.add_arc(tail, head, cap);
                found += 1;
            }
            _ => return Err(err("unrecognized line")),
        }
    }
    let mut net = net.ok_or(DimacsError::MissingProblem)?;
    if found != declared {
        return Err(DimacsError::ArcCount { declared, found });
    }
    net.source = source.ok_or(DimacsError::MissingTerminal("source"))?;
    net.sink = sink.ok_or(DimacsError::MissingTerminal("sink"))?;
    Ok(net)
}

fn node_index(token: &str, n: usize) -> Option<usize> {
    let id: usize = token.parse().ok()?;
    (1..=n).contains(&id).then(|| id - 1)
}
