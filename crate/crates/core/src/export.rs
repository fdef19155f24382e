//! Text, XML and viewer renderings of a [`ClusterTree`].
//!
//! Children are listed by descending leaf count, then by smallest leaf
//! label. Leaves keep their vertex index as id; inner nodes are numbered
//! `n, n+1, ...` in that pre-order. Synthetic nodes print alpha `-1`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::tree::{ClusterTree, NodeId};

pub const SYNTHETIC_ALPHA: f64 = -1.0;
const INDENT: &str = "  ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TextStyle {
    DepthIndent,
    HeightIndent,
    Bracketed,
}

/// Frozen traversal shared by every exporter.
struct Layout<'a> {
    tree: &'a ClusterTree,
    children: Vec<Vec<NodeId>>,
    export_id: Vec<usize>,
    depth: Vec<usize>,
    height: Vec<usize>,
    pre_order: Vec<NodeId>,
}

impl<'a> Layout<'a> {
    fn new(tree: &'a ClusterTree) -> Self {
        let total = tree.node_count();
        let fake = tree.fake_root();
        let mut min_label: Vec<Option<&str>> = vec![None; total];
        for v in tree.post_order(fake) {
            min_label[v] = if tree.is_leaf(v) {
                Some(tree.label(v))
            } else {
                tree.node(v).children.iter().filter_map(|&c| min_label[c]).min()
            };
        }
        let children: Vec<Vec<NodeId>> = (0..total)
            .map(|v| {
                let mut kids = tree.node(v).children.clone();
                kids.sort_by(|&a, &b| {
                    tree.node(b)
                        .leaf_count
                        .cmp(&tree.node(a).leaf_count)
                        .then(min_label[a].cmp(&min_label[b]))
                        .then(a.cmp(&b))
                });
                kids
            })
            .collect();

        let mut pre_order = Vec::with_capacity(total);
        let mut depth = vec![0; total];
        let mut stack: Vec<(NodeId, usize)> = children[fake].iter().rev().map(|&r| (r, 0)).collect();
        while let Some((v, d)) = stack.pop() {
            depth[v] = d;
            pre_order.push(v);
            stack.extend(children[v].iter().rev().map(|&c| (c, d + 1)));
        }
        let n = tree.leaf_count();
        let mut export_id: Vec<usize> = (0..total).collect();
        let mut next = n;
        for &v in &pre_order {
            if !tree.is_leaf(v) {
                export_id[v] = next;
                next += 1;
            }
        }
        Layout {
            tree,
            children,
            export_id,
            depth,
            height: tree.heights(),
            pre_order,
        }
    }

    fn alpha(&self, v: NodeId) -> f64 {
        let node = self.tree.node(v);
        if node.synthetic {
            SYNTHETIC_ALPHA
        } else {
            node.alpha.unwrap_or(f64::NAN)
        }
    }

    fn ancestors(&self, v: NodeId) -> Vec<usize> {
        let fake = self.tree.fake_root();
        let mut out = Vec::new();
        let mut at = self.tree.node(v).parent;
        while let Some(p) = at.filter(|&p| p != fake) {
            out.push(self.export_id[p]);
            at = self.tree.node(p).parent;
        }
        out
    }

    fn inner_count(&self) -> usize {
        self.pre_order.iter().filter(|&&v| !self.tree.is_leaf(v)).count()
    }
}

fn join(ids: impl IntoIterator<Item = usize>, sep: &str) -> String {
    ids.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(sep)
}

/// One line per node followed by either its label (leaves) or its level
/// and ancestor list (inner nodes).
pub fn export_text(tree: &ClusterTree, style: TextStyle) -> String {
    let layout = Layout::new(tree);
    match style {
        TextStyle::Bracketed => bracketed(&layout),
        TextStyle::DepthIndent => indented(&layout, |v| layout.depth[v]),
        TextStyle::HeightIndent => indented(&layout, |v| layout.height[v]),
    }
}

fn indented(layout: &Layout, level: impl Fn(NodeId) -> usize) -> String {
    let tree = layout.tree;
    let mut out = String::new();
    for &v in &layout.pre_order {
        let pad = INDENT.repeat(level(v));
        let node = tree.node(v);
        if tree.is_leaf(v) {
            let _ = writeln!(out, "{pad}{} 0 {} VeryBig ; 0 heads", v, node.component);
            let _ = writeln!(out, "{pad}{}", tree.label(v));
        } else {
            let heads = node.heads.iter().map(|h| format!(" {h}")).collect::<String>();
            let _ = writeln!(
                out,
                "{pad}{} {} {} {:.20} ; {} heads{}",
                layout.export_id[v],
                node.children.len(),
                node.component,
                layout.alpha(v),
                node.heads.len(),
                heads
            );
            let _ = write!(out, "{pad}{INDENT}Level {} cluster under", layout.depth[v]);
            let above = layout.ancestors(v);
            if !above.is_empty() {
                let _ = write!(out, " {}", join(above, ", "));
            }
            out.push('\n');
        }
    }
    out
}

/// Leaves one per line as `depth id "label"`; inner nodes only appear as
/// bracket tokens on the lines between leaves: `h<height><id>` closes,
/// `p<id>` names the parent of what opens next, `<id>h<height>` opens.
fn bracketed(layout: &Layout) -> String {
    let tree = layout.tree;
    let mut out = String::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut open: Vec<NodeId> = Vec::new();
    let flush = |out: &mut String, tokens: &mut Vec<String>| {
        if !tokens.is_empty() {
            out.push_str(&tokens.join(" "));
            out.push('\n');
            tokens.clear();
        }
    };
    for &v in &layout.pre_order {
        let parent = tree.node(v).parent.filter(|&p| p != tree.fake_root());
        while let Some(&top) = open.last() {
            if Some(top) == parent {
                break;
            }
            open.pop();
            tokens.push(format!("h{}<{}>", layout.height[top], layout.export_id[top]));
        }
        if tree.is_leaf(v) {
            flush(&mut out, &mut tokens);
            let _ = writeln!(out, "{} {} \"{}\"", layout.depth[v], v, tree.label(v));
        } else {
            let opens_chain = tokens.last().is_none_or(|t| !t.starts_with('<'));
            if opens_chain {
                if let Some(p) = parent {
                    tokens.push(format!("p{}", layout.export_id[p]));
                }
            }
            tokens.push(format!("<{}>h{}", layout.export_id[v], layout.height[v]));
            open.push(v);
        }
    }
    while let Some(top) = open.pop() {
        tokens.push(format!("h{}<{}>", layout.height[top], layout.export_id[top]));
    }
    flush(&mut out, &mut tokens);
    out
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Nested XML where a node's only child elements are its children.
pub fn export_xml(tree: &ClusterTree) -> String {
    let layout = Layout::new(tree);
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<clusterTree vertexCount=\"{}\" nodeCount=\"{}\" rootCount=\"{}\" disjointCount=\"{}\">",
        tree.leaf_count(),
        tree.leaf_count() + layout.inner_count(),
        tree.roots().len(),
        tree.component_count()
    );
    for &root in &layout.children[tree.fake_root()] {
        xml_node(&layout, root, 1, &mut out);
    }
    out.push_str("</clusterTree>\n");
    out
}

fn xml_node(layout: &Layout, v: NodeId, level: usize, out: &mut String) {
    let tree = layout.tree;
    let node = tree.node(v);
    let pad = INDENT.repeat(level);
    if tree.is_leaf(v) {
        let _ = writeln!(
            out,
            "{pad}<node id=\"{}\" label=\"{}\" djComp=\"{}\" />",
            v,
            escape(tree.label(v)),
            node.component
        );
        return;
    }
    let _ = writeln!(
        out,
        "{pad}<node id=\"{}\" childCount=\"{}\" alb=\"{:.20}\" heads=\"{}\" djComp=\"{}\">",
        layout.export_id[v],
        node.children.len(),
        layout.alpha(v),
        join(node.heads.iter().copied(), ", "),
        node.component
    );
    for &c in &layout.children[v] {
        xml_node(layout, c, level + 1, out);
    }
    let _ = writeln!(out, "{pad}</node>");
}

/// Label prefixes identifying the analysed project's own code; everything
/// else counts as library code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientPrefixes(pub Vec<String>);

impl ClientPrefixes {
    pub fn is_client(&self, label: &str) -> bool {
        self.0.iter().any(|p| label.starts_with(p.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Client,
    Library,
    Mixed,
}

impl Origin {
    fn as_str(self) -> &'static str {
        match self {
            Origin::Client => "client",
            Origin::Library => "library",
            Origin::Mixed => "mixed",
        }
    }

    fn join(self, other: Origin) -> Origin {
        if self == other {
            self
        } else {
            Origin::Mixed
        }
    }
}

fn origins(tree: &ClusterTree, prefixes: &ClientPrefixes) -> Vec<Option<Origin>> {
    let mut origin = vec![None; tree.node_count()];
    for v in tree.post_order(tree.fake_root()) {
        origin[v] = if tree.is_leaf(v) {
            Some(if prefixes.is_client(tree.label(v)) {
                Origin::Client
            } else {
                Origin::Library
            })
        } else {
            tree.node(v)
                .children
                .iter()
                .filter_map(|&c| origin[c])
                .reduce(Origin::join)
        };
    }
    origin
}

/// Top of a viewer document: the single forest root if there is one,
/// otherwise a synthetic `root` wrapping all of them.
fn viewer_top(tree: &ClusterTree) -> Option<NodeId> {
    match tree.roots() {
        [only] => Some(*only),
        _ => None,
    }
}

/// Generic nested-element XML for TreeViz: every node is a `node` element
/// with `name`, `size` (leaf count) and `kind` attributes.
pub fn export_treeviz(tree: &ClusterTree, prefixes: &ClientPrefixes) -> String {
    let layout = Layout::new(tree);
    let origin = origins(tree, prefixes);
    let kind = |v: NodeId| origin[v].map_or("library", Origin::as_str);
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let fake = tree.fake_root();
    let mut stack: Vec<(NodeId, usize, bool)> = Vec::new();
    match viewer_top(tree) {
        Some(top) => stack.push((top, 0, false)),
        None => {
            let _ = writeln!(
                out,
                "<node name=\"root\" size=\"{}\" kind=\"{}\">",
                tree.leaf_count(),
                kind(fake)
            );
            stack.push((fake, 0, true));
            stack.extend(layout.children[fake].iter().rev().map(|&r| (r, 1, false)));
        }
    }
    while let Some((v, level, closing)) = stack.pop() {
        let pad = INDENT.repeat(level);
        if closing {
            let _ = writeln!(out, "{pad}</node>");
        } else if tree.is_leaf(v) {
            let _ = writeln!(
                out,
                "{pad}<node name=\"{}\" size=\"1\" kind=\"{}\" />",
                escape(tree.label(v)),
                kind(v)
            );
        } else {
            let _ = writeln!(
                out,
                "{pad}<node name=\"{} @ {:.6}\" size=\"{}\" kind=\"{}\">",
                layout.export_id[v],
                layout.alpha(v),
                tree.node(v).leaf_count,
                kind(v)
            );
            stack.push((v, level, true));
            stack.extend(layout.children[v].iter().rev().map(|&c| (c, level + 1, false)));
        }
    }
    out
}

/// Level list for hyperbolic viewers: one node per line in pre-order as
/// `level<TAB>name<TAB>kind`.
pub fn export_h3(tree: &ClusterTree, prefixes: &ClientPrefixes) -> String {
    let layout = Layout::new(tree);
    let origin = origins(tree, prefixes);
    let kind = |v: NodeId| origin[v].map_or("library", Origin::as_str);
    let mut out = String::new();
    let shift = if viewer_top(tree).is_some() {
        0
    } else {
        let _ = writeln!(out, "0\troot\t{}", kind(tree.fake_root()));
        1
    };
    for &v in &layout.pre_order {
        let name = if tree.is_leaf(v) {
            tree.label(v).to_string()
        } else {
            format!("cluster{}", layout.export_id[v])
        };
        let _ = writeln!(out, "{}\t{}\t{}", layout.depth[v] + shift, name, kind(v));
    }
    out
}
