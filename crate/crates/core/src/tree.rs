//! The global cluster tree: leaves are artifacts, inner nodes are clusters
//! tagged with the alpha at which they were observed.
//!
//! Nodes live in an append-only arena. Ids `0..n` are the leaves (equal to
//! the vertex index), id `n` is the fake root whose children are the roots
//! of the exported forest. Along every leaf-to-root path alphas strictly
//! decrease; the fake root counts as minus infinity.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cut_clustering::Partition;

pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("cluster at alpha {alpha} with {size} members is not nested in the existing tree (first member {first})")]
    NestingViolation { alpha: f64, first: usize, size: usize },
    #[error("vertex {0} is not a leaf of this tree")]
    UnknownVertex(usize),
    #[error("tree invariant broken: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// `None` on leaves and on the fake root.
    pub alpha: Option<f64>,
    pub heads: Vec<usize>,
    pub component: usize,
    pub leaf_count: usize,
    /// Created by perfectization rather than observed by a probe.
    pub synthetic: bool,
    /// Children already re-nested by perfectization.
    pub perfected: bool,
}

impl ClusterNode {
    fn new(parent: Option<NodeId>, alpha: Option<f64>, component: usize) -> Self {
        ClusterNode {
            parent,
            children: Vec::new(),
            alpha,
            heads: Vec::new(),
            component,
            leaf_count: 0,
            synthetic: false,
            perfected: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    labels: Vec<String>,
    nodes: Vec<ClusterNode>,
    component_count: usize,
    #[serde(skip)]
    touches: u64,
}

impl ClusterTree {
    /// Every leaf directly under the fake root. `component[v]` is the
    /// disjoint component of vertex `v`.
    pub fn new(labels: Vec<String>, component: &[usize]) -> Self {
        let n = labels.len();
        assert_eq!(component.len(), n);
        let mut nodes: Vec<ClusterNode> = (0..n)
            .map(|v| {
                let mut leaf = ClusterNode::new(Some(n), None, component[v]);
                leaf.leaf_count = 1;
                leaf
            })
            .collect();
        let mut root = ClusterNode::new(None, None, usize::MAX);
        root.children = (0..n).collect();
        root.leaf_count = n;
        nodes.push(root);
        ClusterTree {
            labels,
            nodes,
            component_count: component.iter().map(|&c| c + 1).max().unwrap_or(0),
            touches: 0,
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, leaf: NodeId) -> &str {
        &self.labels[leaf]
    }

    pub fn fake_root(&self) -> NodeId {
        self.labels.len()
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    pub fn node(&self, id: NodeId) -> &ClusterNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        id < self.labels.len()
    }

    /// Inner nodes, excluding the fake root.
    pub fn inner_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.labels.len() + 1..self.nodes.len()
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.nodes[self.fake_root()].children
    }

    /// Nodes visited while locating insertion points, over the tree's lifetime.
    pub fn touches(&self) -> u64 {
        self.touches
    }

    pub fn leaves_under(&self, id: NodeId) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[id].leaf_count);
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            if self.is_leaf(v) {
                out.push(v);
            } else {
                stack.extend(self.nodes[v].children.iter().rev());
            }
        }
        out.sort_unstable();
        out
    }

    /// Distance from the forest roots; roots have depth 0 and the fake root has none.
    pub fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut v = id;
        while let Some(p) = self.nodes[v].parent {
            if p == self.fake_root() {
                return d;
            }
            d += 1;
            v = p;
        }
        0
    }

    /// Heights of all nodes; leaves are 0.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![0; self.nodes.len()];
        for v in self.post_order(self.fake_root()) {
            h[v] = self.nodes[v].children.iter().map(|&c| h[c] + 1).max().unwrap_or(0);
        }
        h
    }

    /// Node count of every subtree, the node itself included.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut s = vec![1; self.nodes.len()];
        for v in self.post_order(self.fake_root()) {
            s[v] = 1 + self.nodes[v].children.iter().map(|&c| s[c]).sum::<usize>();
        }
        s
    }

    pub fn post_order(&self, from: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![(from, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                out.push(v);
            } else {
                stack.push((v, true));
                for &c in self.nodes[v].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    fn alpha_or_floor(&self, id: NodeId) -> f64 {
        self.nodes[id].alpha.unwrap_or(f64::NEG_INFINITY)
    }

    /// Merges every non-singleton cluster of a partition whose vertex ids
    /// are leaf ids of this tree.
    pub fn merge_partition(&mut self, partition: &Partition) -> Result<(), TreeError> {
        for (members, heads) in partition.clusters.iter().zip(&partition.heads) {
            self.merge_cluster(members, partition.alpha, heads)?;
        }
        Ok(())
    }

    /// Inserts one cluster observed at `alpha`.
    ///
    /// A leaf set that is already present keeps the largest alpha it was
    /// observed at, which makes the result independent of merge order.
    pub fn merge_cluster(&mut self, members: &[usize], alpha: f64, heads: &[usize]) -> Result<(), TreeError> {
        if members.len() < 2 {
            return Ok(());
        }
        let n = self.labels.len();
        if let Some(&bad) = members.iter().find(|&&m| m >= n) {
            return Err(TreeError::UnknownVertex(bad));
        }
        let violation = || TreeError::NestingViolation {
            alpha,
            first: members[0],
            size: members.len(),
        };

        let mut below = members[0];
        let mut parent = self.nodes[below].parent.expect("leaf without parent");
        while self.alpha_or_floor(parent) >= alpha {
            self.touches += 1;
            below = parent;
            parent = self.nodes[parent].parent.expect("inner node without parent");
        }
        self.touches += 1;
        if self.nodes[below].alpha == Some(alpha) {
            return if self.nodes[below].leaf_count == members.len() {
                Ok(())
            } else {
                Err(violation())
            };
        }

        // children of `parent` holding members, found by climbing from each member
        let mut top_of: HashMap<NodeId, NodeId> = HashMap::new();
        let mut picked: Vec<NodeId> = Vec::new();
        let mut path = Vec::new();
        for &m in members {
            path.clear();
            let mut v = m;
            let top = loop {
                if let Some(&t) = top_of.get(&v) {
                    break t;
                }
                path.push(v);
                self.touches += 1;
                match self.nodes[v].parent {
                    Some(p) if p == parent => {
                        picked.push(v);
                        break v;
                    }
                    Some(p) => v = p,
                    None => return Err(violation()),
                }
            };
            for &v in &path {
                top_of.insert(v, top);
            }
        }
        let covered: usize = picked.iter().map(|&x| self.nodes[x].leaf_count).sum();
        if covered != members.len() {
            return Err(violation());
        }
        if picked
            .iter()
            .any(|&x| !self.is_leaf(x) && self.alpha_or_floor(x) <= alpha)
        {
            return Err(violation());
        }

        if picked.len() == 1 {
            // same leaf set already present at a higher alpha
            return Ok(());
        }
        if picked.len() == self.nodes[parent].children.len() && parent != self.fake_root() {
            let node = &mut self.nodes[parent];
            node.alpha = Some(alpha);
            node.heads = heads.to_vec();
            return Ok(());
        }
        let component = self.nodes[members[0]].component;
        let id = self.nodes.len();
        let mut node = ClusterNode::new(Some(parent), Some(alpha), component);
        node.heads = heads.to_vec();
        node.leaf_count = members.len();
        picked.sort_unstable();
        node.children = picked.clone();
        self.nodes.push(node);
        for &x in &picked {
            self.nodes[x].parent = Some(id);
        }
        let siblings = &mut self.nodes[parent].children;
        siblings.retain(|c| picked.binary_search(c).is_err());
        siblings.push(id);
        Ok(())
    }

    /// Appends an inner node under `parent` and moves `children` into it.
    pub fn adopt(&mut self, parent: NodeId, children: &[NodeId], alpha: f64, synthetic: bool) -> NodeId {
        let id = self.nodes.len();
        let component = self.nodes[children[0]].component;
        let mut node = ClusterNode::new(Some(parent), Some(alpha), component);
        node.synthetic = synthetic;
        node.leaf_count = children.iter().map(|&c| self.nodes[c].leaf_count).sum();
        node.children = children.to_vec();
        self.nodes.push(node);
        for &c in children {
            self.nodes[c].parent = Some(id);
        }
        self.nodes[parent].children.retain(|c| !children.contains(c));
        self.nodes[parent].children.push(id);
        id
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut ClusterNode {
        &mut self.nodes[id]
    }

    /// Order-free description: leaf set and alpha bits of every inner node.
    pub fn canonical(&self) -> BTreeSet<(Vec<usize>, u64)> {
        self.inner_nodes()
            .map(|v| (self.leaves_under(v), self.nodes[v].alpha.unwrap_or(f64::NAN).to_bits()))
            .collect()
    }

    /// Checks parent/child consistency, leaf counts and alpha monotonicity.
    pub fn validate(&self) -> Result<(), TreeError> {
        let corrupt = |m: String| Err(TreeError::Corrupt(m));
        let root = self.fake_root();
        if self.nodes[root].parent.is_some() {
            return corrupt("fake root has a parent".into());
        }
        let order = self.post_order(root);
        if order.len() != self.nodes.len() {
            return corrupt(format!("{} nodes reachable of {}", order.len(), self.nodes.len()));
        }
        for v in order {
            let node = &self.nodes[v];
            if self.is_leaf(v) {
                if !node.children.is_empty() || node.leaf_count != 1 {
                    return corrupt(format!("leaf {v} malformed"));
                }
            } else if v != root {
                if node.alpha.is_none() || node.children.len() < 2 {
                    return corrupt(format!("inner node {v} lacks alpha or has < 2 children"));
                }
                if self.alpha_or_floor(node.parent.unwrap()) >= node.alpha.unwrap() {
                    return corrupt(format!("alpha does not increase into node {v}"));
                }
            }
            let mut count = usize::from(self.is_leaf(v));
            for &c in &node.children {
                if self.nodes[c].parent != Some(v) {
                    return corrupt(format!("child {c} of {v} points elsewhere"));
                }
                count += self.nodes[c].leaf_count;
            }
            if count != node.leaf_count {
                return corrupt(format!("leaf count of {v} is stale"));
            }
        }
        Ok(())
    }
}

pub const TREE_FORMAT: &str = "archclust-tree";
pub const TREE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TreeFileError {
    #[error("unsupported tree file: {format} v{version}")]
    Format { format: String, version: u32 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct TreeFile<T> {
    format: String,
    version: u32,
    tree: T,
}

impl ClusterTree {
    pub fn to_json(&self) -> Result<String, TreeFileError> {
        Ok(serde_json::to_string(&TreeFile {
            format: TREE_FORMAT.into(),
            version: TREE_VERSION,
            tree: self,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self, TreeFileError> {
        let file: TreeFile<ClusterTree> = serde_json::from_str(text)?;
        if file.format != TREE_FORMAT || file.version != TREE_VERSION {
            return Err(TreeFileError::Format {
                format: file.format,
                version: file.version,
            });
        }
        file.tree.validate().map_err(|e| TreeFileError::Format {
            format: format!("{} ({e})", file.format),
            version: file.version,
        })?;
        Ok(file.tree)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), TreeFileError> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, TreeFileError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
