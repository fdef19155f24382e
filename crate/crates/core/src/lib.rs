//! Hierarchical cut clustering of software dependency graphs.

pub mod cut_clustering;
pub mod dsu;
pub mod export;
pub mod graph;
pub mod maxflow;
pub mod metrics;
pub mod normalize;
pub mod perfectize;
pub mod relations;
pub mod search;
pub mod tree;

pub use cut_clustering::{basic_cut_cluster, cut_cluster_probe, ClusterError, Partition};
pub use export::{export_h3, export_text, export_treeviz, export_xml, ClientPrefixes, TextStyle};
pub use graph::{Edge, UndirectedGraph};
pub use maxflow::{FlowNetwork, MinCut};
pub use metrics::{ubiquity_stats, PrefixStats};
pub use normalize::{normalize, Leverage, LiftOrder, NormalizationConfig};
pub use perfectize::{perfectize, PerfectizeConfig, PerfectizeError, RootHeuristic};
pub use relations::{
    load_relations, merge_relation_kinds, parse_relations, ArtifactId, ArtifactLevel, KindWeights, RelationArc,
    RelationGraph, RelationKind, WeightedRelationGraph,
};
pub use search::{search, Budget, SearchConfig, SearchError, SearchOutcome, SearchState};
pub use tree::{ClusterTree, NodeId, TreeError, TreeFileError};
