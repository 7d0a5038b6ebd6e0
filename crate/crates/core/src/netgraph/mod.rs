//! Time-varying topology and the graph algorithms the planners run on it.

pub mod flow;
pub mod paths;
pub mod snapshot;

pub use flow::{
    build_flow_network, build_group_flow_network, FlowEdge, FlowNetwork, FlowResult, FlowVertex, GroupFlowNetwork,
};
pub use paths::{all_pairs_shortest, floyd_warshall, PathMatrix};
pub use snapshot::{snapshot, EdgeKind, GsPsEdge, IslEdge, LinkConfig, SglEdge, SnapshotSource, StaticSnapshots, Topology, TopologySnapshot};
