//! Exact k-flexible aggregate nearest neighbor (k-FANN) search on road networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`roadnet`] loads DIMACS road graphs, cleans them and exposes planar geometry.
//! - [`oracle`] answers exact shortest-path distance queries (plain Dijkstra or a
//!   2-hop hub labeling).
//! - [`agg`] is the flexible aggregate kernel: best `m`-subset of per-query distances.
//! - [`mtree`] is an M-tree over the POI set under the network metric.
//! - [`search`] is the best-first M-tree k-FANN search with two-level pruning.
//! - [`baseline`] holds the brute-force ground truth and the IER-style R-tree competitor.

pub mod agg;
pub mod baseline;
mod binio;
mod error;
pub mod mtree;
pub mod oracle;
pub mod roadnet;
pub mod search;

pub use agg::{flexible_agg, flexible_agg_bruteforce, AggResult, AggregateKind, FlexSpec};
pub use error::{Error, Result};
pub use mtree::{MetricTree, MetricTreeBuilder};
pub use oracle::{DijkstraOracle, DistanceOracle, HubLabeling, OrderPolicy};
pub use roadnet::RoadNetwork;
pub use search::{fann_search, fann_search_with, Candidate, PoiSet, QuerySpec, ResultSet, SearchOptions, SearchStats};

/// Dense vertex index, `0..n`.
pub type VertexId = u32;

/// Shortest-path distance in edge-weight units.
pub type Dist = u64;

/// Sentinel for "no bound yet".
pub const INFINITE: Dist = Dist::MAX;
