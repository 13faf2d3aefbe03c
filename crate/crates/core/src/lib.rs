//! Urban multiplex networks: a zone-level, edge-labeled multigraph with one
//! layer per transit line, the resilience metrics defined over it, targeted
//! percolation, dataset ingestion and what-if scenarios.

pub mod dataset;
pub mod error;
pub mod fixtures;
pub mod ingest;
pub mod metrics;
pub mod network;
pub mod percolation;
pub mod scenario;

pub use dataset::{Dataset, PairFlow, StopRef};
pub use error::{Error, Result};
pub use metrics::{
    HeelScore, HeelWitness, Histogram, MetricConfig, MetricEngine, MetricSnapshot, PairMetrics,
    WeightMode,
};
pub use network::{
    LabeledEdge, LayerId, ReachabilitySet, SimpleGraph, UrbanMultiplexNetwork, ZoneId,
};
pub use percolation::{
    first_disruption, percolate, rank_edges, PercolationCurve, Recompute, RemovalOrder,
    RemovalStrategy,
};
pub use scenario::{diff, Mutation, ScenarioBase, ScenarioLog, ScenarioState, SnapshotDiff};
