//! Upper bound of information diffusion in code-review communication networks.
//!
//! A code review is a channel (hyperedge) joining its human participants while
//! it is open. Information can travel along any time-respecting sequence of
//! channels, so the reachable set (horizon) and the minimal hop count and
//! duration between participants bound how far and how fast knowledge can
//! spread through review.
//!
//! The pipeline is [`ingest`] (event logs to graph) then [`engine`] (per-source
//! minima) then [`metrics`] (ECDFs, percentile tables, growth bands).

pub mod cli;
pub mod engine;
pub mod fixtures;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod selfcheck;
pub mod synthetic;

pub use engine::{
    all_sources_summary, build_successor_dag, fastest_distances, foremost_arrivals, horizon, horizon_growth, shortest_distances,
    shortest_witness, summarize_source, DistanceSummary, EngineError, Journey, SuccessorDag, SummaryStream, TargetDistance,
};
pub use model::{
    build_graph, classify_bound, BoundClass, Channel, GraphFile, ModelError, ObservationWindow, ParticipantId, TemporalHypergraph,
    TimeInstant,
};
