//! Engine-versus-oracle comparison on bundled fixtures.

use std::collections::BTreeMap;

use crate::engine::{build_successor_dag, fastest_distances, foremost_arrivals, shortest_distances, summarize_source, DistanceSummary};
use crate::fixtures::Fixture;
use crate::model::{TemporalHypergraph, TimeInstant};
use crate::oracle::enumerate_journeys;

/// Per-source evaluator under test.
pub type SourceEvaluator<'a> = &'a (dyn Fn(&TemporalHypergraph, &str) -> DistanceSummary + Sync);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub fixture: String,
    pub sources: usize,
    /// First mismatch found, if any.
    pub mismatch: Option<String>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

pub fn default_evaluator(graph: &TemporalHypergraph, source: &str) -> DistanceSummary {
    summarize_source(graph, source).expect("source from the graph")
}

/// Compares every distance route against exhaustive enumeration for one source.
pub fn compare_source(graph: &TemporalHypergraph, source: &str, summary: &DistanceSummary) -> Result<(), String> {
    let oracle = enumerate_journeys(graph, source, graph.channel_count().max(1)).map_err(|e| e.to_string())?;
    let expected_hops: BTreeMap<_, _> = oracle.minima.iter().map(|(p, m)| (p.clone(), m.min_hops)).collect();
    let expected_durations: BTreeMap<_, _> = oracle.minima.iter().map(|(p, m)| (p.clone(), m.min_duration)).collect();
    let expected_arrivals: BTreeMap<_, _> = oracle.minima.iter().map(|(p, m)| (p.clone(), m.earliest_arrival)).collect();

    let got_hops: BTreeMap<_, _> = summary.targets.iter().map(|(p, d)| (p.clone(), d.min_hops)).collect();
    let got_durations: BTreeMap<_, _> = summary.targets.iter().map(|(p, d)| (p.clone(), d.min_duration)).collect();
    let got_arrivals: BTreeMap<_, _> = summary.targets.iter().map(|(p, d)| (p.clone(), d.earliest_arrival)).collect();
    let check = |what: &str, ok: bool| if ok { Ok(()) } else { Err(format!("source {source}: {what} differs from oracle")) };
    check("summary hops", got_hops == expected_hops)?;
    check("summary durations", got_durations == expected_durations)?;
    check("summary arrivals", got_arrivals == expected_arrivals)?;
    check("horizon size", summary.horizon_size == expected_hops.len())?;

    let dag = build_successor_dag(graph);
    check("successor-dag hops", shortest_distances(graph, &dag, source).ok() == Some(expected_hops))?;
    check("successor-dag durations", fastest_distances(graph, &dag, source).ok() == Some(expected_durations))?;
    check("successor-dag arrivals", foremost_arrivals(graph, &dag, source, graph.window().start()).ok() == Some(expected_arrivals))?;
    // a later departure bound exercises the start-channel filter
    let mid = TimeInstant(graph.window().start().seconds() + graph.window().length() / 2);
    check("successor-dag foremost from mid-window", foremost_arrivals(graph, &dag, source, mid).ok() == Some(oracle.foremost_from(mid)))?;
    Ok(())
}

pub fn check_fixture(fixture: &Fixture, evaluator: SourceEvaluator<'_>) -> Verdict {
    let graph = &fixture.graph;
    let mismatch = graph
        .participants()
        .iter()
        .find_map(|p| compare_source(graph, p.as_str(), &evaluator(graph, p.as_str())).err());
    Verdict { fixture: fixture.name.clone(), sources: graph.participant_count(), mismatch }
}

/// `None` when there is nothing to check.
pub fn run(fixtures: &[Fixture], evaluator: SourceEvaluator<'_>) -> Option<Vec<Verdict>> {
    if fixtures.is_empty() {
        return None;
    }
    Some(fixtures.iter().map(|f| check_fixture(f, evaluator)).collect())
}
