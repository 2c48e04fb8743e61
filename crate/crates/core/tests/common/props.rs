//! Property bodies shared by the proptest suite and the acceptance runner.

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::TestCaseError;

use super::rebuild;
use review_diffusion::ingest::anonymize;
use review_diffusion::metrics::{distance_ecdfs, normalized_ranges};
use review_diffusion::oracle::enumerate_journeys;
use review_diffusion::*;

pub type PropResult = Result<(), TestCaseError>;

pub fn summaries(g: &TemporalHypergraph) -> Vec<DistanceSummary> {
    SummaryStream::new(g, Some(1)).collect()
}

pub fn reachable_sets_equal(g: &TemporalHypergraph) -> PropResult {
    let dag = build_successor_dag(g);
    for p in g.participants() {
        let hops = shortest_distances(g, &dag, p.as_str()).unwrap();
        let durations = fastest_distances(g, &dag, p.as_str()).unwrap();
        prop_assert!(hops.keys().eq(durations.keys()));
        prop_assert!(!hops.contains_key(p));
        for (&h, &d) in hops.values().zip(durations.values()) {
            prop_assert!(h >= 1 && h as usize <= g.channel_count());
            prop_assert!(d >= 0 && d <= g.window().length());
        }
    }
    Ok(())
}

pub fn growth_monotone(g: &TemporalHypergraph, step: i64) -> PropResult {
    let dag = build_successor_dag(g);
    let w = *g.window();
    let mut grid: Vec<TimeInstant> = (0..).map(|k| w.start() + k * step).take_while(|&t| t < w.end()).collect();
    grid.push(w.end());
    for p in g.participants() {
        let growth = horizon_growth(g, &dag, p.as_str(), &grid).unwrap();
        prop_assert!(growth.windows(2).all(|w| w[0].1 <= w[1].1));
        let size = horizon(g, &dag, p.as_str()).unwrap().len();
        prop_assert_eq!(growth.last().unwrap().1, size);
        let summary = summarize_source(g, p.as_str()).unwrap();
        prop_assert_eq!(summary.growth(&grid), growth);
    }
    Ok(())
}

pub fn time_shift(g: &TemporalHypergraph, offset: i64) -> PropResult {
    let shifted_channels: Vec<Channel> = g
        .to_file()
        .channels
        .into_iter()
        .map(|c| Channel { opened: c.opened + offset, closed: c.closed + offset, ..c })
        .collect();
    let shifted = build_graph(shifted_channels, g.window().shifted(offset)).unwrap();
    for (a, b) in summaries(g).iter().zip(summaries(&shifted).iter()) {
        prop_assert_eq!(&a.source, &b.source);
        prop_assert_eq!(a.targets.len(), b.targets.len());
        for ((pa, da), (pb, db)) in a.targets.iter().zip(&b.targets) {
            prop_assert_eq!(pa, pb);
            prop_assert_eq!(da.min_hops, db.min_hops);
            prop_assert_eq!(da.min_duration, db.min_duration);
            prop_assert_eq!(da.earliest_arrival + offset, db.earliest_arrival);
        }
    }
    Ok(())
}

pub fn relabeling(g: &TemporalHypergraph, salt: &str) -> PropResult {
    let relabel = |p: &ParticipantId| ParticipantId::new(anonymize(salt, p.as_str())).unwrap();
    let renamed = rebuild(g, |c| c.participants = c.participants.iter().map(relabel).collect());
    let before = summaries(g);
    let after: BTreeMap<ParticipantId, DistanceSummary> = summaries(&renamed).into_iter().map(|s| (s.source.clone(), s)).collect();
    for s in &before {
        let t = &after[&relabel(&s.source)];
        let mapped: BTreeMap<ParticipantId, TargetDistance> = s.targets.iter().map(|(p, d)| (relabel(p), *d)).collect();
        prop_assert_eq!(&mapped, &t.targets);
    }
    let n = g.participant_count();
    prop_assert_eq!(normalized_ranges(&before, n).unwrap(), normalized_ranges(after.values(), n).unwrap());
    if before.iter().any(|s| s.horizon_size > 0) {
        prop_assert_eq!(distance_ecdfs(&before).unwrap(), distance_ecdfs(after.values()).unwrap());
    }
    Ok(())
}

pub fn tie_sterility(g: &TemporalHypergraph, pick: Index) -> PropResult {
    let dag = build_successor_dag(g);
    let arcs: Vec<_> = dag.arcs().collect();
    if arcs.is_empty() {
        return Ok(());
    }
    let (a, b) = arcs[pick.index(arcs.len())];
    let (a_id, b_id) = (g.channel(a).id.clone(), g.channel(b).id.clone());
    let close = g.channel(a).closed;
    let tied = rebuild(g, |c| {
        if c.id == b_id {
            c.closed = close;
            c.opened = c.opened.min(close);
        }
    });
    prop_assert!(!build_successor_dag(&tied).has_arc(a, b));
    for p in tied.participants() {
        let oracle = enumerate_journeys(&tied, p.as_str(), tied.channel_count()).unwrap();
        for j in &oracle.journeys {
            let chained = j.hops.windows(2).any(|w| (w[0] == a_id && w[1] == b_id) || (w[0] == b_id && w[1] == a_id));
            prop_assert!(!chained, "{:?}", j.hops);
        }
    }
    Ok(())
}

pub fn bound_partition(intervals: &[(i64, i64)], start: i64, len: i64) -> PropResult {
    let w = ObservationWindow::new(TimeInstant(start), TimeInstant(start + len)).unwrap();
    let mut counts = BTreeMap::new();
    let mut overlapping = 0;
    let mut channels = Vec::new();
    for (i, &(opened, span)) in intervals.iter().enumerate() {
        let c = Channel::new(format!("c{i}"), TimeInstant(opened), TimeInstant(opened + span), ["p"]).unwrap();
        match classify_bound(&c, &w) {
            Ok(class) => {
                overlapping += 1;
                *counts.entry(class).or_insert(0) += 1;
                let expected = match (c.opened >= w.start(), c.closed <= w.end()) {
                    (true, true) => BoundClass::Bounded,
                    (true, false) => BoundClass::LeftBounded,
                    (false, true) => BoundClass::RightBounded,
                    (false, false) => BoundClass::Unbounded,
                };
                prop_assert_eq!(class, expected);
            }
            Err(_) => prop_assert!(c.closed < w.start() || c.opened > w.end()),
        }
        channels.push(c);
    }
    prop_assert_eq!(counts.values().sum::<usize>(), overlapping);
    if let Ok(g) = build_graph(channels, w) {
        let histogram = g.bound_histogram();
        prop_assert_eq!(histogram.iter().map(|&(_, c)| c).sum::<usize>(), g.channel_count());
        for (class, count) in histogram {
            prop_assert_eq!(counts.get(&class).copied().unwrap_or(0), count);
        }
    } else {
        prop_assert_eq!(overlapping, 0);
    }
    Ok(())
}

pub fn intervals() -> impl Strategy<Value = (Vec<(i64, i64)>, i64, i64)> {
    (proptest::collection::vec((-50i64..150, 0i64..120), 1..40), 0i64..50, 1i64..100)
}
