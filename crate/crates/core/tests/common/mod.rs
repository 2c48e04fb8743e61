#![allow(dead_code)]

pub mod props;

use proptest::collection::vec;
use proptest::prelude::*;

use review_diffusion::{build_graph, Channel, ObservationWindow, TemporalHypergraph, TimeInstant};

/// Raw channel description: member picks, close time, open lead, copy-previous flag.
pub type RawChannel = (Vec<usize>, i64, i64, bool);

pub fn raw_graph(max_participants: usize, max_channels: usize, max_close: i64) -> impl Strategy<Value = (usize, Vec<RawChannel>)> {
    (2..=max_participants, vec((vec(0..max_participants, 1..=4), 0..=max_close, 0..4i64, proptest::bool::weighted(0.1)), 1..=max_channels))
}

pub fn materialize(n: usize, raw: &[RawChannel]) -> TemporalHypergraph {
    let mut channels: Vec<Channel> = Vec::with_capacity(raw.len());
    let mut last_close = 0;
    for (i, (picks, closed, lead, twin)) in raw.iter().enumerate() {
        if *twin && i > 0 {
            let prev = channels[i - 1].clone();
            channels.push(Channel { id: format!("c{i:02}"), ..prev });
            continue;
        }
        let members: Vec<String> = picks.iter().map(|p| format!("u{:02}", p % n)).collect();
        channels.push(Channel::new(format!("c{i:02}"), TimeInstant(closed - lead), TimeInstant(*closed), members).unwrap());
        last_close = last_close.max(*closed);
    }
    let end = channels.iter().map(|c| c.closed.seconds()).max().unwrap() + 1;
    build_graph(channels, ObservationWindow::new(TimeInstant(0), TimeInstant(end)).unwrap()).unwrap()
}

/// Small random graphs: up to 12 participants and 15 channels, tight close-time range.
pub fn small_graph() -> impl Strategy<Value = TemporalHypergraph> {
    raw_graph(12, 15, 20).prop_map(|(n, raw)| materialize(n, &raw))
}

pub fn rebuild(graph: &TemporalHypergraph, f: impl Fn(&mut Channel)) -> TemporalHypergraph {
    let mut file = graph.to_file();
    file.channels.iter_mut().for_each(f);
    file.into_graph().unwrap()
}
