//! Exhaustive journey enumeration, used as ground truth for the engine on small graphs.
//!
//! Works directly on the channel list and participant sets: no successor
//! structure, no pruning besides the hop cap.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::Journey;
use crate::model::{Channel, Duration, ParticipantId, TemporalHypergraph, TimeInstant};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("hop cap must be at least 1")]
    InvalidHopCap,
    #[error("unknown participant {0:?}")]
    UnknownParticipant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleMinima {
    pub min_hops: u32,
    pub min_duration: Duration,
    pub earliest_arrival: TimeInstant,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub source: ParticipantId,
    /// Every enumerated journey from the source.
    pub journeys: Vec<Journey>,
    /// Per target, indices into `journeys` of those ending in a channel containing it.
    pub by_target: BTreeMap<ParticipantId, Vec<usize>>,
    pub minima: BTreeMap<ParticipantId, OracleMinima>,
    last_members: Vec<Vec<ParticipantId>>,
}

impl OracleResult {
    /// Earliest arrival over enumerated journeys departing at or after `from`.
    pub fn foremost_from(&self, from: TimeInstant) -> BTreeMap<ParticipantId, TimeInstant> {
        let mut out: BTreeMap<ParticipantId, TimeInstant> = BTreeMap::new();
        for (j, members) in self.journeys.iter().zip(&self.last_members) {
            if j.departure < from {
                continue;
            }
            for p in members.iter().filter(|&p| *p != self.source) {
                out.entry(p.clone()).and_modify(|t| *t = (*t).min(j.arrival)).or_insert(j.arrival);
            }
        }
        out
    }

    /// Horizon size at each instant from foremost arrivals departing at `from`.
    pub fn growth(&self, from: TimeInstant, grid: &[TimeInstant]) -> Vec<(TimeInstant, usize)> {
        let arrivals = self.foremost_from(from);
        grid.iter().map(|&t| (t, arrivals.values().filter(|&&a| a <= t).count())).collect()
    }
}

fn intersects(a: &Channel, b: &Channel) -> bool {
    a.participants.iter().any(|p| b.participants.contains(p))
}

/// Enumerates every journey from `source` with at most `hop_cap` channels.
///
/// With `hop_cap` at least the channel count the enumeration is exhaustive:
/// close times strictly increase, so no journey repeats a channel.
pub fn enumerate_journeys(graph: &TemporalHypergraph, source: &str, hop_cap: usize) -> Result<OracleResult, OracleError> {
    if hop_cap == 0 {
        return Err(OracleError::InvalidHopCap);
    }
    let source = graph
        .participants()
        .iter()
        .find(|p| p.as_str() == source)
        .cloned()
        .ok_or_else(|| OracleError::UnknownParticipant(source.to_owned()))?;
    let channels = graph.channels();

    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<Vec<usize>> = channels
        .iter()
        .enumerate()
        .filter(|(_, c)| c.participants.contains(&source))
        .map(|(i, _)| vec![i])
        .collect();
    while let Some(path) = stack.pop() {
        let last = &channels[*path.last().unwrap()];
        if path.len() < hop_cap {
            for (i, next) in channels.iter().enumerate() {
                if next.closed > last.closed && intersects(last, next) {
                    let mut longer = path.clone();
                    longer.push(i);
                    stack.push(longer);
                }
            }
        }
        paths.push(path);
    }
    paths.sort();

    let mut journeys = Vec::with_capacity(paths.len());
    let mut last_members = Vec::with_capacity(paths.len());
    let mut by_target: BTreeMap<ParticipantId, Vec<usize>> = BTreeMap::new();
    let mut minima: BTreeMap<ParticipantId, OracleMinima> = BTreeMap::new();
    for (ji, path) in paths.iter().enumerate() {
        let first = &channels[path[0]];
        let last = &channels[*path.last().unwrap()];
        let journey = Journey {
            hops: path.iter().map(|&i| channels[i].id.clone()).collect(),
            departure: first.closed,
            arrival: last.closed,
        };
        for target in last.participants.iter().filter(|&p| *p != source) {
            by_target.entry(target.clone()).or_default().push(ji);
            let hops = path.len() as u32;
            let duration = journey.arrival - journey.departure;
            minima
                .entry(target.clone())
                .and_modify(|m| {
                    m.min_hops = m.min_hops.min(hops);
                    m.min_duration = m.min_duration.min(duration);
                    m.earliest_arrival = m.earliest_arrival.min(journey.arrival);
                })
                .or_insert(OracleMinima { min_hops: hops, min_duration: duration, earliest_arrival: journey.arrival });
        }
        last_members.push(last.participants.iter().cloned().collect());
        journeys.push(journey);
    }
    Ok(OracleResult { source, journeys, by_target, minima, last_members })
}
