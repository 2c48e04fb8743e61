//! Time-respecting reachability over a [`TemporalHypergraph`].
//!
//! Information leaves a channel when it closes and can be carried into any
//! channel that shares a participant and closes strictly later. Arrival in a
//! channel is therefore its close instant, whatever path led there, and a
//! journey departs at the close of its first channel.
//!
//! Two independent routes compute the same quantities:
//!
//! * the [`SuccessorDag`] functions ([`shortest_distances`], [`fastest_distances`],
//!   [`foremost_arrivals`]) traverse explicit channel-to-channel arcs, breadth-first
//!   for hops and one reachability sweep per start channel for durations;
//! * [`summarize_source`] and [`all_sources_summary`] make a single pass over the
//!   channels in close order per source, keeping per-participant aggregates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::model::{ChannelIndex, Duration, ModelError, ParticipantId, ParticipantIndex, TemporalHypergraph, TimeInstant};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("time grid is empty")]
    EmptyGrid,
    #[error("time grid must be strictly ascending and inside the observation window")]
    InvalidGrid,
    #[error("invalid journey: {0}")]
    InvalidJourney(String),
}

/// A time-respecting walk of channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Journey {
    pub hops: Vec<String>,
    pub departure: TimeInstant,
    pub arrival: TimeInstant,
}

impl Journey {
    /// Builds a journey from channel indices, checking the walk property and
    /// strictly increasing close times.
    pub fn from_channels(graph: &TemporalHypergraph, channels: &[ChannelIndex]) -> Result<Self, EngineError> {
        let (&first, &last) = match (channels.first(), channels.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(EngineError::InvalidJourney("empty".into())),
        };
        for pair in channels.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if graph.closed_at(b) <= graph.closed_at(a) {
                return Err(EngineError::InvalidJourney(format!(
                    "{} does not close after {}",
                    graph.channel(b).id,
                    graph.channel(a).id
                )));
            }
            if !shares_participant(graph.members(a), graph.members(b)) {
                return Err(EngineError::InvalidJourney(format!(
                    "{} and {} share no participant",
                    graph.channel(a).id,
                    graph.channel(b).id
                )));
            }
        }
        Ok(Self {
            hops: channels.iter().map(|&c| graph.channel(c).id.clone()).collect(),
            departure: graph.closed_at(first),
            arrival: graph.closed_at(last),
        })
    }

    pub fn hop_count(&self) -> usize {
        self.hops.len()
    }

    pub fn duration(&self) -> Duration {
        self.arrival - self.departure
    }
}

/// Both slices ascending.
fn shares_participant(a: &[ParticipantIndex], b: &[ParticipantIndex]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Channel-level successor relation: `e -> f` iff they share a participant and
/// `f` closes strictly after `e`.
///
/// A follow-on channel only needs to be active at some instant after the
/// predecessor's close. Since it is active up to its own close, this reduces to
/// comparing close times; opening times play no role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessorDag {
    offsets: Vec<usize>,
    arcs: Vec<ChannelIndex>,
}

pub fn build_successor_dag(graph: &TemporalHypergraph) -> SuccessorDag {
    let m = graph.channel_count();
    let mut offsets = Vec::with_capacity(m + 1);
    let mut arcs = Vec::new();
    let mut stamp = vec![u32::MAX; m];
    offsets.push(0);
    for e in 0..m as ChannelIndex {
        let closed = graph.closed_at(e);
        let start = arcs.len();
        for &p in graph.members(e) {
            let incident = graph.incidence(p);
            let first_later = incident.partition_point(|&c| graph.closed_at(c) <= closed);
            for &f in &incident[first_later..] {
                if stamp[f as usize] != e {
                    stamp[f as usize] = e;
                    arcs.push(f);
                }
            }
        }
        arcs[start..].sort_unstable();
        offsets.push(arcs.len());
    }
    SuccessorDag { offsets, arcs }
}

impl SuccessorDag {
    pub fn successors(&self, e: ChannelIndex) -> &[ChannelIndex] {
        &self.arcs[self.offsets[e as usize]..self.offsets[e as usize + 1]]
    }

    pub fn channel_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_arc(&self, from: ChannelIndex, to: ChannelIndex) -> bool {
        self.successors(from).binary_search(&to).is_ok()
    }

    /// All arcs as `(from, to)` pairs, ordered.
    pub fn arcs(&self) -> impl Iterator<Item = (ChannelIndex, ChannelIndex)> + '_ {
        (0..self.channel_count() as ChannelIndex).flat_map(move |e| self.successors(e).iter().map(move |&f| (e, f)))
    }
}

/// Minimum hop count per channel from `source`'s channels; `u32::MAX` if unreachable.
fn channel_hops(graph: &TemporalHypergraph, dag: &SuccessorDag, source: ParticipantIndex) -> Vec<u32> {
    let mut hops = vec![u32::MAX; graph.channel_count()];
    let mut queue = VecDeque::new();
    for &e in graph.incidence(source) {
        hops[e as usize] = 1;
        queue.push_back(e);
    }
    while let Some(e) = queue.pop_front() {
        let next = hops[e as usize] + 1;
        for &f in dag.successors(e) {
            if hops[f as usize] == u32::MAX {
                hops[f as usize] = next;
                queue.push_back(f);
            }
        }
    }
    hops
}

/// Channels reachable from any of `starts`, including the starts themselves.
fn reachable_channels(dag: &SuccessorDag, starts: impl IntoIterator<Item = ChannelIndex>) -> Vec<bool> {
    let mut seen = vec![false; dag.channel_count()];
    let mut stack: Vec<ChannelIndex> = Vec::new();
    for s in starts {
        if !seen[s as usize] {
            seen[s as usize] = true;
            stack.push(s);
        }
    }
    while let Some(e) = stack.pop() {
        for &f in dag.successors(e) {
            if !seen[f as usize] {
                seen[f as usize] = true;
                stack.push(f);
            }
        }
    }
    seen
}

fn collect_targets<T: Copy>(
    graph: &TemporalHypergraph,
    source: ParticipantIndex,
    per_participant: &[Option<T>],
) -> BTreeMap<ParticipantId, T> {
    per_participant
        .iter()
        .enumerate()
        .filter(|&(p, v)| p as ParticipantIndex != source && v.is_some())
        .map(|(p, v)| (graph.participant(p as ParticipantIndex).clone(), v.unwrap()))
        .collect()
}

/// Topological distance: fewest channels over all journeys from `source`.
pub fn shortest_distances(
    graph: &TemporalHypergraph,
    dag: &SuccessorDag,
    source: &str,
) -> Result<BTreeMap<ParticipantId, u32>, EngineError> {
    let s = graph.index_of(source)?;
    let hops = channel_hops(graph, dag, s);
    let mut best: Vec<Option<u32>> = vec![None; graph.participant_count()];
    for (e, &h) in hops.iter().enumerate() {
        if h == u32::MAX {
            continue;
        }
        for &p in graph.members(e as ChannelIndex) {
            let slot = &mut best[p as usize];
            *slot = Some(slot.map_or(h, |b| b.min(h)));
        }
    }
    Ok(collect_targets(graph, s, &best))
}

/// Temporal distance: least `arrival - departure` over all journeys from `source`.
pub fn fastest_distances(
    graph: &TemporalHypergraph,
    dag: &SuccessorDag,
    source: &str,
) -> Result<BTreeMap<ParticipantId, Duration>, EngineError> {
    let s = graph.index_of(source)?;
    let mut best: Vec<Option<Duration>> = vec![None; graph.participant_count()];
    for &start in graph.incidence(s) {
        let departure = graph.closed_at(start);
        let reached = reachable_channels(dag, [start]);
        for (e, _) in reached.iter().enumerate().filter(|(_, &r)| r) {
            let d = graph.closed_at(e as ChannelIndex) - departure;
            for &p in graph.members(e as ChannelIndex) {
                let slot = &mut best[p as usize];
                *slot = Some(slot.map_or(d, |b| b.min(d)));
            }
        }
    }
    Ok(collect_targets(graph, s, &best))
}

/// Foremost arrival: earliest absolute arrival over journeys whose first channel
/// closes at or after `from`.
pub fn foremost_arrivals(
    graph: &TemporalHypergraph,
    dag: &SuccessorDag,
    source: &str,
    from: TimeInstant,
) -> Result<BTreeMap<ParticipantId, TimeInstant>, EngineError> {
    let s = graph.index_of(source)?;
    let starts = graph.incidence(s).iter().copied().filter(|&e| graph.closed_at(e) >= from);
    let reached = reachable_channels(dag, starts);
    let mut best: Vec<Option<TimeInstant>> = vec![None; graph.participant_count()];
    for (e, _) in reached.iter().enumerate().filter(|(_, &r)| r) {
        let t = graph.closed_at(e as ChannelIndex);
        for &p in graph.members(e as ChannelIndex) {
            let slot = &mut best[p as usize];
            *slot = Some(slot.map_or(t, |b| b.min(t)));
        }
    }
    Ok(collect_targets(graph, s, &best))
}

/// Participants reachable from `source`, excluding `source` itself.
pub fn horizon(graph: &TemporalHypergraph, dag: &SuccessorDag, source: &str) -> Result<BTreeSet<ParticipantId>, EngineError> {
    Ok(shortest_distances(graph, dag, source)?.into_keys().collect())
}

pub(crate) fn validate_grid(graph: &TemporalHypergraph, grid: &[TimeInstant]) -> Result<(), EngineError> {
    if grid.is_empty() {
        return Err(EngineError::EmptyGrid);
    }
    let window = graph.window();
    if grid.windows(2).any(|w| w[0] >= w[1]) || !window.contains(grid[0]) || !window.contains(grid[grid.len() - 1]) {
        return Err(EngineError::InvalidGrid);
    }
    Ok(())
}

fn count_by_grid<'a>(arrivals: impl Iterator<Item = &'a TimeInstant>, grid: &[TimeInstant]) -> Vec<(TimeInstant, usize)> {
    let mut sorted: Vec<TimeInstant> = arrivals.copied().collect();
    sorted.sort_unstable();
    grid.iter().map(|&t| (t, sorted.partition_point(|&a| a <= t))).collect()
}

/// Horizon size over time: for each grid instant, how many targets have a
/// foremost arrival (departing from the window start) at or before it.
pub fn horizon_growth(
    graph: &TemporalHypergraph,
    dag: &SuccessorDag,
    source: &str,
    grid: &[TimeInstant],
) -> Result<Vec<(TimeInstant, usize)>, EngineError> {
    graph.index_of(source)?;
    validate_grid(graph, grid)?;
    let arrivals = foremost_arrivals(graph, dag, source, graph.window().start())?;
    Ok(count_by_grid(arrivals.values(), grid))
}

/// One shortest journey from `source` to `target`, choosing the
/// lexicographically smallest sequence of channel ids among the minimal ones.
pub fn shortest_witness(
    graph: &TemporalHypergraph,
    dag: &SuccessorDag,
    source: &str,
    target: &str,
) -> Result<Option<Journey>, EngineError> {
    let s = graph.index_of(source)?;
    let t = graph.index_of(target)?;
    if s == t {
        return Ok(None);
    }
    let hops = channel_hops(graph, dag, s);
    let Some(k) = graph.incidence(t).iter().map(|&e| hops[e as usize]).filter(|&h| h != u32::MAX).min() else {
        return Ok(None);
    };

    // feasible[e]: e can sit at position hops[e] of some k-hop journey ending at target.
    let m = graph.channel_count();
    let mut feasible = vec![false; m];
    for &e in graph.incidence(t) {
        feasible[e as usize] = hops[e as usize] == k;
    }
    for layer in (1..k).rev() {
        for e in 0..m {
            if hops[e] == layer {
                feasible[e] = dag
                    .successors(e as ChannelIndex)
                    .iter()
                    .any(|&f| hops[f as usize] == layer + 1 && feasible[f as usize]);
            }
        }
    }

    let by_id = |a: &ChannelIndex, b: &ChannelIndex| graph.channel(*a).id.cmp(&graph.channel(*b).id);
    let mut path = Vec::with_capacity(k as usize);
    let mut current = graph
        .incidence(s)
        .iter()
        .copied()
        .filter(|&e| hops[e as usize] == 1 && feasible[e as usize])
        .min_by(by_id)
        .expect("a feasible first hop exists");
    path.push(current);
    for layer in 2..=k {
        current = dag
            .successors(current)
            .iter()
            .copied()
            .filter(|&f| hops[f as usize] == layer && feasible[f as usize])
            .min_by(by_id)
            .expect("a feasible continuation exists");
        path.push(current);
    }
    Journey::from_channels(graph, &path).map(Some)
}

/// Minima from one source to one target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TargetDistance {
    pub min_hops: u32,
    pub min_duration: Duration,
    /// Foremost arrival departing from the window start.
    pub earliest_arrival: TimeInstant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistanceSummary {
    pub source: ParticipantId,
    pub targets: BTreeMap<ParticipantId, TargetDistance>,
    pub horizon_size: usize,
}

impl DistanceSummary {
    /// Horizon size at each grid instant from the foremost arrivals.
    pub fn growth(&self, grid: &[TimeInstant]) -> Vec<(TimeInstant, usize)> {
        count_by_grid(self.targets.values().map(|d| &d.earliest_arrival), grid)
    }
}

/// Single-pass evaluator. Channels are visited in close order; ties form a
/// group whose members cannot feed each other.
pub struct SweepEngine<'g> {
    graph: &'g TemporalHypergraph,
    order: Vec<ChannelIndex>,
    /// Position of each channel in `order`.
    position: Vec<usize>,
    /// `order[group_start[i]..group_start[i+1]]` share a close time.
    group_start: Vec<usize>,
}

struct Scratch {
    best_hops: Vec<u32>,
    latest_departure: Vec<i64>,
    earliest: Vec<i64>,
    min_duration: Vec<i64>,
    group: Vec<(ChannelIndex, u32, i64)>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            best_hops: vec![u32::MAX; n],
            latest_departure: vec![i64::MIN; n],
            earliest: vec![i64::MAX; n],
            min_duration: vec![i64::MAX; n],
            group: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.best_hops.fill(u32::MAX);
        self.latest_departure.fill(i64::MIN);
        self.earliest.fill(i64::MAX);
        self.min_duration.fill(i64::MAX);
    }
}

impl<'g> SweepEngine<'g> {
    pub fn new(graph: &'g TemporalHypergraph) -> Self {
        let order = graph.channels_by_close();
        let mut position = vec![0; order.len()];
        for (i, &e) in order.iter().enumerate() {
            position[e as usize] = i;
        }
        let mut group_start = vec![0];
        for i in 1..order.len() {
            if graph.closed_at(order[i]) != graph.closed_at(order[i - 1]) {
                group_start.push(i);
            }
        }
        group_start.push(order.len());
        Self { graph, order, position, group_start }
    }

    pub fn graph(&self) -> &'g TemporalHypergraph {
        self.graph
    }

    pub fn summarize(&self, source: ParticipantIndex) -> DistanceSummary {
        let mut scratch = Scratch::new(self.graph.participant_count());
        self.summarize_with(source, &mut scratch)
    }

    fn summarize_with(&self, source: ParticipantIndex, scratch: &mut Scratch) -> DistanceSummary {
        let graph = self.graph;
        scratch.reset();
        let Some(&first) = graph.incidence(source).first() else {
            return DistanceSummary { source: graph.participant(source).clone(), targets: BTreeMap::new(), horizon_size: 0 };
        };
        let first_pos = self.position[first as usize];
        let first_group = self.group_start.partition_point(|&g| g <= first_pos) - 1;

        for bounds in self.group_start[first_group..].windows(2) {
            let close = graph.closed_at(self.order[bounds[0]]).seconds();
            scratch.group.clear();
            for &e in &self.order[bounds[0]..bounds[1]] {
                let mut hops = u32::MAX;
                let mut departure = i64::MIN;
                for &p in graph.members(e) {
                    if p == source {
                        hops = 1;
                        departure = close;
                        break;
                    }
                    let h = scratch.best_hops[p as usize];
                    if h != u32::MAX {
                        hops = hops.min(h + 1);
                    }
                    departure = departure.max(scratch.latest_departure[p as usize]);
                }
                if hops != u32::MAX {
                    scratch.group.push((e, hops, departure));
                }
            }
            for &(e, hops, departure) in &scratch.group {
                for &p in graph.members(e) {
                    let p = p as usize;
                    scratch.best_hops[p] = scratch.best_hops[p].min(hops);
                    scratch.latest_departure[p] = scratch.latest_departure[p].max(departure);
                    scratch.earliest[p] = scratch.earliest[p].min(close);
                    scratch.min_duration[p] = scratch.min_duration[p].min(close - departure);
                }
            }
        }

        let targets: BTreeMap<ParticipantId, TargetDistance> = (0..graph.participant_count())
            .filter(|&p| p != source as usize && scratch.best_hops[p] != u32::MAX)
            .map(|p| {
                (
                    graph.participant(p as ParticipantIndex).clone(),
                    TargetDistance {
                        min_hops: scratch.best_hops[p],
                        min_duration: scratch.min_duration[p],
                        earliest_arrival: TimeInstant(scratch.earliest[p]),
                    },
                )
            })
            .collect();
        DistanceSummary { source: graph.participant(source).clone(), horizon_size: targets.len(), targets }
    }
}

/// All three minima for one source in a single pass.
pub fn summarize_source(graph: &TemporalHypergraph, source: &str) -> Result<DistanceSummary, EngineError> {
    let s = graph.index_of(source)?;
    Ok(SweepEngine::new(graph).summarize(s))
}

/// Summaries for every participant in id order.
pub fn all_sources_summary(graph: &TemporalHypergraph) -> SummaryStream<'_> {
    SummaryStream::new(graph, None)
}

/// Ordered stream of [`DistanceSummary`], computed in parallel blocks.
///
/// Output order and content do not depend on the worker count.
pub struct SummaryStream<'g> {
    engine: SweepEngine<'g>,
    pool: Option<rayon::ThreadPool>,
    next: usize,
    block: usize,
    buffer: VecDeque<DistanceSummary>,
}

impl<'g> SummaryStream<'g> {
    /// `workers = None` uses the available parallelism; `Some(1)` stays on the calling thread.
    pub fn new(graph: &'g TemporalHypergraph, workers: Option<usize>) -> Self {
        let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1);
        let pool = (workers > 1).then(|| {
            rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool")
        });
        Self { engine: SweepEngine::new(graph), pool, next: 0, block: 64 * workers, buffer: VecDeque::new() }
    }

    fn fill(&mut self) {
        use rayon::prelude::*;
        let n = self.engine.graph.participant_count();
        let end = (self.next + self.block).min(n);
        let range = self.next as ParticipantIndex..end as ParticipantIndex;
        let engine = &self.engine;
        let computed: Vec<DistanceSummary> = match &self.pool {
            Some(pool) => pool.install(|| {
                range
                    .into_par_iter()
                    .map_init(|| Scratch::new(n), |scratch, s| engine.summarize_with(s, scratch))
                    .collect()
            }),
            None => {
                let mut scratch = Scratch::new(n);
                range.map(|s| engine.summarize_with(s, &mut scratch)).collect()
            }
        };
        self.buffer.extend(computed);
        self.next = end;
    }
}

impl Iterator for SummaryStream<'_> {
    type Item = DistanceSummary;

    fn next(&mut self) -> Option<DistanceSummary> {
        if self.buffer.is_empty() && self.next < self.engine.graph.participant_count() {
            self.fill();
        }
        self.buffer.pop_front()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.buffer.len() + self.engine.graph.participant_count() - self.next;
        (left, Some(left))
    }
}
