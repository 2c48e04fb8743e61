//! Time-varying multi-hypergraph of code-review communication.
//!
//! Participants are vertices, code reviews are hyperedges ("channels") that are
//! present from the first to the last observed interaction. Vertex presence is
//! constant over the observation window, so it has no representation here.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds.
pub type Duration = i64;

pub const SECONDS_PER_DAY: Duration = 86_400;

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeInstant(pub i64);

impl TimeInstant {
    pub const fn seconds(self) -> i64 {
        self.0
    }
}

impl Sub for TimeInstant {
    type Output = Duration;

    fn sub(self, rhs: Self) -> Duration {
        self.0 - rhs.0
    }
}

impl Add<Duration> for TimeInstant {
    type Output = TimeInstant;

    fn add(self, rhs: Duration) -> TimeInstant {
        TimeInstant(self.0 + rhs)
    }
}

impl Sub<Duration> for TimeInstant {
    type Output = TimeInstant;

    fn sub(self, rhs: Duration) -> TimeInstant {
        TimeInstant(self.0 - rhs)
    }
}

impl fmt::Display for TimeInstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("malformed channel {id:?}: {reason}")]
    MalformedChannel { id: String, reason: String },
    #[error("duplicate channel id {0:?}")]
    DuplicateChannel(String),
    #[error("no channel intersects the observation window")]
    EmptyGraph,
    #[error("unknown participant {0:?}")]
    UnknownParticipant(String),
    #[error("channel {0:?} does not overlap the observation window")]
    NoOverlap(String),
    #[error("invalid observation window: start {start} is not before end {end}")]
    InvalidWindow { start: TimeInstant, end: TimeInstant },
    #[error("participant id must not be empty")]
    EmptyParticipantId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ObservationWindow {
    start: TimeInstant,
    end: TimeInstant,
}

impl ObservationWindow {
    pub fn new(start: TimeInstant, end: TimeInstant) -> Result<Self, ModelError> {
        if start >= end {
            return Err(ModelError::InvalidWindow { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> TimeInstant {
        self.start
    }

    pub fn end(&self) -> TimeInstant {
        self.end
    }

    pub fn length(&self) -> Duration {
        self.end - self.start
    }

    pub fn contains(&self, t: TimeInstant) -> bool {
        self.start <= t && t <= self.end
    }

    /// Whether the closed interval `[opened, closed]` shares at least one instant with the window.
    pub fn overlaps(&self, opened: TimeInstant, closed: TimeInstant) -> bool {
        opened <= self.end && closed >= self.start
    }

    pub fn shifted(&self, offset: Duration) -> Self {
        Self { start: self.start + offset, end: self.end + offset }
    }
}

impl<'de> Deserialize<'de> for ObservationWindow {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            start: TimeInstant,
            end: TimeInstant,
        }
        let raw = Raw::deserialize(deserializer)?;
        ObservationWindow::new(raw.start, raw.end).map_err(serde::de::Error::custom)
    }
}

/// Anonymized participant token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ParticipantId(String);

impl ParticipantId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ModelError::EmptyParticipantId);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl<'de> Deserialize<'de> for ParticipantId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ParticipantId::new(s).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for ParticipantId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// One code review: a hyperedge over its participants, present on `[opened, closed]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    pub id: String,
    pub opened: TimeInstant,
    pub closed: TimeInstant,
    pub participants: BTreeSet<ParticipantId>,
}

impl Channel {
    pub fn new<I, S>(id: impl Into<String>, opened: TimeInstant, closed: TimeInstant, participants: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let participants = participants
            .into_iter()
            .map(ParticipantId::new)
            .collect::<Result<BTreeSet<_>, _>>()?;
        let channel = Self { id: id.into(), opened, closed, participants };
        channel.validate()?;
        Ok(channel)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let malformed = |reason: &str| ModelError::MalformedChannel { id: self.id.clone(), reason: reason.to_owned() };
        if self.id.is_empty() {
            return Err(malformed("empty id"));
        }
        if self.opened > self.closed {
            return Err(malformed("opened after closed"));
        }
        if self.participants.is_empty() {
            return Err(malformed("no participants"));
        }
        Ok(())
    }

    /// Presence function: active on the closed interval `[opened, closed]`.
    pub fn is_active(&self, t: TimeInstant) -> bool {
        self.opened <= t && t <= self.closed
    }

    /// Time left until the channel closes, for instants at which it is active.
    pub fn latency(&self, t: TimeInstant) -> Option<Duration> {
        self.is_active(t).then(|| self.closed - t)
    }

    pub fn contains(&self, p: &str) -> bool {
        self.participants.contains(p)
    }
}

/// Where a channel's observed lifespan lies relative to the observation window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundClass {
    /// Starts and ends inside the window.
    Bounded,
    /// Starts inside, ends after the window.
    LeftBounded,
    /// Starts before, ends inside the window.
    RightBounded,
    /// Starts before and ends after the window.
    Unbounded,
}

impl BoundClass {
    pub const ALL: [BoundClass; 4] = [Self::Bounded, Self::LeftBounded, Self::RightBounded, Self::Unbounded];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bounded => "bounded",
            Self::LeftBounded => "left-bounded",
            Self::RightBounded => "right-bounded",
            Self::Unbounded => "unbounded",
        }
    }
}

impl fmt::Display for BoundClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies the unclamped interval of `channel` against `window`.
pub fn classify_bound(channel: &Channel, window: &ObservationWindow) -> Result<BoundClass, ModelError> {
    if !window.overlaps(channel.opened, channel.closed) {
        return Err(ModelError::NoOverlap(channel.id.clone()));
    }
    let starts_inside = channel.opened >= window.start;
    let ends_inside = channel.closed <= window.end;
    Ok(match (starts_inside, ends_inside) {
        (true, true) => BoundClass::Bounded,
        (true, false) => BoundClass::LeftBounded,
        (false, true) => BoundClass::RightBounded,
        (false, false) => BoundClass::Unbounded,
    })
}

/// Dense index of a participant inside a [`TemporalHypergraph`].
pub type ParticipantIndex = u32;
/// Dense index of a channel inside a [`TemporalHypergraph`].
pub type ChannelIndex = u32;

/// Immutable communication network over an observation window.
///
/// Channels keep their input order. Intervals are clamped to the window; the
/// observed (unclamped) interval and its [`BoundClass`] are retained so the
/// graph can be written back losslessly.
#[derive(Debug, Clone)]
pub struct TemporalHypergraph {
    window: ObservationWindow,
    participants: Vec<ParticipantId>,
    participant_index: HashMap<ParticipantId, ParticipantIndex>,
    channels: Vec<Channel>,
    observed: Vec<(TimeInstant, TimeInstant)>,
    bounds: Vec<BoundClass>,
    members: Vec<Vec<ParticipantIndex>>,
    incidence: Vec<Vec<ChannelIndex>>,
}

/// Validates, filters and clamps `channels` into a graph.
///
/// Channels entirely outside `window` are dropped; the rest are clamped to it.
pub fn build_graph(channels: impl IntoIterator<Item = Channel>, window: ObservationWindow) -> Result<TemporalHypergraph, ModelError> {
    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    let mut observed = Vec::new();
    let mut bounds = Vec::new();
    for mut channel in channels {
        channel.validate()?;
        if !seen.insert(channel.id.clone()) {
            return Err(ModelError::DuplicateChannel(channel.id));
        }
        let Ok(bound) = classify_bound(&channel, &window) else {
            continue;
        };
        observed.push((channel.opened, channel.closed));
        bounds.push(bound);
        channel.opened = channel.opened.max(window.start);
        channel.closed = channel.closed.min(window.end);
        kept.push(channel);
    }
    if kept.is_empty() {
        return Err(ModelError::EmptyGraph);
    }

    let participants: Vec<ParticipantId> = kept
        .iter()
        .flat_map(|c| c.participants.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let participant_index: HashMap<ParticipantId, ParticipantIndex> =
        participants.iter().enumerate().map(|(i, p)| (p.clone(), i as ParticipantIndex)).collect();

    let members: Vec<Vec<ParticipantIndex>> = kept
        .iter()
        .map(|c| c.participants.iter().map(|p| participant_index[p]).collect())
        .collect();

    let mut incidence: Vec<Vec<ChannelIndex>> = vec![Vec::new(); participants.len()];
    for (ci, m) in members.iter().enumerate() {
        for &p in m {
            incidence[p as usize].push(ci as ChannelIndex);
        }
    }
    for list in &mut incidence {
        list.sort_by(|&a, &b| {
            let (a, b) = (&kept[a as usize], &kept[b as usize]);
            a.closed.cmp(&b.closed).then_with(|| a.id.cmp(&b.id))
        });
    }

    Ok(TemporalHypergraph { window, participants, participant_index, channels: kept, observed, bounds, members, incidence })
}

impl TemporalHypergraph {
    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    /// Participants in ascending id order.
    pub fn participants(&self) -> &[ParticipantId] {
        &self.participants
    }

    pub fn participant_count(&self) -> usize {
        self.participants.len()
    }

    /// Clamped channels in input order.
    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, index: ChannelIndex) -> &Channel {
        &self.channels[index as usize]
    }

    /// Observed interval before clamping.
    pub fn observed_interval(&self, index: ChannelIndex) -> (TimeInstant, TimeInstant) {
        self.observed[index as usize]
    }

    pub fn bound_class(&self, index: ChannelIndex) -> BoundClass {
        self.bounds[index as usize]
    }

    pub fn bound_histogram(&self) -> Vec<(BoundClass, usize)> {
        BoundClass::ALL
            .iter()
            .map(|&class| (class, self.bounds.iter().filter(|&&b| b == class).count()))
            .collect()
    }

    pub fn index_of(&self, p: &str) -> Result<ParticipantIndex, ModelError> {
        self.participant_index
            .get(p)
            .copied()
            .ok_or_else(|| ModelError::UnknownParticipant(p.to_owned()))
    }

    pub fn participant(&self, index: ParticipantIndex) -> &ParticipantId {
        &self.participants[index as usize]
    }

    /// Participant indices of a channel, ascending.
    pub fn members(&self, index: ChannelIndex) -> &[ParticipantIndex] {
        &self.members[index as usize]
    }

    /// Channels containing the participant, ascending by close time then id.
    pub fn incidence(&self, index: ParticipantIndex) -> &[ChannelIndex] {
        &self.incidence[index as usize]
    }

    pub fn closed_at(&self, index: ChannelIndex) -> TimeInstant {
        self.channels[index as usize].closed
    }

    /// All channels containing `p`, sorted ascending by close time with ties broken by id.
    pub fn incident_channels(&self, p: &str) -> Result<Vec<&Channel>, ModelError> {
        let index = self.index_of(p)?;
        Ok(self.incidence(index).iter().map(|&c| self.channel(c)).collect())
    }

    /// Channel indices ordered by close time, then id.
    pub fn channels_by_close(&self) -> Vec<ChannelIndex> {
        let mut order: Vec<ChannelIndex> = (0..self.channels.len() as ChannelIndex).collect();
        order.sort_by(|&a, &b| {
            let (a, b) = (self.channel(a), self.channel(b));
            a.closed.cmp(&b.closed).then_with(|| a.id.cmp(&b.id))
        });
        order
    }

    /// The graph file representation, carrying the observed intervals.
    pub fn to_file(&self) -> GraphFile {
        let channels = self
            .channels
            .iter()
            .zip(&self.observed)
            .map(|(c, &(opened, closed))| Channel { opened, closed, ..c.clone() })
            .collect();
        GraphFile { window: self.window, channels }
    }
}

/// On-disk graph: `{"window": {"start", "end"}, "channels": [...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub window: ObservationWindow,
    pub channels: Vec<Channel>,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<TemporalHypergraph, ModelError> {
        build_graph(self.channels, self.window)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("graph file serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn window(start: i64, end: i64) -> ObservationWindow {
        ObservationWindow::new(TimeInstant(start), TimeInstant(end)).unwrap()
    }

    pub fn ch(id: &str, opened: i64, closed: i64, members: &[&str]) -> Channel {
        Channel::new(id, TimeInstant(opened), TimeInstant(closed), members.iter().copied()).unwrap()
    }

    #[test]
    fn figure_graph_has_six_participants() {
        let g = build_graph(
            vec![
                ch("e1", 0, 1, &["v1", "v2", "v3"]),
                ch("e2", 0, 2, &["v2", "v4"]),
                ch("e3", 0, 4, &["v3", "v5", "v6"]),
                ch("e4", 0, 3, &["v4", "v5", "v6"]),
            ],
            window(0, 10),
        )
        .unwrap();
        assert_eq!(g.participant_count(), 6);
        assert_eq!(g.channel_count(), 4);
        let ids: Vec<_> = g.incident_channels("v2").unwrap().iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["e1", "e2"]);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(build_graph(Vec::new(), window(0, 10)).unwrap_err(), ModelError::EmptyGraph);
        let outside = vec![ch("a", 20, 30, &["x"])];
        assert_eq!(build_graph(outside, window(0, 10)).unwrap_err(), ModelError::EmptyGraph);
    }

    #[test]
    fn crossing_channel_is_clamped() {
        let day = SECONDS_PER_DAY;
        let w = window(100 * day, 128 * day);
        let g = build_graph(vec![ch("c", 90 * day, 101 * day, &["a", "b"])], w).unwrap();
        let c = g.channel(0);
        assert_eq!((c.opened, c.closed), (TimeInstant(100 * day), TimeInstant(101 * day)));
        assert_eq!(g.observed_interval(0), (TimeInstant(90 * day), TimeInstant(101 * day)));
        assert_eq!(g.bound_class(0), BoundClass::RightBounded);
        // the file keeps the observed interval so reloading yields the same graph
        let again = g.to_file().into_graph().unwrap();
        assert_eq!(again.channels(), g.channels());
    }

    #[test]
    fn malformed_channels() {
        let bad = Channel { id: "x".into(), opened: TimeInstant(5), closed: TimeInstant(4), participants: BTreeSet::new() };
        assert!(matches!(build_graph(vec![bad], window(0, 10)), Err(ModelError::MalformedChannel { .. })));
        let noid = Channel { id: String::new(), ..ch("y", 0, 1, &["a"]) };
        assert!(matches!(build_graph(vec![noid], window(0, 10)), Err(ModelError::MalformedChannel { .. })));
        let dup = vec![ch("y", 0, 1, &["a"]), ch("y", 0, 1, &["a"])];
        assert_eq!(build_graph(dup, window(0, 10)).unwrap_err(), ModelError::DuplicateChannel("y".into()));
        assert!(ParticipantId::new("").is_err());
        assert!(ObservationWindow::new(TimeInstant(3), TimeInstant(3)).is_err());
    }

    #[test]
    fn parallel_hyperedges_coexist() {
        let g = build_graph(vec![ch("a", 0, 1, &["x", "y"]), ch("b", 0, 1, &["x", "y"])], window(0, 10)).unwrap();
        assert_eq!(g.channel_count(), 2);
    }

    #[test]
    fn classification() {
        let w = window(10, 20);
        assert_eq!(classify_bound(&ch("c", 11, 19, &["a"]), &w), Ok(BoundClass::Bounded));
        assert_eq!(classify_bound(&ch("c", 10, 20, &["a"]), &w), Ok(BoundClass::Bounded));
        assert_eq!(classify_bound(&ch("c", 5, 15, &["a"]), &w), Ok(BoundClass::RightBounded));
        assert_eq!(classify_bound(&ch("c", 15, 25, &["a"]), &w), Ok(BoundClass::LeftBounded));
        assert_eq!(classify_bound(&ch("c", 5, 25, &["a"]), &w), Ok(BoundClass::Unbounded));
        assert_eq!(classify_bound(&ch("c", 1, 9, &["a"]), &w), Err(ModelError::NoOverlap("c".into())));
        assert_eq!(classify_bound(&ch("c", 21, 29, &["a"]), &w), Err(ModelError::NoOverlap("c".into())));
    }

    #[test]
    fn presence_is_closed_interval() {
        let c = ch("c", 10, 20, &["a"]);
        assert!(!c.is_active(TimeInstant(9)));
        assert!(c.is_active(TimeInstant(10)));
        assert!(c.is_active(TimeInstant(20)));
        assert!(!c.is_active(TimeInstant(21)));
        assert_eq!(c.latency(TimeInstant(12)), Some(8));
        assert_eq!(c.latency(TimeInstant(25)), None);
    }

    #[test]
    fn incident_channels_edge_cases() {
        let g = build_graph(vec![ch("b", 0, 5, &["x", "y"]), ch("a", 0, 5, &["x"])], window(0, 10)).unwrap();
        let ids: Vec<_> = g.incident_channels("x").unwrap().iter().map(|c| c.id.clone()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(g.incident_channels("nobody").unwrap_err(), ModelError::UnknownParticipant("nobody".into()));
    }

    #[test]
    fn json_shape() {
        let text = r#"{"window":{"start":0,"end":10},"channels":[{"id":"1","opened":2,"closed":3,"participants":["b","a"]}]}"#;
        let file: GraphFile = serde_json::from_str(text).unwrap();
        let g = file.into_graph().unwrap();
        assert_eq!(g.participants().iter().map(|p| p.as_str()).collect::<Vec<_>>(), ["a", "b"]);
        let bad = r#"{"window":{"start":10,"end":0},"channels":[]}"#;
        assert!(serde_json::from_str::<GraphFile>(bad).is_err());
    }
}
