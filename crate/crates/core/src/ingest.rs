//! From raw code-review interaction logs to a [`TemporalHypergraph`].
//!
//! Events are filtered (kinds, bots), grouped per review, and each review
//! becomes a channel spanning its first to last kept interaction. Participant
//! ids are replaced by salted SHA-256 tokens.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{build_graph, classify_bound, BoundClass, Channel, ModelError, ObservationWindow, ParticipantId, TemporalHypergraph, TimeInstant, SECONDS_PER_DAY};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("line {line}: unknown interaction kind {kind:?}")]
    UnknownKind { line: u64, kind: String },
    #[error("anonymization is enabled but no salt was given")]
    SaltMissing,
    #[error("{0} is not a Monday")]
    NotAMonday(NaiveDate),
    #[error("window must span at least one week")]
    InvalidWeeks,
    #[error("bots file line {line}: invalid pattern {pattern:?}: {reason}")]
    BotPattern { line: usize, pattern: String, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Kinds of non-trivial contributions to a review discussion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Create,
    Comment,
    Edit,
    Approve,
    Close,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [Self::Create, Self::Comment, Self::Edit, Self::Approve, Self::Close];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Create => "create",
            Self::Comment => "comment",
            Self::Edit => "edit",
            Self::Approve => "approve",
            Self::Close => "close",
        }
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.as_str() == s.trim().to_ascii_lowercase()).ok_or_else(|| s.to_owned())
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub channel_id: String,
    pub participant_id: String,
    pub timestamp: TimeInstant,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    JsonLines,
}

impl FromStr for EventFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" | "json-lines" | "ndjson" => Ok(Self::JsonLines),
            other => Err(format!("unknown event format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimestampStyle {
    Epoch,
    Rfc3339,
}

/// Parses either representation, remembering the first one seen so a file
/// cannot mix them.
#[derive(Default)]
struct TimestampParser {
    style: Option<TimestampStyle>,
}

impl TimestampParser {
    fn parse(&mut self, raw: &str, line: u64) -> Result<TimeInstant, IngestError> {
        let raw = raw.trim();
        let (style, value) = match raw.parse::<i64>() {
            Ok(secs) => (TimestampStyle::Epoch, TimeInstant(secs)),
            Err(_) => match DateTime::parse_from_rfc3339(raw) {
                Ok(dt) => (TimestampStyle::Rfc3339, TimeInstant(dt.timestamp())),
                Err(e) => return Err(IngestError::Parse { line, reason: format!("invalid timestamp {raw:?}: {e}") }),
            },
        };
        match self.style {
            None => self.style = Some(style),
            Some(s) if s != style => {
                return Err(IngestError::Parse { line, reason: format!("timestamp {raw:?} does not match the file's timestamp format") })
            }
            Some(_) => {}
        }
        Ok(value)
    }
}

fn field(value: &str, name: &str, line: u64) -> Result<String, IngestError> {
    let value = value.trim();
    if value.is_empty() {
        return Err(IngestError::Parse { line, reason: format!("empty {name}") });
    }
    Ok(value.to_owned())
}

fn kind(raw: &str, line: u64) -> Result<EventKind, IngestError> {
    raw.parse().map_err(|kind| IngestError::UnknownKind { line, kind })
}

const COLUMNS: [&str; 4] = ["channel_id", "participant_id", "timestamp", "kind"];

/// Streams event records in file order. Malformed rows surface as errors
/// carrying their line number.
pub fn parse_events<'a, R: Read + 'a>(source: R, format: EventFormat) -> Box<dyn Iterator<Item = Result<EventRecord, IngestError>> + 'a> {
    match format {
        EventFormat::Csv => Box::new(csv_events(source)),
        EventFormat::JsonLines => Box::new(jsonl_events(source)),
    }
}

fn csv_events<R: Read>(source: R) -> impl Iterator<Item = Result<EventRecord, IngestError>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let columns: Result<Option<[usize; 4]>, IngestError> = match reader.headers() {
        Ok(h) if h.is_empty() => Ok(None),
        Ok(h) => COLUMNS
            .iter()
            .map(|name| {
                h.iter().position(|c| c == *name).ok_or_else(|| IngestError::Parse { line: 1, reason: format!("missing column {name:?}") })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| Some([v[0], v[1], v[2], v[3]])),
        Err(e) => Err(IngestError::Parse { line: 1, reason: e.to_string() }),
    };
    let (mut header_error, columns) = match columns {
        Ok(c) => (None, c),
        Err(e) => (Some(e), None),
    };
    let mut timestamps = TimestampParser::default();
    let mut records = reader.into_records();
    std::iter::from_fn(move || {
        if let Some(e) = header_error.take() {
            return Some(Err(e));
        }
        let columns = columns?;
        let record = records.next()?;
        Some(record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IngestError::Parse { line, reason: e.to_string() }
        }).and_then(|r| {
            let line = r.position().map_or(0, |p| p.line());
            let get = |i: usize| r.get(columns[i]).unwrap_or("");
            Ok(EventRecord {
                channel_id: field(get(0), "channel_id", line)?,
                participant_id: field(get(1), "participant_id", line)?,
                timestamp: timestamps.parse(get(2), line)?,
                kind: kind(get(3), line)?,
            })
        }))
    })
    .fuse()
}

#[derive(Deserialize)]
struct JsonEvent {
    channel_id: JsonScalar,
    participant_id: JsonScalar,
    timestamp: JsonScalar,
    kind: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonScalar {
    Int(i64),
    Str(String),
}

impl JsonScalar {
    fn into_string(self) -> String {
        match self {
            Self::Int(i) => i.to_string(),
            Self::Str(s) => s,
        }
    }
}

fn jsonl_events<R: Read>(source: R) -> impl Iterator<Item = Result<EventRecord, IngestError>> {
    let mut timestamps = TimestampParser::default();
    BufReader::new(source).lines().enumerate().filter_map(move |(i, line)| {
        let line_no = i as u64 + 1;
        let text = match line {
            Ok(t) => t,
            Err(e) => return Some(Err(IngestError::Io(e))),
        };
        if text.trim().is_empty() {
            return None;
        }
        let parsed = serde_json::from_str::<JsonEvent>(&text)
            .map_err(|e| IngestError::Parse { line: line_no, reason: e.to_string() })
            .and_then(|ev| {
                Ok(EventRecord {
                    channel_id: field(&ev.channel_id.into_string(), "channel_id", line_no)?,
                    participant_id: field(&ev.participant_id.into_string(), "participant_id", line_no)?,
                    timestamp: timestamps.parse(&ev.timestamp.into_string(), line_no)?,
                    kind: kind(&ev.kind, line_no)?,
                })
            });
        Some(parsed)
    })
}

/// Explicit bot ids plus glob patterns.
#[derive(Debug, Clone, Default)]
pub struct BotFilter {
    ids: HashSet<String>,
    patterns: Vec<glob::Pattern>,
}

impl BotFilter {
    /// One id or glob pattern per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut filter = Self::default();
        for (i, line) in text.lines().enumerate() {
            let entry = line.split('#').next().unwrap_or("").trim();
            if entry.is_empty() {
                continue;
            }
            if entry.contains(['*', '?', '[']) {
                let pattern = glob::Pattern::new(entry).map_err(|e| IngestError::BotPattern {
                    line: i + 1,
                    pattern: entry.to_owned(),
                    reason: e.msg.to_owned(),
                })?;
                filter.patterns.push(pattern);
            } else {
                filter.ids.insert(entry.to_owned());
            }
        }
        Ok(filter)
    }

    pub fn with_ids<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Self {
        Self { ids: ids.into_iter().map(Into::into).collect(), patterns: Vec::new() }
    }

    pub fn is_bot(&self, id: &str) -> bool {
        self.ids.contains(id) || self.patterns.iter().any(|p| p.matches(id))
    }
}

#[derive(Debug, Clone)]
pub struct IngestConfig {
    pub window: ObservationWindow,
    pub bots: BotFilter,
    pub anonymize: bool,
    pub salt: Option<String>,
    pub include_kinds: BTreeSet<EventKind>,
}

impl IngestConfig {
    pub fn new(window: ObservationWindow) -> Self {
        Self { window, bots: BotFilter::default(), anonymize: true, salt: None, include_kinds: EventKind::ALL.into_iter().collect() }
    }

    pub fn with_salt(mut self, salt: impl Into<String>) -> Self {
        self.salt = Some(salt.into());
        self
    }
}

/// Salted one-way participant token (first 128 bits of SHA-256, hex).
pub fn anonymize(salt: &str, raw: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(salt.as_bytes());
    hasher.update([0x1f]);
    hasher.update(raw.as_bytes());
    hex::encode(&hasher.finalize()[..16])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Contributor {
    pub participant: String,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub events_read: usize,
    pub events_kept: usize,
    pub events_dropped_by_kind: usize,
    pub events_dropped_by_bot: usize,
    pub events_dropped_by_window: usize,
    pub channels_built: usize,
    pub channels_bot_only: usize,
    pub channels_outside_window: usize,
    pub participants_kept: usize,
    pub bound_histogram: BTreeMap<BoundClass, usize>,
    /// Most active kept participants (tokens), for auditing the bot list.
    pub top_contributors: Vec<Contributor>,
}

impl IngestReport {
    /// Kept and dropped event categories add up to the events read.
    pub fn reconciles(&self) -> bool {
        self.events_kept + self.events_dropped_by_kind + self.events_dropped_by_bot + self.events_dropped_by_window == self.events_read
            && self.bound_histogram.values().sum::<usize>() == self.channels_built
    }
}

const TOP_CONTRIBUTORS: usize = 10;

struct ChannelAccumulator {
    opened: TimeInstant,
    closed: TimeInstant,
    participants: BTreeSet<String>,
    events: usize,
}

/// Groups filtered events into channels, classifies them against the window
/// and builds the graph.
pub fn assemble_channels<I>(events: I, config: &IngestConfig) -> Result<(TemporalHypergraph, IngestReport), IngestError>
where
    I: IntoIterator<Item = Result<EventRecord, IngestError>>,
{
    let salt = match (config.anonymize, config.salt.as_deref()) {
        (true, None | Some("")) => return Err(IngestError::SaltMissing),
        (true, Some(s)) => Some(s),
        (false, _) => None,
    };
    let token = |raw: &str| salt.map_or_else(|| raw.to_owned(), |s| anonymize(s, raw));

    let mut read = 0;
    let mut dropped_kind = 0;
    let mut dropped_bot = 0;
    let mut bot_channels: HashSet<String> = HashSet::new();
    let mut groups: BTreeMap<String, ChannelAccumulator> = BTreeMap::new();
    let mut per_participant: HashMap<String, usize> = HashMap::new();
    for event in events {
        let event = event?;
        read += 1;
        if !config.include_kinds.contains(&event.kind) {
            dropped_kind += 1;
            continue;
        }
        if config.bots.is_bot(&event.participant_id) {
            dropped_bot += 1;
            bot_channels.insert(event.channel_id);
            continue;
        }
        *per_participant.entry(event.participant_id.clone()).or_default() += 1;
        let acc = groups.entry(event.channel_id).or_insert_with(|| ChannelAccumulator {
            opened: event.timestamp,
            closed: event.timestamp,
            participants: BTreeSet::new(),
            events: 0,
        });
        acc.opened = acc.opened.min(event.timestamp);
        acc.closed = acc.closed.max(event.timestamp);
        acc.participants.insert(event.participant_id);
        acc.events += 1;
    }

    let mut histogram: BTreeMap<BoundClass, usize> = BoundClass::ALL.iter().map(|&c| (c, 0)).collect();
    let mut kept_events = 0;
    let mut dropped_window = 0;
    let mut outside = 0;
    let mut kept_raw: HashSet<&str> = HashSet::new();
    let mut channels = Vec::new();
    for (id, acc) in &groups {
        let participants = acc.participants.iter().map(|p| ParticipantId::new(token(p))).collect::<Result<BTreeSet<_>, _>>()?;
        let channel = Channel { id: id.clone(), opened: acc.opened, closed: acc.closed, participants };
        match classify_bound(&channel, &config.window) {
            Ok(class) => {
                *histogram.get_mut(&class).expect("all classes present") += 1;
                kept_events += acc.events;
                kept_raw.extend(acc.participants.iter().map(String::as_str));
                channels.push(channel);
            }
            Err(_) => {
                dropped_window += acc.events;
                outside += 1;
            }
        }
    }
    let channels_bot_only = bot_channels.iter().filter(|c| !groups.contains_key(*c)).count();

    let mut top: Vec<Contributor> = kept_raw
        .iter()
        .map(|&raw| Contributor { participant: token(raw), events: per_participant[raw] })
        .collect();
    top.sort_by(|a, b| b.events.cmp(&a.events).then_with(|| a.participant.cmp(&b.participant)));
    top.truncate(TOP_CONTRIBUTORS);

    let graph = build_graph(channels, config.window)?;
    let report = IngestReport {
        events_read: read,
        events_kept: kept_events,
        events_dropped_by_kind: dropped_kind,
        events_dropped_by_bot: dropped_bot,
        events_dropped_by_window: dropped_window,
        channels_built: graph.channel_count(),
        channels_bot_only,
        channels_outside_window: outside,
        participants_kept: graph.participant_count(),
        bound_histogram: histogram,
        top_contributors: top,
    };
    debug_assert!(report.reconciles());
    Ok((graph, report))
}

/// `[monday 00:00 UTC, monday + 7 * weeks days)`.
pub fn slice_window(monday: NaiveDate, weeks: u32) -> Result<ObservationWindow, IngestError> {
    if monday.weekday() != Weekday::Mon {
        return Err(IngestError::NotAMonday(monday));
    }
    if weeks == 0 {
        return Err(IngestError::InvalidWeeks);
    }
    let start = monday.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp();
    let start = TimeInstant(start);
    Ok(ObservationWindow::new(start, start + 7 * SECONDS_PER_DAY * weeks as i64)?)
}
