//! Events, facts, and the chronologically sorted temporal graph.

use crate::time::TimePoint;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Identity of an event: who did what to whom.  The rendered phrase form is
/// `(<subject> <relation> <object>)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EventKey {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl EventKey {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Result<Self, GraphError> {
        let key = EventKey {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        };
        if key.subject.is_empty() || key.relation.is_empty() || key.object.is_empty() {
            return Err(GraphError::EmptyKeyComponent);
        }
        Ok(key)
    }

    /// Inner phrase without parentheses, e.g. `John Thompson owned Pearl
    /// Network`.  Relations may be full-phrase patterns containing `{s}` and
    /// `{o}` placeholders (used by relation-synonym rewriting); those render
    /// by substitution instead of infix position.
    pub fn phrase_inner(&self) -> String {
        if self.relation.contains("{s}") || self.relation.contains("{o}") {
            self.relation.replace("{s}", &self.subject).replace("{o}", &self.object)
        } else {
            format!("{} {} {}", self.subject, self.relation, self.object)
        }
    }

    /// Parenthesized phrase, e.g. `(John Thompson owned Pearl Network)`.
    pub fn phrase(&self) -> String {
        format!("({})", self.phrase_inner())
    }
}

impl fmt::Display for EventKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.phrase())
    }
}

/// Which end of an event a fact pins down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Start,
    End,
}

impl Endpoint {
    /// Verb used in timeline lines and probe questions.
    pub fn verb(self) -> &'static str {
        match self {
            Endpoint::Start => "start",
            Endpoint::End => "end",
        }
    }
}

/// One dated assertion: an event starts or ends at a time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalFact {
    pub key: EventKey,
    pub endpoint: Endpoint,
    pub time: TimePoint,
}

impl TemporalFact {
    pub fn new(key: EventKey, endpoint: Endpoint, time: TimePoint) -> Self {
        TemporalFact { key, endpoint, time }
    }
}

/// Known start and/or end of one event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: Option<TimePoint>,
    pub end: Option<TimePoint>,
}

impl Interval {
    pub fn is_complete(&self) -> bool {
        self.start.is_some() && self.end.is_some()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("event key has an empty subject, relation, or object")]
    EmptyKeyComponent,
    #[error("duplicate {endpoint:?} fact for event {key}")]
    DuplicateEndpoint { key: EventKey, endpoint: Endpoint },
    #[error("event {key} ends at {end} before it starts at {start}")]
    InvertedInterval { key: EventKey, start: TimePoint, end: TimePoint },
    #[error("event {key} has no {endpoint:?} fact")]
    MissingEndpoint { key: EventKey, endpoint: Endpoint },
    #[error("duration needs bare-year endpoints, got {start} .. {end}")]
    GranularityMismatch { start: TimePoint, end: TimePoint },
    #[error("timeline line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
}

/// A validated, chronologically sorted set of temporal facts.
///
/// Build one with [`sort_chronological`] (or deserialize, which revalidates).
/// Fact order is part of the value: sorted by (time, endpoint, insertion
/// order), with start facts preceding end facts on time ties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TemporalFact>", into = "Vec<TemporalFact>")]
pub struct TemporalGraph {
    facts: Vec<TemporalFact>,
    intervals: BTreeMap<EventKey, Interval>,
}

impl TemporalGraph {
    pub fn empty() -> Self {
        TemporalGraph { facts: Vec::new(), intervals: BTreeMap::new() }
    }

    pub fn facts(&self) -> &[TemporalFact] {
        &self.facts
    }

    /// Event intervals, keyed and iterated in `EventKey` order.
    pub fn intervals(&self) -> &BTreeMap<EventKey, Interval> {
        &self.intervals
    }

    pub fn interval(&self, key: &EventKey) -> Option<&Interval> {
        self.intervals.get(key)
    }

    /// Event keys in order of first appearance on the timeline.
    pub fn event_keys(&self) -> Vec<EventKey> {
        let mut seen = Vec::new();
        for fact in &self.facts {
            if !seen.contains(&fact.key) {
                seen.push(fact.key.clone());
            }
        }
        seen
    }

    /// All distinct times on the timeline, ascending.
    pub fn distinct_times(&self) -> Vec<TimePoint> {
        let mut times: Vec<TimePoint> = self.facts.iter().map(|f| f.time).collect();
        times.sort();
        times.dedup();
        times
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

impl TryFrom<Vec<TemporalFact>> for TemporalGraph {
    type Error = GraphError;

    fn try_from(facts: Vec<TemporalFact>) -> Result<Self, GraphError> {
        sort_chronological(facts)
    }
}

impl From<TemporalGraph> for Vec<TemporalFact> {
    fn from(graph: TemporalGraph) -> Self {
        graph.facts
    }
}

/// Sort facts chronologically and validate the graph invariants.
///
/// The sort is stable: facts with equal time and endpoint keep their input
/// order, and start facts precede end facts at the same time.  Fails with
/// [`GraphError::DuplicateEndpoint`] when an event states the same endpoint
/// twice and [`GraphError::InvertedInterval`] when an event ends before it
/// starts.
pub fn sort_chronological(mut facts: Vec<TemporalFact>) -> Result<TemporalGraph, GraphError> {
    facts.sort_by_key(|f| (f.time, f.endpoint));
    let mut intervals: BTreeMap<EventKey, Interval> = BTreeMap::new();
    for fact in &facts {
        let entry = intervals
            .entry(fact.key.clone())
            .or_insert(Interval { start: None, end: None });
        let slot = match fact.endpoint {
            Endpoint::Start => &mut entry.start,
            Endpoint::End => &mut entry.end,
        };
        if slot.is_some() {
            return Err(GraphError::DuplicateEndpoint {
                key: fact.key.clone(),
                endpoint: fact.endpoint,
            });
        }
        *slot = Some(fact.time);
    }
    for (key, interval) in &intervals {
        if let (Some(start), Some(end)) = (interval.start, interval.end) {
            if end < start {
                return Err(GraphError::InvertedInterval { key: key.clone(), start, end });
            }
        }
    }
    Ok(TemporalGraph { facts, intervals })
}

/// Duration in years of a completed event whose endpoints are bare years.
pub fn duration_of(graph: &TemporalGraph, key: &EventKey) -> Result<i64, GraphError> {
    let interval = graph.interval(key).ok_or_else(|| GraphError::MissingEndpoint {
        key: key.clone(),
        endpoint: Endpoint::Start,
    })?;
    let start = interval.start.ok_or_else(|| GraphError::MissingEndpoint {
        key: key.clone(),
        endpoint: Endpoint::Start,
    })?;
    let end = interval.end.ok_or_else(|| GraphError::MissingEndpoint {
        key: key.clone(),
        endpoint: Endpoint::End,
    })?;
    if !start.is_plain_year() || !end.is_plain_year() {
        return Err(GraphError::GranularityMismatch { start, end });
    }
    Ok(end.year() as i64 - start.year() as i64)
}
