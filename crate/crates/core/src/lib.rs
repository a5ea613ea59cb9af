//! Core temporal-graph model.
//!
//! A [`TemporalGraph`] is a chronologically sorted list of start/end facts
//! about events, where an event is identified by a (subject, relation,
//! object) triple.  The graph owns two invariants that everything downstream
//! relies on:
//!
//! * facts are sorted by (time, endpoint, insertion order), with starts
//!   before ends on time ties, and
//! * each event has at most one start and one end fact, and its start never
//!   falls after its end.
//!
//! [`timeline`] renders a graph into the line-oriented text form
//! `(<subject> <relation> <object>) starts at <time>` and parses that form
//! back; `parse ∘ render` is the identity on valid graphs.

pub mod fixtures;
pub mod graph;
pub mod time;
pub mod timeline;

pub use graph::{
    Endpoint, EventKey, GraphError, Interval, TemporalFact, TemporalGraph, duration_of,
    sort_chronological,
};
pub use time::{month_from_name, Granularity, TimeError, TimePoint, MONTH_NAMES};
pub use timeline::{
    parse_time_text, parse_timeline, render_fact_line, render_time_text, render_timeline,
    split_phrase,
};
