//! Arithmetic scaffolding derived from a temporal graph: the sorted time
//! chain, explicit time-gap statements, and an ordering over the gaps.
//!
//! Attached to a question as in-context knowledge, these three lines hand a
//! model the subtraction and comparison steps temporal questions need, so
//! the model reasons over stated arithmetic instead of doing it implicitly.
//! Everything here is year arithmetic; graphs carrying finer-grained times
//! are rejected rather than silently truncated.

use crate::qa::{QAItem, QuestionType, SlotValue};
use serde::{Deserialize, Serialize};
use tgkit_core::TemporalGraph;
use thiserror::Error;

/// Which gap statements to derive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeScope {
    /// Durations of the events the question references, plus the start-gap
    /// for start-distance questions.  The default: smallest sufficient
    /// scaffolding.
    #[default]
    Referenced,
    /// Durations of every complete event in the graph.
    AllDurations,
    /// Every ordered pair of chain times.  The wide mode: covers gaps that
    /// cut across events, at the cost of quadratic growth.
    Pairwise,
}

/// One subtraction over two chain years, rendered `minuend - subtrahend =
/// difference`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GapStatement {
    pub minuend: i64,
    pub subtrahend: i64,
}

impl GapStatement {
    /// Gap between two years, normalized so the larger year is the minuend.
    pub fn between(a: i64, b: i64) -> Self {
        GapStatement { minuend: a.max(b), subtrahend: a.min(b) }
    }

    pub fn difference(&self) -> i64 {
        self.minuend - self.subtrahend
    }

    pub fn render(&self) -> String {
        format!("{} - {} = {}", self.minuend, self.subtrahend, self.difference())
    }
}

/// The derived scaffolding for one item: chain, gaps, and gap ordering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalKnowledge {
    /// All distinct graph years, ascending.
    pub chain: Vec<i64>,
    /// Gap statements sorted by (minuend, subtrahend), deduplicated.
    pub gaps: Vec<GapStatement>,
    /// Distinct gap differences, ascending.
    pub ordering: Vec<i64>,
}

impl ExternalKnowledge {
    /// Shift every year by `offset`.  Differences, and therefore the
    /// ordering, are invariant.
    pub fn shift(&self, offset: i64) -> ExternalKnowledge {
        ExternalKnowledge {
            chain: self.chain.iter().map(|y| y + offset).collect(),
            gaps: self
                .gaps
                .iter()
                .map(|g| GapStatement {
                    minuend: g.minuend + offset,
                    subtrahend: g.subtrahend + offset,
                })
                .collect(),
            ordering: self.ordering.clone(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum KnowledgeError {
    #[error("time {time} is not a bare year; gap arithmetic needs year granularity")]
    NonYearTime { time: String },
}

/// All distinct graph times as ascending years.
pub fn derive_time_chain(graph: &TemporalGraph) -> Result<Vec<i64>, KnowledgeError> {
    graph
        .distinct_times()
        .iter()
        .map(|t| {
            if t.is_plain_year() {
                Ok(t.year() as i64)
            } else {
                Err(KnowledgeError::NonYearTime { time: t.to_string() })
            }
        })
        .collect()
}

fn duration_gap(graph: &TemporalGraph, key: &tgkit_core::EventKey) -> Option<GapStatement> {
    let interval = graph.interval(key)?;
    let (start, end) = (interval.start?, interval.end?);
    if !start.is_plain_year() || !end.is_plain_year() {
        return None;
    }
    Some(GapStatement::between(end.year() as i64, start.year() as i64))
}

fn referenced_gaps(graph: &TemporalGraph, item: &QAItem) -> Vec<GapStatement> {
    let mut gaps = Vec::new();
    for value in item.slots.values() {
        if let SlotValue::Event(key) = value {
            if let Some(gap) = duration_gap(graph, key) {
                gaps.push(gap);
            }
        }
    }
    if item.qtype == QuestionType::Q4 {
        let starts: Vec<i64> = ["a", "b"]
            .iter()
            .filter_map(|name| item.slots.get(*name))
            .filter_map(SlotValue::as_event)
            .filter_map(|key| graph.interval(key)?.start)
            .filter(|s| s.is_plain_year())
            .map(|s| s.year() as i64)
            .collect();
        if let [sa, sb] = starts[..] {
            gaps.push(GapStatement::between(sa, sb));
        }
    }
    gaps
}

fn all_duration_gaps(graph: &TemporalGraph) -> Vec<GapStatement> {
    graph
        .event_keys()
        .iter()
        .filter_map(|key| duration_gap(graph, key))
        .collect()
}

fn pairwise_gaps(chain: &[i64]) -> Vec<GapStatement> {
    let mut gaps = Vec::new();
    for (i, a) in chain.iter().enumerate() {
        for b in &chain[i + 1..] {
            gaps.push(GapStatement::between(*a, *b));
        }
    }
    gaps
}

/// Distinct differences of the given gaps, ascending.
pub fn derive_gap_ordering(gaps: &[GapStatement]) -> Vec<i64> {
    let mut diffs: Vec<i64> = gaps.iter().map(GapStatement::difference).collect();
    diffs.sort_unstable();
    diffs.dedup();
    diffs
}

/// Derive the full scaffolding for one item under a scope.
pub fn derive_for_item(
    graph: &TemporalGraph,
    item: &QAItem,
    scope: KnowledgeScope,
) -> Result<ExternalKnowledge, KnowledgeError> {
    let chain = derive_time_chain(graph)?;
    let mut gaps = match scope {
        KnowledgeScope::Referenced => referenced_gaps(graph, item),
        KnowledgeScope::AllDurations => all_duration_gaps(graph),
        KnowledgeScope::Pairwise => pairwise_gaps(&chain),
    };
    gaps.sort_unstable();
    gaps.dedup();
    let ordering = derive_gap_ordering(&gaps);
    Ok(ExternalKnowledge { chain, gaps, ordering })
}

/// Render the scaffolding as prompt text: one chain line, one line per gap,
/// and one ordering line when there is anything to order.
pub fn render_knowledge(knowledge: &ExternalKnowledge) -> String {
    let mut lines = Vec::new();
    if !knowledge.chain.is_empty() {
        lines.push(
            knowledge
                .chain
                .iter()
                .map(i64::to_string)
                .collect::<Vec<_>>()
                .join(" before "),
        );
    }
    for gap in &knowledge.gaps {
        lines.push(gap.render());
    }
    if !knowledge.ordering.is_empty() {
        lines.push(
            knowledge
                .ordering
                .iter()
                .map(i64::to_string)
                .collect::<Vec<_>>()
                .join(" < "),
        );
    }
    lines.join("\n")
}
