//! Narrative generation and story/graph alignment review.
//!
//! A graph becomes a short story through a backend prompt that lists every
//! dated fact on its own line.  Because generation can silently drop or
//! distort events, each fact is then probed back: "When did the event
//! (<phrase>) start?" asked against the story.  Answers that miss the
//! expected time produce *pending* alignment flags; a reviewer resolves
//! each flag as accepted (answer was fine), rejected (sample unusable), or
//! fixed (graph carried a wrong time; the correction is applied and every
//! stored answer recomputed).

use crate::dataset::{DatasetError, DatasetSample};
use crate::qa::{self};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use tgkit_backend::{Backend, BackendError, GenParams, PromptError, PromptRegistry};
use tgkit_core::{
    Endpoint, EventKey, GraphError, TemporalFact, TemporalGraph, TimePoint, render_time_text,
    render_timeline, sort_chronological,
};
use thiserror::Error;

/// Review lifecycle of one alignment probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagStatus {
    Pending,
    Accepted,
    Rejected,
    Fixed,
}

/// Reviewer's classification of what went wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorLabel {
    #[serde(rename = "T1")]
    WrongInfo,
    #[serde(rename = "T2")]
    LogicalInconsistency,
    #[serde(rename = "T3")]
    ExternalKnowledgeError,
    #[serde(rename = "T4")]
    TemporalGraphError,
}

/// One story/graph mismatch awaiting (or past) review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentFlag {
    pub flag_id: String,
    pub sample_id: String,
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub endpoint: Endpoint,
    pub expected: TimePoint,
    pub model_answer: String,
    pub status: FlagStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<ErrorLabel>,
}

impl AlignmentFlag {
    pub fn event(&self) -> EventKey {
        EventKey {
            subject: self.subject.clone(),
            relation: self.relation.clone(),
            object: self.object.clone(),
        }
    }
}

fn flag_id(sample_id: &str, key: &EventKey, endpoint: Endpoint) -> String {
    format!(
        "{sample_id}|{}|{}|{}|{}",
        key.subject,
        key.relation,
        key.object,
        endpoint.verb()
    )
}

#[derive(Debug, Error)]
pub enum StoryError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("cannot narrate an empty graph")]
    EmptyGraph,
    #[error("backend returned an empty story")]
    EmptyGeneration,
}

fn slot_map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// The full story-generation prompt: one line per fact, then the
/// instruction.
pub fn story_prompt(
    registry: &PromptRegistry,
    graph: &TemporalGraph,
) -> Result<String, PromptError> {
    registry.render("story_gen", &slot_map(&[("timeline", &render_timeline(graph))]))
}

/// Generate a story narrating every fact of the graph.
pub fn generate_story(
    backend: &dyn Backend,
    registry: &PromptRegistry,
    graph: &TemporalGraph,
    params: &GenParams,
) -> Result<String, StoryError> {
    if graph.is_empty() {
        return Err(StoryError::EmptyGraph);
    }
    let prompt = story_prompt(registry, graph)?;
    let story = backend.generate(&prompt, params)?;
    if story.trim().is_empty() {
        return Err(StoryError::EmptyGeneration);
    }
    Ok(story)
}

/// The probe question for one fact, asked against the story.
pub fn probe_question(
    registry: &PromptRegistry,
    story: &str,
    fact: &TemporalFact,
) -> Result<String, PromptError> {
    registry.render(
        "story_probe",
        &slot_map(&[
            ("story", story),
            ("event", &fact.key.phrase_inner()),
            ("endpoint", fact.endpoint.verb()),
        ]),
    )
}

/// Whether a probe answer names the expected time: exact match after answer
/// normalization, or the normalized answer containing the expected time's
/// tokens as a consecutive run ("in 1957" names 1957).
pub fn answer_names_time(answer: &str, expected: &TimePoint) -> bool {
    let normalized = crate::metrics::normalize_answer(answer);
    let wanted = crate::metrics::normalize_answer(&render_time_text(expected));
    if normalized == wanted {
        return true;
    }
    let answer_tokens: Vec<&str> = normalized.split_whitespace().collect();
    let wanted_tokens: Vec<&str> = wanted.split_whitespace().collect();
    !wanted_tokens.is_empty()
        && answer_tokens.windows(wanted_tokens.len()).any(|w| w == wanted_tokens)
}

/// Probe the story once per fact; mismatched answers become pending flags.
pub fn probe_alignment(
    backend: &dyn Backend,
    registry: &PromptRegistry,
    sample_id: &str,
    story: &str,
    graph: &TemporalGraph,
    params: &GenParams,
) -> Result<Vec<AlignmentFlag>, StoryError> {
    let mut flags = Vec::new();
    for fact in graph.facts() {
        let question = probe_question(registry, story, fact)?;
        let answer = backend.generate(&question, params)?;
        if !answer_names_time(&answer, &fact.time) {
            flags.push(AlignmentFlag {
                flag_id: flag_id(sample_id, &fact.key, fact.endpoint),
                sample_id: sample_id.to_string(),
                subject: fact.key.subject.clone(),
                relation: fact.key.relation.clone(),
                object: fact.key.object.clone(),
                endpoint: fact.endpoint,
                expected: fact.time,
                model_answer: answer.trim().to_string(),
                status: FlagStatus::Pending,
                label: None,
            });
        }
    }
    Ok(flags)
}

/// Write the pending flags as JSONL, ordered by (sample, event, endpoint).
pub fn emit_review_queue(flags: &[AlignmentFlag], path: &Path) -> Result<(), DatasetError> {
    let mut pending: Vec<&AlignmentFlag> =
        flags.iter().filter(|f| f.status == FlagStatus::Pending).collect();
    pending.sort_by_key(|f| (f.sample_id.clone(), f.event(), f.endpoint));
    crate::dataset::write_jsonl(path, &pending)
}

pub fn load_review_queue(path: &Path) -> Result<Vec<AlignmentFlag>, DatasetError> {
    crate::dataset::read_jsonl(path)
}

/// One reviewer verdict on a pending flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub flag_id: String,
    pub status: FlagStatus,
    /// Required when `status` is `fixed`: the time the graph should carry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected: Option<TimePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<ErrorLabel>,
}

pub fn load_review_decisions(path: &Path) -> Result<Vec<ReviewDecision>, DatasetError> {
    crate::dataset::read_jsonl(path)
}

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("decision references unknown flag {flag_id:?}")]
    UnknownFlag { flag_id: String },
    #[error("decision for {flag_id:?} keeps status pending; choose accepted, rejected, or fixed")]
    UndecidedStatus { flag_id: String },
    #[error("pending flag {flag_id:?} has no decision")]
    IncompleteReview { flag_id: String },
    #[error("fixed decision for {flag_id:?} carries no corrected time")]
    MissingCorrection { flag_id: String },
    #[error("flag {flag_id:?} no longer matches a fact in its sample")]
    DanglingFlag { flag_id: String },
    #[error("patch for {flag_id:?} breaks the graph: {source}")]
    StalePatch {
        flag_id: String,
        #[source]
        source: GraphError,
    },
}

/// Outcome counts of one review pass.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReviewReport {
    pub accepted: usize,
    pub rejected_samples: usize,
    pub fixed: usize,
    /// QA items dropped because a fix left them unanswerable.
    pub dropped_items: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, usize>,
}

/// Apply reviewer decisions: drop rejected samples, patch fixed times and
/// recompute every stored answer, clear accepted flags.  Every pending flag
/// must be decided; the output carries no pending flags.
pub fn apply_review(
    samples: &[DatasetSample],
    decisions: &[ReviewDecision],
) -> Result<(Vec<DatasetSample>, ReviewReport), ReviewError> {
    let known: BTreeMap<&str, FlagStatus> = samples
        .iter()
        .flat_map(|s| s.flags.iter())
        .filter(|f| f.status == FlagStatus::Pending)
        .map(|f| (f.flag_id.as_str(), f.status))
        .collect();
    let mut by_id: BTreeMap<&str, &ReviewDecision> = BTreeMap::new();
    for decision in decisions {
        if !known.contains_key(decision.flag_id.as_str()) {
            return Err(ReviewError::UnknownFlag { flag_id: decision.flag_id.clone() });
        }
        if decision.status == FlagStatus::Pending {
            return Err(ReviewError::UndecidedStatus { flag_id: decision.flag_id.clone() });
        }
        by_id.insert(&decision.flag_id, decision);
    }

    let mut out = Vec::new();
    let mut report = ReviewReport::default();
    'samples: for sample in samples {
        let mut patches: Vec<(&AlignmentFlag, TimePoint)> = Vec::new();
        let mut resolved: Vec<&str> = Vec::new();
        for flag in sample.flags.iter().filter(|f| f.status == FlagStatus::Pending) {
            let decision = by_id.get(flag.flag_id.as_str()).copied().ok_or_else(|| {
                ReviewError::IncompleteReview { flag_id: flag.flag_id.clone() }
            })?;
            if let Some(label) = decision.label {
                let key = serde_json::to_value(label)
                    .expect("label serializes")
                    .as_str()
                    .expect("label is a string")
                    .to_string();
                *report.labels.entry(key).or_default() += 1;
            }
            match decision.status {
                FlagStatus::Rejected => {
                    report.rejected_samples += 1;
                    continue 'samples;
                }
                FlagStatus::Accepted => {
                    report.accepted += 1;
                    resolved.push(&flag.flag_id);
                }
                FlagStatus::Fixed => {
                    let corrected = decision.corrected.ok_or_else(|| {
                        ReviewError::MissingCorrection { flag_id: flag.flag_id.clone() }
                    })?;
                    patches.push((flag, corrected));
                    resolved.push(&flag.flag_id);
                }
                FlagStatus::Pending => unreachable!("rejected above"),
            }
        }

        let mut patched = sample.clone();
        let was_patched = !patches.is_empty();
        for (flag, corrected) in patches {
            let event = flag.event();
            let mut hit = false;
            let facts: Vec<TemporalFact> = patched
                .graph
                .facts()
                .iter()
                .map(|f| {
                    if f.key == event && f.endpoint == flag.endpoint {
                        hit = true;
                        TemporalFact::new(f.key.clone(), f.endpoint, corrected)
                    } else {
                        f.clone()
                    }
                })
                .collect();
            if !hit {
                return Err(ReviewError::DanglingFlag { flag_id: flag.flag_id.clone() });
            }
            patched.graph = sort_chronological(facts).map_err(|source| {
                ReviewError::StalePatch { flag_id: flag.flag_id.clone(), source }
            })?;
            report.fixed += 1;
        }

        // A patched time can move any stored answer, including answers of
        // items that never mention the patched event (adjacency questions
        // rank every start).  Recompute them all; items a fix makes
        // unanswerable are dropped.
        if was_patched {
            let graph = patched.graph.clone();
            let mut kept = Vec::with_capacity(patched.qas.len());
            for mut item in std::mem::take(&mut patched.qas) {
                match qa::oracle_answer(&graph, &item) {
                    Ok(answer) => {
                        if !item.golds.contains(&answer) {
                            item.golds = vec![answer];
                            // Value answers need their candidate sets
                            // re-derived; phrase candidates keep their
                            // stored surface strings.
                            if item.candidate_keys.is_none() && !item.qtype.is_boolean() {
                                item.candidates = qa::generate_candidates(&graph, &item);
                            }
                        }
                        if item.candidates.len() < 2 {
                            report.dropped_items += 1;
                            continue;
                        }
                        kept.push(item);
                    }
                    Err(_) => report.dropped_items += 1,
                }
            }
            patched.qas = kept;
        }
        patched.flags.retain(|f| !resolved.contains(&f.flag_id.as_str()));
        out.push(patched);
    }
    Ok((out, report))
}
