//! Template questions over a temporal graph with a symbolic answer oracle.
//!
//! Nine question families cover ordering, duration, gaps, adjacency, fact
//! extraction, simultaneity, and overlap.  Every generated item carries its
//! slots (the event keys the question is about), a gold answer computed by
//! [`oracle_answer`], and a candidate answer set that always contains the
//! gold.  Questions whose deciding comparison ties (equal starts for
//! ordering/adjacency, equal durations for the comparative) are never
//! emitted, so each question has one defensible answer.
//!
//! Phrase-answer items also carry `candidate_keys`, the event keys behind
//! each candidate string.  The oracle answers those items by picking a key
//! and returning the item's stored surface string for it, which keeps gold
//! answers stable when later transforms rename relations in the graph while
//! deliberately leaving question text untouched.

use crate::bootstrap::CoTCandidate;
use crate::knowledge::ExternalKnowledge;
use crate::mix_seed;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use tgkit_core::{
    duration_of, Endpoint, EventKey, GraphError, TemporalGraph, TimePoint, render_time_text,
};
use thiserror::Error;

/// The nine question families.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum QuestionType {
    /// Which of two events started first.
    Q0,
    /// Which of N listed events is k-th in chronological order.
    Q1,
    /// How long an event lasted.
    Q2,
    /// True/false: event A was longer in duration than event B.
    Q3,
    /// Years between the starts of two events.
    Q4,
    /// Which event started right before/after a given event started.
    Q5,
    /// When an event occurred (its start time).
    Q6,
    /// True/false: two events happened in the same year.
    Q7,
    /// True/false: event A was still happening when event B started.
    Q8,
}

impl QuestionType {
    pub const ALL: [QuestionType; 9] = [
        QuestionType::Q0,
        QuestionType::Q1,
        QuestionType::Q2,
        QuestionType::Q3,
        QuestionType::Q4,
        QuestionType::Q5,
        QuestionType::Q6,
        QuestionType::Q7,
        QuestionType::Q8,
    ];

    pub fn label(self) -> &'static str {
        match self {
            QuestionType::Q0 => "Q0",
            QuestionType::Q1 => "Q1",
            QuestionType::Q2 => "Q2",
            QuestionType::Q3 => "Q3",
            QuestionType::Q4 => "Q4",
            QuestionType::Q5 => "Q5",
            QuestionType::Q6 => "Q6",
            QuestionType::Q7 => "Q7",
            QuestionType::Q8 => "Q8",
        }
    }

    /// Question families whose answers are exactly {True, False}.
    pub fn is_boolean(self) -> bool {
        matches!(self, QuestionType::Q3 | QuestionType::Q7 | QuestionType::Q8)
    }

    /// Question families answered by an event phrase.
    pub fn is_phrase_answer(self) -> bool {
        matches!(self, QuestionType::Q0 | QuestionType::Q1 | QuestionType::Q5)
    }
}

/// A slot value: the event a question talks about, or a small integer
/// parameter such as the rank in a k-th-of-N question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotValue {
    Event(EventKey),
    Int(i64),
}

impl SlotValue {
    pub fn as_event(&self) -> Option<&EventKey> {
        match self {
            SlotValue::Event(key) => Some(key),
            SlotValue::Int(_) => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            SlotValue::Event(_) => None,
            SlotValue::Int(n) => Some(*n),
        }
    }
}

/// One generated question with its gold answer and candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub qtype: QuestionType,
    pub question: String,
    pub slots: BTreeMap<String, SlotValue>,
    pub golds: Vec<String>,
    pub candidates: Vec<String>,
    /// For phrase-answer types: the event key behind each candidate string,
    /// parallel to `candidates`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_keys: Option<Vec<EventKey>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<ExternalKnowledge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cot: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cots: Vec<CoTCandidate>,
}

#[derive(Debug, Error, PartialEq)]
pub enum QaError {
    #[error("item references event {key} which is not in the graph")]
    EventNotInGraph { key: EventKey },
    #[error("event {key} has no known {endpoint:?}")]
    MissingEndpoint { key: EventKey, endpoint: Endpoint },
    #[error("the deciding comparison ties: {detail}")]
    AmbiguousTie { detail: String },
    #[error("item is missing slot {name:?}")]
    MissingSlot { name: String },
    #[error("duration needs bare-year endpoints for {key}")]
    GranularityMismatch { key: EventKey },
}

/// Per-type generation budget and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaConfig {
    /// Question families to generate.
    pub enabled: Vec<QuestionType>,
    /// Maximum items per family.  The k-th-of-N family defaults to the
    /// largest budget so it holds the largest share of a full run.
    pub max_per_type: BTreeMap<QuestionType, usize>,
    pub seed: u64,
}

impl Default for QaConfig {
    fn default() -> Self {
        let mut max_per_type = BTreeMap::new();
        for qt in QuestionType::ALL {
            max_per_type.insert(qt, 4);
        }
        max_per_type.insert(QuestionType::Q1, 8);
        max_per_type.insert(QuestionType::Q7, 6);
        QaConfig { enabled: QuestionType::ALL.to_vec(), max_per_type, seed: 0 }
    }
}

impl QaConfig {
    pub fn with_seed(seed: u64) -> Self {
        QaConfig { seed, ..QaConfig::default() }
    }

    fn budget(&self, qtype: QuestionType) -> usize {
        self.max_per_type.get(&qtype).copied().unwrap_or(4)
    }
}

/// Ordinal word for 1-based ranks ("first", "second", ...).
pub fn ordinal(k: usize) -> String {
    const WORDS: [&str; 12] = [
        "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth",
        "tenth", "eleventh", "twelfth",
    ];
    match k {
        1..=12 => WORDS[k - 1].to_string(),
        _ => format!("{k}th"),
    }
}

/// Events that state a start, in first-appearance order.
fn started_events(graph: &TemporalGraph) -> Vec<(EventKey, TimePoint)> {
    graph
        .event_keys()
        .into_iter()
        .filter_map(|key| {
            let start = graph.interval(&key).and_then(|iv| iv.start)?;
            Some((key, start))
        })
        .collect()
}

/// Events with a computable year duration, in first-appearance order.
fn measurable_events(graph: &TemporalGraph) -> Vec<(EventKey, i64)> {
    graph
        .event_keys()
        .into_iter()
        .filter_map(|key| {
            let d = duration_of(graph, &key).ok()?;
            Some((key, d))
        })
        .collect()
}

fn start_of(graph: &TemporalGraph, key: &EventKey) -> Result<TimePoint, QaError> {
    let interval = graph
        .interval(key)
        .ok_or_else(|| QaError::EventNotInGraph { key: key.clone() })?;
    interval
        .start
        .ok_or_else(|| QaError::MissingEndpoint { key: key.clone(), endpoint: Endpoint::Start })
}

fn end_of(graph: &TemporalGraph, key: &EventKey) -> Result<TimePoint, QaError> {
    let interval = graph
        .interval(key)
        .ok_or_else(|| QaError::EventNotInGraph { key: key.clone() })?;
    interval
        .end
        .ok_or_else(|| QaError::MissingEndpoint { key: key.clone(), endpoint: Endpoint::End })
}

fn duration_err(graph: &TemporalGraph, key: &EventKey) -> Result<i64, QaError> {
    duration_of(graph, key).map_err(|e| match e {
        GraphError::MissingEndpoint { key, endpoint } => {
            QaError::MissingEndpoint { key, endpoint }
        }
        _ => QaError::GranularityMismatch { key: key.clone() },
    })
}

fn event_slot<'a>(item: &'a QAItem, name: &str) -> Result<&'a EventKey, QaError> {
    item.slots
        .get(name)
        .and_then(SlotValue::as_event)
        .ok_or_else(|| QaError::MissingSlot { name: name.to_string() })
}

fn int_slot(item: &QAItem, name: &str) -> Result<i64, QaError> {
    item.slots
        .get(name)
        .and_then(SlotValue::as_int)
        .ok_or_else(|| QaError::MissingSlot { name: name.to_string() })
}

/// The surface string the item uses for an event key: the stored candidate
/// when `candidate_keys` is present, otherwise the key's rendered phrase.
fn surface_for(item: &QAItem, key: &EventKey) -> String {
    if let Some(keys) = &item.candidate_keys {
        if let Some(pos) = keys.iter().position(|k| k == key) {
            // During generation the candidate list is not populated yet;
            // fall through to the rendered phrase in that case.
            if let Some(surface) = item.candidates.get(pos) {
                return surface.clone();
            }
        }
    }
    key.phrase()
}

fn bool_answer(v: bool) -> String {
    if v { "True".to_string() } else { "False".to_string() }
}

/// Recompute the item's answer from the graph.
///
/// Deterministic, total over well-formed items: ambiguity (tied deciding
/// comparisons) and missing endpoints come back as errors, never as a guess.
pub fn oracle_answer(graph: &TemporalGraph, item: &QAItem) -> Result<String, QaError> {
    match item.qtype {
        QuestionType::Q0 => {
            let a = event_slot(item, "a")?;
            let b = event_slot(item, "b")?;
            let (sa, sb) = (start_of(graph, a)?, start_of(graph, b)?);
            if sa == sb {
                return Err(QaError::AmbiguousTie {
                    detail: format!("both events start at {}", render_time_text(&sa)),
                });
            }
            Ok(surface_for(item, if sa < sb { a } else { b }))
        }
        QuestionType::Q1 => {
            let k = int_slot(item, "k")? as usize;
            let mut listed = Vec::new();
            let mut idx = 1;
            while let Some(slot) = item.slots.get(&format!("e{idx}")) {
                let key = slot
                    .as_event()
                    .ok_or_else(|| QaError::MissingSlot { name: format!("e{idx}") })?;
                listed.push((key, start_of(graph, key)?));
                idx += 1;
            }
            if listed.is_empty() || k == 0 || k > listed.len() {
                return Err(QaError::MissingSlot { name: "e1".to_string() });
            }
            let mut sorted = listed.clone();
            sorted.sort_by_key(|(_, start)| *start);
            for pair in sorted.windows(2) {
                if pair[0].1 == pair[1].1 {
                    return Err(QaError::AmbiguousTie {
                        detail: format!(
                            "two listed events start at {}",
                            render_time_text(&pair[0].1)
                        ),
                    });
                }
            }
            Ok(surface_for(item, sorted[k - 1].0))
        }
        QuestionType::Q2 => {
            let a = event_slot(item, "a")?;
            Ok(duration_err(graph, a)?.to_string())
        }
        QuestionType::Q3 => {
            let a = event_slot(item, "a")?;
            let b = event_slot(item, "b")?;
            let (da, db) = (duration_err(graph, a)?, duration_err(graph, b)?);
            if da == db {
                return Err(QaError::AmbiguousTie {
                    detail: format!("both events last {da} years"),
                });
            }
            Ok(bool_answer(da > db))
        }
        QuestionType::Q4 => {
            let a = event_slot(item, "a")?;
            let b = event_slot(item, "b")?;
            let (sa, sb) = (start_of(graph, a)?, start_of(graph, b)?);
            if !sa.is_plain_year() || !sb.is_plain_year() {
                return Err(QaError::GranularityMismatch { key: a.clone() });
            }
            Ok((sa.year() as i64 - sb.year() as i64).abs().to_string())
        }
        QuestionType::Q5 => {
            let a = event_slot(item, "a")?;
            let after = int_slot(item, "after")? != 0;
            let sa = start_of(graph, a)?;
            let mut best: Option<(EventKey, TimePoint)> = None;
            for (key, start) in started_events(graph) {
                if key == *a {
                    continue;
                }
                let qualifies = if after { start > sa } else { start < sa };
                if !qualifies {
                    continue;
                }
                match &best {
                    None => best = Some((key, start)),
                    Some((_, bs)) => {
                        let closer = if after { start < *bs } else { start > *bs };
                        if start == *bs {
                            return Err(QaError::AmbiguousTie {
                                detail: format!(
                                    "two events start at {}",
                                    render_time_text(&start)
                                ),
                            });
                        }
                        if closer {
                            best = Some((key, start));
                        }
                    }
                }
            }
            match best {
                Some((key, _)) => Ok(surface_for(item, &key)),
                None => Err(QaError::AmbiguousTie {
                    detail: format!("no event starts {} this one", if after { "after" } else { "before" }),
                }),
            }
        }
        QuestionType::Q6 => {
            let a = event_slot(item, "a")?;
            Ok(render_time_text(&start_of(graph, a)?))
        }
        QuestionType::Q7 => {
            let a = event_slot(item, "a")?;
            let b = event_slot(item, "b")?;
            Ok(bool_answer(start_of(graph, a)?.year() == start_of(graph, b)?.year()))
        }
        QuestionType::Q8 => {
            let a = event_slot(item, "a")?;
            let b = event_slot(item, "b")?;
            let sa = start_of(graph, a)?;
            let ea = end_of(graph, a)?;
            let sb = start_of(graph, b)?;
            // Half-open: at its end year the event no longer counts as
            // happening.
            Ok(bool_answer(sa <= sb && sb < ea))
        }
    }
}

/// Candidate answers for an item: true/false for boolean families, the
/// phrases the question names (or every phrase in the graph for adjacency),
/// and all graph-derivable values for duration/gap/time families.  The gold
/// is always a member; near-miss numeric distractors pad degenerate sets so
/// every item offers at least two options.
pub fn generate_candidates(graph: &TemporalGraph, item: &QAItem) -> Vec<String> {
    if item.qtype.is_boolean() {
        return vec!["True".to_string(), "False".to_string()];
    }
    match item.qtype {
        QuestionType::Q0 | QuestionType::Q1 | QuestionType::Q5 => item
            .candidate_keys
            .clone()
            .unwrap_or_else(|| graph.event_keys())
            .iter()
            .map(EventKey::phrase)
            .collect(),
        QuestionType::Q2 => {
            let durations: Vec<i64> = measurable_events(graph).into_iter().map(|(_, d)| d).collect();
            pad_numeric(dedup_sorted(durations), &item.golds)
        }
        QuestionType::Q4 => {
            let starts: Vec<i64> = started_events(graph)
                .into_iter()
                .filter(|(_, s)| s.is_plain_year())
                .map(|(_, s)| s.year() as i64)
                .collect();
            let mut gaps = Vec::new();
            for (i, a) in starts.iter().enumerate() {
                for b in &starts[i + 1..] {
                    gaps.push((a - b).abs());
                }
            }
            pad_numeric(dedup_sorted(gaps), &item.golds)
        }
        QuestionType::Q6 => {
            let mut times: Vec<String> =
                graph.distinct_times().iter().map(render_time_text).collect();
            if times.len() < 2 {
                // Only plain-year golds admit sensible near-miss padding;
                // items over a single non-year time get dropped upstream.
                if let Some(year) = item.golds.first().and_then(|g| g.parse::<i64>().ok()) {
                    for delta in [1, 2] {
                        let padded = (year + delta).to_string();
                        if !times.contains(&padded) {
                            times.push(padded);
                        }
                    }
                }
            }
            times
        }
        _ => unreachable!("boolean families handled above"),
    }
}

fn dedup_sorted(mut values: Vec<i64>) -> Vec<i64> {
    values.sort_unstable();
    values.dedup();
    values
}

/// Render numeric candidates, padding with gold+1 / gold+2 when the graph
/// yields fewer than two distinct values.
fn pad_numeric(mut values: Vec<i64>, golds: &[String]) -> Vec<String> {
    if values.len() < 2 {
        if let Some(gold) = golds.first().and_then(|g| g.parse::<i64>().ok()) {
            for delta in [1, 2] {
                if !values.contains(&(gold + delta)) {
                    values.push(gold + delta);
                }
            }
            values.sort_unstable();
            values.dedup();
        }
    }
    values.iter().map(|v| v.to_string()).collect()
}

/// True when the item's stored gold matches the oracle's recomputation.
pub fn verify_item(graph: &TemporalGraph, item: &QAItem) -> Result<bool, QaError> {
    let answer = oracle_answer(graph, item)?;
    Ok(item.golds.iter().any(|g| *g == answer))
}

/// Generate questions over a graph under the configured budgets.
///
/// Deterministic under the config seed: each family draws from its own
/// seeded stream, enumerates its instantiations in a canonical order, and
/// samples without replacement up to its budget.
pub fn generate_qas(graph: &TemporalGraph, config: &QaConfig) -> Vec<QAItem> {
    let mut items = Vec::new();
    for qtype in QuestionType::ALL {
        if !config.enabled.contains(&qtype) {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, qtype.label()));
        let budget = config.budget(qtype);
        let generated = match qtype {
            QuestionType::Q0 => gen_q0(graph, budget, &mut rng),
            QuestionType::Q1 => gen_q1(graph, budget, &mut rng),
            QuestionType::Q2 => gen_q2(graph, budget, &mut rng),
            QuestionType::Q3 => gen_q3(graph, budget, &mut rng),
            QuestionType::Q4 => gen_q4(graph, budget, &mut rng),
            QuestionType::Q5 => gen_q5(graph, budget, &mut rng),
            QuestionType::Q6 => gen_q6(graph, budget, &mut rng),
            QuestionType::Q7 => gen_q7(graph, budget, &mut rng),
            QuestionType::Q8 => gen_q8(graph, budget, &mut rng),
        };
        items.extend(generated);
    }
    debug_assert!(items.iter().all(|item| verify_item(graph, item).unwrap_or(false)));
    items
}

fn finish_item(
    graph: &TemporalGraph,
    qtype: QuestionType,
    index: usize,
    question: String,
    slots: BTreeMap<String, SlotValue>,
    candidate_keys: Option<Vec<EventKey>>,
) -> Option<QAItem> {
    let mut item = QAItem {
        id: format!("{}-{index}", qtype.label().to_ascii_lowercase()),
        qtype,
        question,
        slots,
        golds: Vec::new(),
        candidates: Vec::new(),
        candidate_keys,
        knowledge: None,
        cot: None,
        cots: Vec::new(),
    };
    // Candidates for phrase families come straight from candidate_keys;
    // value families need the gold first for distractor padding.
    let gold = oracle_answer(graph, &item).ok()?;
    item.golds = vec![gold];
    item.candidates = generate_candidates(graph, &item);
    if item.candidates.len() < 2 || !item.candidates.contains(&item.golds[0]) {
        return None;
    }
    Some(item)
}

fn select<T>(mut pool: Vec<T>, budget: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    pool.shuffle(rng);
    pool.truncate(budget);
    pool
}

fn event_slots(pairs: &[(&str, &EventKey)]) -> BTreeMap<String, SlotValue> {
    pairs
        .iter()
        .map(|(name, key)| (name.to_string(), SlotValue::Event((*key).clone())))
        .collect()
}

fn gen_q0(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let events = started_events(graph);
    let mut pool = Vec::new();
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            if events[i].1 != events[j].1 {
                pool.push((i, j));
            }
        }
    }
    select(pool, budget, rng)
        .into_iter()
        .enumerate()
        .filter_map(|(n, (i, j))| {
            let (a, b) = (&events[i].0, &events[j].0);
            let question =
                format!("Which event started first, {} or {}?", a.phrase(), b.phrase());
            finish_item(
                graph,
                QuestionType::Q0,
                n,
                question,
                event_slots(&[("a", a), ("b", b)]),
                Some(vec![a.clone(), b.clone()]),
            )
        })
        .collect()
}

fn gen_q1(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let events = started_events(graph);
    // Distinct-start events only: a tie anywhere in the listed set would
    // make some rank ambiguous.
    let mut excluded: Vec<TimePoint> = Vec::new();
    let mut distinct: Vec<(EventKey, TimePoint)> = Vec::new();
    for (key, start) in events {
        if excluded.contains(&start) {
            continue;
        }
        if distinct.iter().any(|(_, s)| *s == start) {
            distinct.retain(|(_, s)| *s != start);
            excluded.push(start);
        } else {
            distinct.push((key, start));
        }
    }
    if distinct.len() < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut seen = Vec::new();
    let mut attempts = 0;
    while out.len() < budget && attempts < budget * 8 {
        attempts += 1;
        let n = rng.gen_range(3..=distinct.len().min(6));
        let mut chosen: Vec<usize> = (0..distinct.len()).collect();
        chosen.shuffle(rng);
        chosen.truncate(n);
        let k = rng.gen_range(1..=n);
        let signature = (chosen.clone(), k);
        if seen.contains(&signature) {
            continue;
        }
        seen.push(signature);
        let listed: Vec<&EventKey> = chosen.iter().map(|&i| &distinct[i].0).collect();
        let phrases: Vec<String> = listed.iter().map(|k| k.phrase()).collect();
        let question = format!(
            "Given the following {n} events: {}, which event is the {} one in the chronological order?",
            phrases.join(", "),
            ordinal(k),
        );
        let mut slots: BTreeMap<String, SlotValue> = listed
            .iter()
            .enumerate()
            .map(|(i, key)| (format!("e{}", i + 1), SlotValue::Event((*key).clone())))
            .collect();
        slots.insert("k".to_string(), SlotValue::Int(k as i64));
        if let Some(item) = finish_item(
            graph,
            QuestionType::Q1,
            out.len(),
            question,
            slots,
            Some(listed.into_iter().cloned().collect()),
        ) {
            out.push(item);
        }
    }
    out
}

fn gen_q2(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let pool: Vec<EventKey> = measurable_events(graph).into_iter().map(|(k, _)| k).collect();
    select(pool, budget, rng)
        .into_iter()
        .enumerate()
        .filter_map(|(n, a)| {
            let question = format!("How long did the event {} last?", a.phrase());
            finish_item(graph, QuestionType::Q2, n, question, event_slots(&[("a", &a)]), None)
        })
        .collect()
}

fn gen_q3(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let events = measurable_events(graph);
    let mut pool = Vec::new();
    for i in 0..events.len() {
        for j in 0..events.len() {
            if i != j && events[i].1 != events[j].1 {
                pool.push((i, j));
            }
        }
    }
    select(pool, budget, rng)
        .into_iter()
        .enumerate()
        .filter_map(|(n, (i, j))| {
            let (a, b) = (&events[i].0, &events[j].0);
            let question = format!(
                "True or false: event {} was longer in duration than event {}?",
                a.phrase(),
                b.phrase()
            );
            finish_item(graph, QuestionType::Q3, n, question, event_slots(&[("a", a), ("b", b)]), None)
        })
        .collect()
}

fn gen_q4(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let events: Vec<(EventKey, TimePoint)> = started_events(graph)
        .into_iter()
        .filter(|(_, s)| s.is_plain_year())
        .collect();
    let mut pool = Vec::new();
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            pool.push((i, j));
        }
    }
    select(pool, budget, rng)
        .into_iter()
        .enumerate()
        .filter_map(|(n, (i, j))| {
            let (a, b) = (&events[i].0, &events[j].0);
            let question = format!(
                "How much time passed between the start of {} and the start of {}?",
                a.phrase(),
                b.phrase()
            );
            finish_item(graph, QuestionType::Q4, n, question, event_slots(&[("a", a), ("b", b)]), None)
        })
        .collect()
}

fn gen_q5(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let events = started_events(graph);
    let all_keys: Vec<EventKey> = graph.event_keys();
    let mut pool = Vec::new();
    for (i, _) in events.iter().enumerate() {
        for after in [false, true] {
            pool.push((i, after));
        }
    }
    select(pool, budget, rng)
        .into_iter()
        .enumerate()
        .filter_map(|(n, (i, after))| {
            let a = &events[i].0;
            let question = format!(
                "What happened right {} {} started?",
                if after { "after" } else { "before" },
                a.phrase()
            );
            let mut slots = event_slots(&[("a", a)]);
            slots.insert("after".to_string(), SlotValue::Int(after as i64));
            finish_item(graph, QuestionType::Q5, n, question, slots, Some(all_keys.clone()))
        })
        .collect()
}

fn gen_q6(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let pool: Vec<EventKey> = started_events(graph).into_iter().map(|(k, _)| k).collect();
    select(pool, budget, rng)
        .into_iter()
        .enumerate()
        .filter_map(|(n, a)| {
            let question = format!("When did the {} occur?", a.phrase());
            finish_item(graph, QuestionType::Q6, n, question, event_slots(&[("a", &a)]), None)
        })
        .collect()
}

fn gen_q7(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let events = started_events(graph);
    let mut pool = Vec::new();
    for i in 0..events.len() {
        for j in i + 1..events.len() {
            pool.push((i, j));
        }
    }
    select(pool, budget, rng)
        .into_iter()
        .enumerate()
        .filter_map(|(n, (i, j))| {
            let (a, b) = (&events[i].0, &events[j].0);
            let question = format!(
                "True or false: {} and {} happened at the same year?",
                a.phrase(),
                b.phrase()
            );
            finish_item(graph, QuestionType::Q7, n, question, event_slots(&[("a", a), ("b", b)]), None)
        })
        .collect()
}

fn gen_q8(graph: &TemporalGraph, budget: usize, rng: &mut ChaCha8Rng) -> Vec<QAItem> {
    let started = started_events(graph);
    let complete: Vec<EventKey> = graph
        .event_keys()
        .into_iter()
        .filter(|k| graph.interval(k).map(|iv| iv.is_complete()).unwrap_or(false))
        .collect();
    let mut pool = Vec::new();
    for a in &complete {
        for (b, _) in &started {
            if a != b {
                pool.push((a.clone(), b.clone()));
            }
        }
    }
    select(pool, budget, rng)
        .into_iter()
        .enumerate()
        .filter_map(|(n, (a, b))| {
            let question = format!(
                "True or false: {} was still happening when {} started?",
                a.phrase(),
                b.phrase()
            );
            finish_item(graph, QuestionType::Q8, n, question, event_slots(&[("a", &a), ("b", &b)]), None)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tgkit_core::fixtures;

    fn flagship() -> TemporalGraph {
        fixtures::media_mogul_graph()
    }

    fn key(s: &str, r: &str, o: &str) -> EventKey {
        EventKey::new(s, r, o).unwrap()
    }

    fn item_for(
        graph: &TemporalGraph,
        qtype: QuestionType,
        question: &str,
        slots: BTreeMap<String, SlotValue>,
        candidate_keys: Option<Vec<EventKey>>,
    ) -> QAItem {
        let mut item = QAItem {
            id: "t-0".to_string(),
            qtype,
            question: question.to_string(),
            slots,
            golds: Vec::new(),
            candidates: Vec::new(),
            candidate_keys,
            knowledge: None,
            cot: None,
            cots: Vec::new(),
        };
        item.golds = vec![oracle_answer(graph, &item).unwrap()];
        item.candidates = generate_candidates(graph, &item);
        item
    }

    #[test]
    fn first_of_two_matches_the_printed_sample() {
        let graph = flagship();
        let owned = key("John Thompson", "owned", "Pearl Network");
        let married = key("John Thompson", "was married to", "Sophia Parker");
        let item = item_for(
            &graph,
            QuestionType::Q0,
            "Which event started first, (John Thompson owned Pearl Network) or (John Thompson was married to Sophia Parker)?",
            event_slots(&[("a", &owned), ("b", &married)]),
            Some(vec![owned.clone(), married.clone()]),
        );
        assert_eq!(item.golds, vec!["(John Thompson owned Pearl Network)"]);
        assert_eq!(
            item.candidates,
            vec![
                "(John Thompson owned Pearl Network)",
                "(John Thompson was married to Sophia Parker)"
            ]
        );
    }

    #[test]
    fn comparative_duration_matches_the_printed_sample() {
        let graph = flagship();
        let owned = key("John Thompson", "owned", "Pearl Network");
        let married = key("Sophia Parker", "was married to", "John Thompson");
        let item = item_for(
            &graph,
            QuestionType::Q3,
            "True or false: event (John Thompson owned Pearl Network) was longer in duration than event (Sophia Parker was married to John Thompson)?",
            event_slots(&[("a", &owned), ("b", &married)]),
            None,
        );
        assert_eq!(item.golds, vec!["True"]);
        assert_eq!(item.candidates, vec!["True", "False"]);
    }

    #[test]
    fn comparative_duration_flips_under_swap() {
        let graph = flagship();
        let owned = key("John Thompson", "owned", "Pearl Network");
        let married = key("Sophia Parker", "was married to", "John Thompson");
        let fwd = item_for(&graph, QuestionType::Q3, "q", event_slots(&[("a", &owned), ("b", &married)]), None);
        let rev = item_for(&graph, QuestionType::Q3, "q", event_slots(&[("a", &married), ("b", &owned)]), None);
        assert_eq!(fwd.golds, vec!["True"]);
        assert_eq!(rev.golds, vec!["False"]);
    }

    #[test]
    fn equal_durations_are_an_ambiguous_tie() {
        // Two marriages with identical spans.
        let graph = fixtures::two_marriages_graph();
        let a = key("Liam Mitchell", "was married to", "Emma Scott");
        let b = key("Emma Scott", "was married to", "Liam Mitchell");
        let item = QAItem {
            id: "t".into(),
            qtype: QuestionType::Q3,
            question: "q".into(),
            slots: event_slots(&[("a", &a), ("b", &b)]),
            golds: vec![],
            candidates: vec![],
            candidate_keys: None,
            knowledge: None,
            cot: None,
            cots: Vec::new(),
        };
        assert!(matches!(
            oracle_answer(&graph, &item),
            Err(QaError::AmbiguousTie { .. })
        ));
    }

    #[test]
    fn duration_and_gap_use_year_arithmetic() {
        let graph = flagship();
        let owned = key("John Thompson", "owned", "Pearl Network");
        let married = key("Sophia Parker", "was married to", "John Thompson");
        let q2 = item_for(&graph, QuestionType::Q2, "q", event_slots(&[("a", &owned)]), None);
        assert_eq!(q2.golds, vec!["25"]);
        let q4 = item_for(&graph, QuestionType::Q4, "q", event_slots(&[("a", &owned), ("b", &married)]), None);
        assert_eq!(q4.golds, vec!["5"]);
        // Self-gap is zero.
        let self_gap =
            item_for(&graph, QuestionType::Q4, "q", event_slots(&[("a", &owned), ("b", &owned)]), None);
        assert_eq!(self_gap.golds, vec!["0"]);
    }

    #[test]
    fn event_time_candidates_enumerate_all_distinct_times() {
        let graph = flagship();
        let born = key("John Thompson", "was born in", "Weston");
        let item = item_for(&graph, QuestionType::Q6, "q", event_slots(&[("a", &born)]), None);
        assert_eq!(item.golds, vec!["1921"]);
        assert_eq!(
            item.candidates,
            vec!["1921", "1942", "1947", "1953", "1967", "1988", "1995"]
        );
    }

    #[test]
    fn overlap_at_start_is_half_open() {
        let graph = flagship();
        let owned = key("John Thompson", "owned", "Pearl Network"); // 1942..1967
        let married = key("Sophia Parker", "was married to", "John Thompson"); // 1947..1953
        let died = key("John Thompson", "died in", "Riverside"); // starts 1988

        // Marriage began while ownership was running.
        let overlapping =
            item_for(&graph, QuestionType::Q8, "q", event_slots(&[("a", &owned), ("b", &married)]), None);
        assert_eq!(overlapping.golds, vec!["True"]);

        // Death came after ownership ended.
        let disjoint =
            item_for(&graph, QuestionType::Q8, "q", event_slots(&[("a", &owned), ("b", &died)]), None);
        assert_eq!(disjoint.golds, vec!["False"]);

        // Equal start counts as already happening; start at the end year
        // does not.
        let same_start =
            item_for(&graph, QuestionType::Q8, "q", event_slots(&[("a", &married), ("b", &owned)]), None);
        assert_eq!(same_start.golds, vec!["False"]); // owned starts 1942 < 1947

        let a = key("A Corp", "ran project", "Alpha");
        let b = key("B Corp", "ran project", "Beta");
        let facts = vec![
            fact(&a, Endpoint::Start, 1950),
            fact(&a, Endpoint::End, 1960),
            fact(&b, Endpoint::Start, 1960),
        ];
        let g = tgkit_core::sort_chronological(facts).unwrap();
        let boundary = item_for(&g, QuestionType::Q8, "q", event_slots(&[("a", &a), ("b", &b)]), None);
        assert_eq!(boundary.golds, vec!["False"]);
    }

    fn fact(key: &EventKey, endpoint: Endpoint, year: i32) -> tgkit_core::TemporalFact {
        tgkit_core::TemporalFact::new(key.clone(), endpoint, TimePoint::year_of(year))
    }

    #[test]
    fn adjacency_answers_with_the_stored_surface_string() {
        let graph = flagship();
        let married = key("Sophia Parker", "was married to", "John Thompson"); // starts 1947
        let mut slots = event_slots(&[("a", &married)]);
        slots.insert("after".to_string(), SlotValue::Int(0));
        let item = item_for(
            &graph,
            QuestionType::Q5,
            "q",
            slots,
            Some(graph.event_keys()),
        );
        // Right before the 1947 marriage: ownership started in 1942.
        assert_eq!(item.golds, vec!["(John Thompson owned Pearl Network)"]);

        // With remapped candidate surfaces, the oracle echoes the stored
        // string rather than re-rendering the key.
        let mut renamed = item.clone();
        renamed.candidates = renamed
            .candidates
            .iter()
            .map(|c| c.replace("owned", "ran"))
            .collect();
        let answer = oracle_answer(&graph, &renamed).unwrap();
        assert_eq!(answer, "(John Thompson ran Pearl Network)");
    }

    #[test]
    fn single_fact_graph_yields_only_event_time_items() {
        let a = key("Ada Lovelace", "lived in", "London");
        let facts = vec![fact(&a, Endpoint::Start, 1840)];
        let graph = tgkit_core::sort_chronological(facts).unwrap();
        let items = generate_qas(&graph, &QaConfig::default());
        assert!(!items.is_empty());
        assert!(items.iter().all(|i| i.qtype == QuestionType::Q6));
        // Padded candidates still give the oracle something to reject.
        assert!(items[0].candidates.len() >= 2);
        assert_eq!(items[0].golds, vec!["1840"]);
    }

    #[test]
    fn generation_is_deterministic_and_verified() {
        let graph = fixtures::two_marriages_graph();
        let cfg = QaConfig::with_seed(11);
        let once = generate_qas(&graph, &cfg);
        let twice = generate_qas(&graph, &cfg);
        assert_eq!(once, twice);
        assert!(!once.is_empty());
        for item in &once {
            assert!(verify_item(&graph, item).unwrap(), "item {} failed oracle", item.id);
            assert!(item.candidates.len() >= 2);
            assert!(item.candidates.contains(&item.golds[0]));
            if item.qtype.is_boolean() {
                assert_eq!(item.candidates, vec!["True", "False"]);
            }
        }
    }

    #[test]
    fn default_mix_gives_the_ranking_family_the_largest_share() {
        // Needs a graph with at least three tie-free start years so the
        // ranking family can instantiate at all.
        let graph = fixtures::media_mogul_graph();
        let items = generate_qas(&graph, &QaConfig::with_seed(3));
        let mut counts: BTreeMap<QuestionType, usize> = BTreeMap::new();
        for item in &items {
            *counts.entry(item.qtype).or_default() += 1;
        }
        let q1 = counts.get(&QuestionType::Q1).copied().unwrap_or(0);
        for (qtype, count) in &counts {
            if *qtype != QuestionType::Q1 {
                assert!(
                    q1 >= *count,
                    "expected Q1 ({q1}) to lead, but {qtype:?} has {count}"
                );
            }
        }
        assert!(q1 > 0);
    }

    #[test]
    fn tied_starts_are_never_asked_about() {
        let graph = fixtures::two_marriages_graph();
        let items = generate_qas(&graph, &QaConfig::with_seed(5));
        for item in items {
            if item.qtype == QuestionType::Q0 {
                let a = item.slots["a"].as_event().unwrap();
                let b = item.slots["b"].as_event().unwrap();
                let sa = graph.interval(a).unwrap().start.unwrap();
                let sb = graph.interval(b).unwrap().start.unwrap();
                assert_ne!(sa, sb);
            }
        }
    }

    #[test]
    fn serde_round_trips_items() {
        let graph = flagship();
        let items = generate_qas(&graph, &QaConfig::default());
        let json = serde_json::to_string(&items).unwrap();
        let back: Vec<QAItem> = serde_json::from_str(&json).unwrap();
        assert_eq!(items, back);
    }
}
