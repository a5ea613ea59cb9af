//! Graph data augmentation: four transforms that multiply training samples
//! while keeping every stored answer provably correct.
//!
//! * **Irrelevant-edge removal** — events whose rendered phrase appears in
//!   no question, reasoning chain, or gold answer of the sample are dropped
//!   with a per-event Bernoulli draw.
//! * **Relation synonyms** — relation phrases in graph facts are replaced
//!   (`owned` → `run`, including full-phrase templates that move the verb);
//!   question and answer text deliberately keep the original wording, which
//!   teaches reading across phrasings.
//! * **Entity/time remapping** — a global entity rename plus a uniform year
//!   offset, applied consistently to the graph *and* every piece of text
//!   that mentions the old names or times.
//!
//! Transforms apply in a fixed order — drop, synonyms, entity/time remap —
//! because irrelevance matching compares graph phrases against question
//! text and must run while both still use the original wording.  After all
//! transforms, every item is re-checked against the answer oracle; a batch
//! that would break an answer fails instead of silently corrupting data.

use crate::anon::{AnonError, EntityMap, anonymize_graph};
use crate::dataset::DatasetSample;
use crate::mix_seed;
use crate::qa::{self, QAItem, SlotValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use tgkit_core::{
    EventKey, Granularity, GraphError, TemporalFact, TemporalGraph, TimePoint, render_time_text,
    sort_chronological,
};
use thiserror::Error;

/// One relation replacement.  `replacement` is either a plain verb phrase
/// (stays infix) or a full-phrase template containing `{s}`/`{o}`
/// placeholders; `swap` exchanges subject and object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymEntry {
    pub replacement: String,
    #[serde(default)]
    pub swap: bool,
}

/// Relation-phrase → synonym mapping.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RelationSynonymMap {
    pub entries: BTreeMap<String, SynonymEntry>,
}

impl RelationSynonymMap {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rewrite one event key through the map; unmapped relations pass
    /// through unchanged.
    pub fn apply_key(&self, key: &EventKey) -> EventKey {
        match self.entries.get(&key.relation) {
            None => key.clone(),
            Some(entry) => {
                let (subject, object) = if entry.swap {
                    (key.object.clone(), key.subject.clone())
                } else {
                    (key.subject.clone(), key.object.clone())
                };
                EventKey { subject, relation: entry.replacement.clone(), object }
            }
        }
    }
}

/// Parse a synonym map from `original<TAB>replacement[<TAB>swap]` lines.
/// `#` lines and blanks are comments.
pub fn parse_synonyms(text: &str) -> Result<RelationSynonymMap, AugmentError> {
    let mut entries = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let malformed = |reason: &str| AugmentError::MalformedSynonymLine {
            line: i + 1,
            reason: reason.to_string(),
        };
        let (original, replacement, swap) = match fields.as_slice() {
            [o, r] => (o, r, false),
            [o, r, flag] if *flag == "swap" => (o, r, true),
            [_, _, flag] => {
                return Err(malformed(&format!("unknown flag {flag:?}, expected `swap`")));
            }
            _ => return Err(malformed("expected `original<TAB>replacement[<TAB>swap]`")),
        };
        if original.trim().is_empty() || replacement.trim().is_empty() {
            return Err(malformed("empty relation phrase"));
        }
        entries.insert(
            original.trim().to_string(),
            SynonymEntry { replacement: replacement.trim().to_string(), swap },
        );
    }
    Ok(RelationSynonymMap { entries })
}

pub fn load_synonyms(path: &Path) -> Result<RelationSynonymMap, std::io::Error> {
    let text = std::fs::read_to_string(path)?;
    parse_synonyms(&text)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}

/// Which transforms to apply, with their randomness parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Drop events unreferenced by any question, chain, or answer.
    pub drop_irrelevant: bool,
    /// Per-event drop chance for irrelevant events.
    pub drop_probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synonyms: Option<RelationSynonymMap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entity_map: Option<EntityMap>,
    /// Fixed year offset; mutually exclusive with `random_offset`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_offset: Option<i64>,
    /// Sample a per-sample offset from `-offset_range..=offset_range`.
    pub random_offset: bool,
    pub offset_range: i64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            drop_irrelevant: false,
            drop_probability: 0.5,
            synonyms: None,
            entity_map: None,
            time_offset: None,
            random_offset: false,
            offset_range: 15,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(AugmentError::InvalidConfig {
                reason: format!("drop probability {} outside [0, 1]", self.drop_probability),
            });
        }
        if self.offset_range < 0 {
            return Err(AugmentError::InvalidConfig {
                reason: format!("offset range {} is negative", self.offset_range),
            });
        }
        if self.time_offset.is_some() && self.random_offset {
            return Err(AugmentError::InvalidConfig {
                reason: "fixed time offset and random offset are mutually exclusive".to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error(transparent)]
    Entity(#[from] AnonError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("offset {offset:+} pushes year {year} below 1")]
    NegativeYear { year: i64, offset: i64 },
    #[error("synonym file line {line}: {reason}")]
    MalformedSynonymLine { line: usize, reason: String },
    #[error("invalid augmentation config: {reason}")]
    InvalidConfig { reason: String },
    #[error("augmented item {item_id} no longer passes the answer oracle: {reason}")]
    Verification { item_id: String, reason: String },
}

fn item_mentions(item: &QAItem, phrase: &str) -> bool {
    item.question.contains(phrase)
        || item.cot.as_deref().is_some_and(|c| c.contains(phrase))
        || item.golds.iter().any(|g| g.contains(phrase))
}

/// Events whose rendered phrase appears in neither the item's question nor
/// its reasoning chain nor its gold answers, in timeline order.
///
/// This is a syntactic stand-in for "removing the event leaves the answer
/// distribution unchanged"; see [`find_irrelevant_events_scored`] for the
/// model-probability variant.
pub fn find_irrelevant_events(graph: &TemporalGraph, item: &QAItem) -> Vec<EventKey> {
    graph
        .event_keys()
        .into_iter()
        .filter(|key| !item_mentions(item, &key.phrase()))
        .collect()
}

/// Events irrelevant to *every* item of the sample, in timeline order.
/// Samples without questions keep all events: with nothing to measure
/// relevance against, dropping would be guesswork.
pub fn sample_irrelevant_events(sample: &DatasetSample) -> Vec<EventKey> {
    if sample.qas.is_empty() {
        return Vec::new();
    }
    sample
        .graph
        .event_keys()
        .into_iter()
        .filter(|key| {
            let phrase = key.phrase();
            sample.qas.iter().all(|item| !item_mentions(item, &phrase))
        })
        .collect()
}

/// Backend-scored refinement of [`find_irrelevant_events`]: keep only the
/// syntactic candidates whose removal moves the gold answer's mean token
/// log-probability by less than `threshold`.
pub fn find_irrelevant_events_scored(
    backend: &dyn tgkit_backend::Backend,
    graph: &TemporalGraph,
    item: &QAItem,
    threshold: f64,
) -> Result<Vec<EventKey>, AugmentError> {
    let gold = match item.golds.first() {
        Some(g) => g.clone(),
        None => return Ok(Vec::new()),
    };
    let score = |g: &TemporalGraph| -> Result<f64, AugmentError> {
        let context =
            format!("{}\n\n{}\nThe answer is ", tgkit_core::render_timeline(g), item.question);
        crate::bootstrap::sequence_log_prob(backend, &context, &gold)
            .map_err(|e| AugmentError::Verification {
                item_id: item.id.clone(),
                reason: e.to_string(),
            })
    };
    let base = score(graph)?;
    let mut confirmed = Vec::new();
    for key in find_irrelevant_events(graph, item) {
        let facts: Vec<TemporalFact> =
            graph.facts().iter().filter(|f| f.key != key).cloned().collect();
        let without = sort_chronological(facts)?;
        if (score(&without)? - base).abs() < threshold {
            confirmed.push(key);
        }
    }
    Ok(confirmed)
}

/// Bernoulli-drop each irrelevant event; returns the pruned graph and how
/// many events were removed.  Draws happen in `irrelevant` order so the
/// result is a pure function of the rng state.
fn drop_events(
    graph: &TemporalGraph,
    irrelevant: &[EventKey],
    probability: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(TemporalGraph, usize), GraphError> {
    let dropped: BTreeSet<&EventKey> =
        irrelevant.iter().filter(|_| rng.gen_bool(probability)).collect();
    if dropped.is_empty() {
        return Ok((graph.clone(), 0));
    }
    let facts: Vec<TemporalFact> =
        graph.facts().iter().filter(|f| !dropped.contains(&f.key)).cloned().collect();
    Ok((sort_chronological(facts)?, dropped.len()))
}

/// Replace relation phrases in graph facts (and the item slots and
/// candidate keys that must keep pointing at them).  Question, chain, and
/// answer *text* keeps the original wording on purpose.
pub fn apply_relation_synonyms(
    sample: &DatasetSample,
    map: &RelationSynonymMap,
) -> Result<DatasetSample, AugmentError> {
    if map.is_empty() {
        return Ok(sample.clone());
    }
    let mut out = sample.clone();
    let facts: Vec<TemporalFact> = sample
        .graph
        .facts()
        .iter()
        .map(|f| TemporalFact::new(map.apply_key(&f.key), f.endpoint, f.time))
        .collect();
    out.graph = sort_chronological(facts)?;
    for item in &mut out.qas {
        for value in item.slots.values_mut() {
            if let SlotValue::Event(key) = value {
                *key = map.apply_key(key);
            }
        }
        if let Some(keys) = &mut item.candidate_keys {
            for key in keys.iter_mut() {
                *key = map.apply_key(key);
            }
        }
    }
    Ok(out)
}

fn shifted_year(year: i32, offset: i64) -> Result<i32, AugmentError> {
    let shifted = year as i64 + offset;
    if shifted < 1 {
        return Err(AugmentError::NegativeYear { year: year as i64, offset });
    }
    Ok(shifted as i32)
}

fn shift_time(time: &TimePoint, offset: i64) -> Result<TimePoint, AugmentError> {
    if offset == 0 {
        return Ok(*time);
    }
    Ok(match time.granularity() {
        Granularity::Year => TimePoint::year_of(shifted_year(time.year(), offset)?),
        Granularity::Month => {
            TimePoint::month_of(shifted_year(time.year(), offset)?, time.month().unwrap())
                .expect("month component unchanged")
        }
        Granularity::Day => TimePoint::day_of(
            shifted_year(time.year(), offset)?,
            time.month().unwrap(),
            time.day().unwrap(),
        )
        .expect("month and day components unchanged"),
        Granularity::Approx => {
            let (lo, hi) = time.approx_range().unwrap();
            TimePoint::approx(shifted_year(lo, offset)?, shifted_year(hi, offset)?)
                .expect("range order unchanged")
        }
    })
}

/// A simultaneous, longest-match-first text rewriter over literal phrases.
struct TextRewriter {
    pattern: Option<Regex>,
    table: BTreeMap<String, String>,
}

impl TextRewriter {
    fn new(table: BTreeMap<String, String>) -> Self {
        if table.is_empty() {
            return TextRewriter { pattern: None, table };
        }
        let mut sources: Vec<&String> = table.keys().collect();
        // Longer alternatives first: the regex engine prefers the first
        // matching alternative at a position, giving longest-match wins
        // ("June 1947" before "1947").
        sources.sort_by_key(|s| std::cmp::Reverse(s.len()));
        let alternation =
            sources.iter().map(|s| regex::escape(s)).collect::<Vec<_>>().join("|");
        let pattern = Regex::new(&format!(r"\b(?:{alternation})\b"))
            .expect("escaped literals form a valid pattern");
        TextRewriter { pattern: Some(pattern), table }
    }

    fn rewrite(&self, text: &str) -> String {
        match &self.pattern {
            None => text.to_string(),
            Some(pattern) => pattern
                .replace_all(text, |caps: &regex::Captures<'_>| self.table[&caps[0]].clone())
                .into_owned(),
        }
    }
}

/// Apply a global entity rename and/or a uniform year offset to the graph
/// and to every text field that mentions the affected names or times.
///
/// Time rewriting in text is rendering-based: each distinct graph time
/// contributes its rendered form (and its bare year, for sub-year
/// granularities) as a literal replacement, so `June 1947` and `1947` both
/// move while unrelated numbers such as durations stay put.
pub fn remap_entities_and_times(
    sample: &DatasetSample,
    entity_map: Option<&EntityMap>,
    offset: i64,
) -> Result<DatasetSample, AugmentError> {
    let mut table: BTreeMap<String, String> = BTreeMap::new();
    if let Some(map) = entity_map {
        for name in crate::anon::graph_entities(&sample.graph) {
            let replacement = map
                .replacement(&name)
                .ok_or_else(|| AnonError::UnmappedEntity { name: name.clone() })?;
            table.insert(name, replacement.to_string());
        }
    }
    if offset != 0 {
        for time in sample.graph.distinct_times() {
            let shifted = shift_time(&time, offset)?;
            table.insert(render_time_text(&time), render_time_text(&shifted));
            if time.granularity() != Granularity::Year {
                let year = time.year();
                table.insert(year.to_string(), shifted_year(year, offset)?.to_string());
            }
        }
    }
    let rewriter = TextRewriter::new(table);

    let mut out = sample.clone();
    if let Some(map) = entity_map {
        out.graph = anonymize_graph(&out.graph, map)?;
    }
    if offset != 0 {
        let facts: Vec<TemporalFact> = out
            .graph
            .facts()
            .iter()
            .map(|f| Ok(TemporalFact::new(f.key.clone(), f.endpoint, shift_time(&f.time, offset)?)))
            .collect::<Result<_, AugmentError>>()?;
        out.graph = sort_chronological(facts)?;
    }

    let remap_key = |key: &mut EventKey| -> Result<(), AugmentError> {
        if let Some(map) = entity_map {
            for field in [&mut key.subject, &mut key.object] {
                *field = map
                    .replacement(field)
                    .ok_or_else(|| AnonError::UnmappedEntity { name: field.clone() })?
                    .to_string();
            }
        }
        Ok(())
    };

    out.story = out.story.as_deref().map(|s| rewriter.rewrite(s));
    for item in &mut out.qas {
        item.question = rewriter.rewrite(&item.question);
        for gold in &mut item.golds {
            *gold = rewriter.rewrite(gold);
        }
        for candidate in &mut item.candidates {
            *candidate = rewriter.rewrite(candidate);
        }
        // Distractors that were not graph times (numeric padding) stay
        // put; if one now collides with a rewritten value, drop the later
        // duplicate.  Keyed candidate lists stay parallel and are rewritten
        // injectively, so they never collide.
        if item.candidate_keys.is_none() {
            let mut seen = BTreeSet::new();
            item.candidates.retain(|c| seen.insert(c.clone()));
        }
        item.cot = item.cot.as_deref().map(|c| rewriter.rewrite(c));
        for cand in &mut item.cots {
            cand.text = rewriter.rewrite(&cand.text);
            cand.parsed_answer = cand.parsed_answer.as_deref().map(|a| rewriter.rewrite(a));
        }
        if let Some(knowledge) = &mut item.knowledge {
            *knowledge = knowledge.shift(offset);
        }
        for value in item.slots.values_mut() {
            if let SlotValue::Event(key) = value {
                remap_key(key)?;
            }
        }
        if let Some(keys) = &mut item.candidate_keys {
            for key in keys.iter_mut() {
                remap_key(key)?;
            }
        }
    }
    Ok(out)
}

/// Augment one sample under the per-sample rng stream; records applied
/// transforms in provenance and re-verifies every answer.
pub fn augment_sample(
    sample: &DatasetSample,
    config: &AugmentConfig,
) -> Result<DatasetSample, AugmentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, &sample.id));
    let mut out = sample.clone();
    let mut transforms = Vec::new();

    if config.drop_irrelevant {
        let irrelevant = sample_irrelevant_events(&out);
        let (graph, dropped) =
            drop_events(&out.graph, &irrelevant, config.drop_probability, &mut rng)?;
        if dropped > 0 {
            out.graph = graph;
            transforms.push(format!("drop:{dropped}"));
        }
    }
    if let Some(map) = &config.synonyms {
        if !map.is_empty() {
            out = apply_relation_synonyms(&out, map)?;
            transforms.push("synonyms".to_string());
        }
    }
    let offset = match config.time_offset {
        Some(k) => k,
        None if config.random_offset => rng.gen_range(-config.offset_range..=config.offset_range),
        None => 0,
    };
    if config.entity_map.is_some() || offset != 0 {
        out = remap_entities_and_times(&out, config.entity_map.as_ref(), offset)?;
        if config.entity_map.is_some() {
            transforms.push("entities".to_string());
        }
        if offset != 0 {
            transforms.push(format!("offset:{offset:+}"));
        }
    }
    out.provenance.transforms.extend(transforms);

    for item in &out.qas {
        match qa::verify_item(&out.graph, item) {
            Ok(true) => {}
            Ok(false) => {
                return Err(AugmentError::Verification {
                    item_id: item.id.clone(),
                    reason: "stored gold diverged from the recomputed answer".to_string(),
                });
            }
            Err(e) => {
                return Err(AugmentError::Verification {
                    item_id: item.id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(out)
}

/// Augment every sample independently; deterministic under the config seed
/// regardless of batch order.
pub fn augment_batch(
    samples: &[DatasetSample],
    config: &AugmentConfig,
) -> Result<Vec<DatasetSample>, AugmentError> {
    config.validate()?;
    samples.iter().map(|s| augment_sample(s, config)).collect()
}
