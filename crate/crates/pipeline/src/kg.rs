//! Source knowledge-graph ingestion: TSV quintuples, bounded subgraph
//! extraction, and seed planning for corpus construction.
//!
//! The source format is one `subject<TAB>relation<TAB>object<TAB>start<TAB>
//! end` row per line, with `####` (or empty, or `#`-masked date parts) for
//! unknown components — the convention of YAGO-style temporal KGs.  Raw
//! names keep their underscores inside [`KnowledgeGraph`]; conversion to
//! readable display form (spaces, verb-phrase relations) happens when a
//! subgraph becomes a [`TemporalGraph`].

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use tgkit_core::{Endpoint, EventKey, TemporalFact, TemporalGraph, TimePoint, sort_chronological};
use thiserror::Error;

/// One dated relation instance, as read from the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quintuple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub start: Option<TimePoint>,
    pub end: Option<TimePoint>,
}

/// The loaded KG with derived adjacency.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    quintuples: Vec<Quintuple>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum KgError {
    #[error("line {line}: expected 5 tab-separated fields, found {found}")]
    MalformedRow { line: usize, found: usize },
    #[error("line {line}, field {field}: unparsable time {text:?}")]
    UnparsableTime { line: usize, field: usize, text: String },
    #[error("line {line}: start {start} is after end {end}")]
    InvalidInterval { line: usize, start: String, end: String },
    #[error("entity {name:?} is not in the knowledge graph")]
    UnknownEntity { name: String },
    #[error("{name} must be at least 1")]
    InvalidBound { name: &'static str },
}

/// Parse one time field.  `####`-style masks blank out unknown components;
/// a fully-masked or empty field is an absent time.
fn parse_time_field(raw: &str, line: usize, field: usize) -> Result<Option<TimePoint>, KgError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    let parts: Vec<&str> = trimmed.split('-').collect();
    let masked = |p: &str| !p.is_empty() && p.chars().all(|c| c == '#');
    let first_mask = parts.iter().position(|p| masked(p)).unwrap_or(parts.len());
    // Masks may only blank a suffix: "2011-##-03" is malformed.
    if parts[first_mask..].iter().any(|p| !masked(p)) {
        return Err(KgError::UnparsableTime { line, field, text: trimmed.to_string() });
    }
    if first_mask == 0 {
        return Ok(None);
    }
    let kept = parts[..first_mask].join("-");
    kept.parse::<TimePoint>()
        .map(Some)
        .map_err(|_| KgError::UnparsableTime { line, field, text: trimmed.to_string() })
}

/// Parse TSV text into a KG.  Blank lines and `#`-prefixed comment lines
/// are skipped; exact duplicate rows collapse to one.
pub fn load_kg(text: &str) -> Result<KnowledgeGraph, KgError> {
    let mut quintuples: Vec<Quintuple> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(KgError::MalformedRow { line: line_no, found: fields.len() });
        }
        let start = parse_time_field(fields[3], line_no, 4)?;
        let end = parse_time_field(fields[4], line_no, 5)?;
        if let (Some(s), Some(e)) = (start, end) {
            if s > e {
                return Err(KgError::InvalidInterval {
                    line: line_no,
                    start: s.to_string(),
                    end: e.to_string(),
                });
            }
        }
        let q = Quintuple {
            subject: fields[0].trim().to_string(),
            relation: fields[1].trim().to_string(),
            object: fields[2].trim().to_string(),
            start,
            end,
        };
        if !quintuples.contains(&q) {
            quintuples.push(q);
        }
    }
    let mut adjacency: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for q in &quintuples {
        adjacency.entry(q.subject.clone()).or_default().insert(q.object.clone());
        adjacency.entry(q.object.clone()).or_default().insert(q.subject.clone());
    }
    Ok(KnowledgeGraph { quintuples, adjacency })
}

pub fn load_kg_file(path: &Path) -> Result<KnowledgeGraph, std::io::Error> {
    let text = std::fs::read_to_string(path)?;
    load_kg(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}

impl KnowledgeGraph {
    pub fn quintuples(&self) -> &[Quintuple] {
        &self.quintuples
    }

    pub fn len(&self) -> usize {
        self.quintuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quintuples.is_empty()
    }

    pub fn contains_entity(&self, name: &str) -> bool {
        self.adjacency.contains_key(name)
    }

    pub fn neighbors(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.adjacency.get(name)
    }

    pub fn degree(&self, name: &str) -> usize {
        self.adjacency.get(name).map_or(0, BTreeSet::len)
    }

    /// All raw entity names, sorted.
    pub fn entities(&self) -> Vec<&str> {
        self.adjacency.keys().map(String::as_str).collect()
    }

    /// Display-form names of every entity — the vocabulary replacement
    /// names must avoid.
    pub fn display_vocabulary(&self) -> BTreeSet<String> {
        self.adjacency.keys().map(|e| display_entity(e)).collect()
    }

    /// Display-form entity name → type tag.  Subjects are people; object
    /// types follow the relation; an entity that is ever a subject stays a
    /// person.
    pub fn entity_types(&self) -> BTreeMap<String, String> {
        let mut types: BTreeMap<String, String> = BTreeMap::new();
        for q in &self.quintuples {
            types.entry(display_entity(&q.subject)).or_insert_with(|| "person".to_string());
        }
        for q in &self.quintuples {
            types
                .entry(display_entity(&q.object))
                .or_insert_with(|| object_type_for_relation(&q.relation).to_string());
        }
        types
    }
}

/// Raw KG names use underscores for spaces.
pub fn display_entity(raw: &str) -> String {
    raw.replace('_', " ").trim().to_string()
}

/// Relation verb phrases for the standard temporal-KG relations, with a
/// de-camel-casing fallback for anything else.
pub fn display_relation(raw: &str) -> String {
    match raw {
        "wasBornIn" => "was born in",
        "diedIn" => "died in",
        "isMarriedTo" => "was married to",
        "owns" => "owned",
        "hasWonPrize" => "won prize",
        "created" => "created",
        "worksAt" => "worked at",
        "playsFor" => "played for",
        "graduatedFrom" => "graduated from",
        "isAffiliatedTo" => "was affiliated to",
        other => {
            let mut out = String::with_capacity(other.len() + 4);
            for (i, c) in other.chars().enumerate() {
                if c.is_uppercase() && i > 0 {
                    out.push(' ');
                }
                out.extend(c.to_lowercase());
            }
            return out;
        }
    }
    .to_string()
}

/// Type tag of a relation's object position.
pub fn object_type_for_relation(relation: &str) -> &'static str {
    match relation {
        "wasBornIn" | "diedIn" | "livesIn" | "isCitizenOf" => "place",
        "isMarriedTo" | "hasChild" | "influences" | "hasAcademicAdvisor" => "person",
        "worksAt" | "playsFor" | "isAffiliatedTo" | "graduatedFrom" => "organization",
        "hasWonPrize" => "prize",
        "owns" | "created" => "creative_work",
        _ => "entity",
    }
}

/// Entities within `max_hops` of `seed`, by breadth-first search over the
/// undirected adjacency.
fn reachable_within(kg: &KnowledgeGraph, seed: &str, max_hops: usize) -> BTreeSet<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    seen.insert(seed.to_string(), 0);
    queue.push_back(seed.to_string());
    while let Some(current) = queue.pop_front() {
        let dist = seen[&current];
        if dist == max_hops {
            continue;
        }
        if let Some(neighbors) = kg.neighbors(&current) {
            for n in neighbors {
                if !seen.contains_key(n) {
                    seen.insert(n.clone(), dist + 1);
                    queue.push_back(n.clone());
                }
            }
        }
    }
    seen.into_keys().collect()
}

/// Extract the neighborhood of `seed` as a temporal graph.
///
/// Keeps quintuples whose subject *and* object both lie within `max_hops`,
/// truncates to the `max_events` events with the earliest known times, and
/// renders names and relations in display form.  When the same
/// (subject, relation, object) recurs, the earliest-starting instance wins,
/// because a display event key can carry only one interval.
pub fn extract_subgraph(
    kg: &KnowledgeGraph,
    seed: &str,
    max_hops: usize,
    max_events: usize,
) -> Result<TemporalGraph, KgError> {
    if max_hops < 1 {
        return Err(KgError::InvalidBound { name: "max_hops" });
    }
    if max_events < 1 {
        return Err(KgError::InvalidBound { name: "max_events" });
    }
    if !kg.contains_entity(seed) {
        return Err(KgError::UnknownEntity { name: seed.to_string() });
    }
    let reachable = reachable_within(kg, seed, max_hops);

    // One event per display key; earliest start wins on collision.
    let mut events: Vec<(EventKey, Option<TimePoint>, Option<TimePoint>)> = Vec::new();
    for q in kg.quintuples() {
        if !(reachable.contains(&q.subject) && reachable.contains(&q.object)) {
            continue;
        }
        if q.start.is_none() && q.end.is_none() {
            continue; // nothing to place on a timeline
        }
        let key = EventKey {
            subject: display_entity(&q.subject),
            relation: display_relation(&q.relation),
            object: display_entity(&q.object),
        };
        match events.iter_mut().find(|(k, _, _)| *k == key) {
            Some(existing) => {
                let earlier = match (existing.1, q.start) {
                    (Some(a), Some(b)) => b < a,
                    (None, Some(_)) => true,
                    _ => false,
                };
                if earlier {
                    *existing = (key, q.start, q.end);
                }
            }
            None => events.push((key, q.start, q.end)),
        }
    }

    // Earliest `max_events` events by first known time; ties keep source
    // order.
    let mut order: Vec<usize> = (0..events.len()).collect();
    order.sort_by_key(|&i| (events[i].1.or(events[i].2), i));
    order.truncate(max_events);
    order.sort_unstable();

    let mut facts = Vec::new();
    for i in order {
        let (key, start, end) = &events[i];
        if let Some(s) = start {
            facts.push(TemporalFact::new(key.clone(), Endpoint::Start, *s));
        }
        if let Some(e) = end {
            facts.push(TemporalFact::new(key.clone(), Endpoint::End, *e));
        }
    }
    Ok(sort_chronological(facts).expect("KG-derived facts are valid"))
}

/// Plan a corpus: choose seed entities by descending degree (ties
/// alphabetical), skipping entities already covered by an earlier
/// subgraph, and extract each seed's neighborhood.  Empty extractions are
/// skipped; `limit` caps the number of subgraphs.
pub fn plan_subgraphs(
    kg: &KnowledgeGraph,
    max_hops: usize,
    max_events: usize,
    limit: Option<usize>,
) -> Result<Vec<(String, TemporalGraph)>, KgError> {
    let mut by_degree: Vec<&str> = kg.entities();
    by_degree.sort_by_key(|e| (std::cmp::Reverse(kg.degree(e)), e.to_string()));

    let mut covered: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for seed in by_degree {
        if covered.contains(seed) {
            continue;
        }
        if let Some(limit) = limit {
            if out.len() == limit {
                break;
            }
        }
        let graph = extract_subgraph(kg, seed, max_hops, max_events)?;
        covered.extend(reachable_within(kg, seed, max_hops));
        if !graph.is_empty() {
            out.push((seed.to_string(), graph));
        }
    }
    Ok(out)
}
