//! Temporal-graph extraction from free text.
//!
//! For corpora that ship stories and QAs but no graph, the graph is
//! recovered in stages: pull the entities and relations the questions ask
//! about (rules first, backend fallback), identify and normalize every
//! time expression in the story, prompt a backend to lay the events out on
//! those time points, and verify the result by answering the QAs over it.
//! Each stage is independent per story, so batches parallelize under a
//! bounded in-flight budget.

use crate::qa::QAItem;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use tgkit_backend::{Backend, BackendError, GenParams, PromptError, PromptRegistry};
use tgkit_core::{
    EventKey, TemporalFact, TemporalGraph, TimePoint, month_from_name, parse_time_text,
    parse_timeline, sort_chronological, split_phrase, Endpoint, MONTH_NAMES,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Text2TgError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("no extractor can handle {question:?}: configure rules that match or a backend")]
    NoExtractorConfigured { question: String },
    #[error("cannot recover a timeline: {reason}")]
    UnparsableTimeline { reason: String },
    #[error("bad extraction rule {pattern:?}: {source}")]
    BadRule {
        pattern: String,
        #[source]
        source: regex::Error,
    },
}

/// One time mention found in text, with its normalized form when the
/// surface parses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeExpression {
    pub surface: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized: Option<TimePoint>,
    pub valid: bool,
}

impl TimeExpression {
    /// Normalize a raw surface; `valid` records whether that succeeded.
    pub fn parse(surface: &str) -> Self {
        let surface = clean_surface(surface);
        let normalized = normalize_time_expression(&surface);
        TimeExpression { valid: normalized.is_some(), surface, normalized }
    }
}

fn clean_surface(raw: &str) -> String {
    let mut text = raw;
    loop {
        let trimmed = text
            .trim_start_matches(|c: char| c.is_whitespace() || "-*•'\"".contains(c))
            .trim_end_matches(|c: char| c.is_whitespace() || "'\".,;:!?".contains(c));
        if trimmed == text {
            break;
        }
        text = trimmed;
    }
    let cleaned = text.replace(['\u{2013}', '\u{2014}'], "-");
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalize one time expression.  Handles everything the timeline grammar
/// renders (years, "June 1994", "3 April 1909", decades with early/mid/late
/// qualifiers, year ranges) plus looser text forms: three-letter months,
/// "April 3, 1909" ordering, and dash ranges with spacing or en dashes.
pub fn normalize_time_expression(surface: &str) -> Option<TimePoint> {
    let text = clean_surface(surface);
    if text.is_empty() {
        return None;
    }
    if let Some(tp) = parse_time_text(&text) {
        return Some(tp);
    }
    let words: Vec<&str> = text.split_whitespace().collect();
    match words.as_slice() {
        [single] => {
            let (lo, hi) = single.split_once('-')?;
            TimePoint::approx(lo.parse().ok()?, hi.parse().ok()?).ok()
        }
        // "1931 - 1934": spaced ranges, including former en dashes.
        [lo, "-", hi] => TimePoint::approx(lo.parse().ok()?, hi.parse().ok()?).ok(),
        // "April 3, 1909": month-first date order.
        [month, day, year] => {
            let m = month_from_name(month)?;
            let d: u8 = day.trim_end_matches(',').parse().ok()?;
            let y: i32 = year.parse().ok()?;
            TimePoint::day_of(y, m, d).ok()
        }
        _ => None,
    }
}

fn month_alternation() -> String {
    let mut names: Vec<String> = MONTH_NAMES.iter().map(|m| m.to_string()).collect();
    names.extend(MONTH_NAMES.iter().map(|m| format!("{}\\.?", &m[..3])));
    names.join("|")
}

fn time_scan_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let m = month_alternation();
        let pattern = format!(
            r"\b(?:\d{{1,2}} (?:{m}) \d{{4}}|(?:{m}) \d{{1,2}}, \d{{4}}|(?:{m}) \d{{4}}|(?:early|mid|late) \d{{3}}0s|\d{{3}}0s|\d{{4}})\b"
        );
        Regex::new(&pattern).expect("scan pattern compiles")
    })
}

/// Scan text for time expressions by rule, in order of appearance,
/// deduplicated by surface.
pub fn scan_time_expressions(text: &str) -> Vec<TimeExpression> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for found in time_scan_regex().find_iter(text) {
        let expr = TimeExpression::parse(found.as_str());
        if expr.valid && seen.insert(expr.surface.clone()) {
            out.push(expr);
        }
    }
    out
}

/// Identify the story's valid time expressions.  With a backend, the
/// extraction prompt runs first and its output is rule-normalized with
/// invalid candidates filtered out; without one, a regex scan over the
/// story stands in for offline runs.
pub fn identify_time_expressions(
    story: &str,
    backend: Option<&dyn Backend>,
    registry: &PromptRegistry,
    params: &GenParams,
) -> Result<Vec<TimeExpression>, Text2TgError> {
    let Some(backend) = backend else {
        return Ok(scan_time_expressions(story));
    };
    let mut slots = BTreeMap::new();
    slots.insert("story".to_string(), story.to_string());
    let prompt = registry.render("time_extract", &slots)?;
    let output = backend.generate(&prompt, params)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for candidate in split_expression_list(&output) {
        let expr = TimeExpression::parse(&candidate);
        if expr.valid && seen.insert(expr.surface.clone()) {
            out.push(expr);
        }
    }
    Ok(out)
}

/// Split a backend's expression list into candidate surfaces: quoted spans
/// when the output uses quotes, otherwise one candidate per line.
fn split_expression_list(output: &str) -> Vec<String> {
    if output.contains('\'') {
        output.split('\'').skip(1).step_by(2).map(|s| s.to_string()).collect()
    } else {
        output.lines().map(|l| l.to_string()).filter(|l| !l.trim().is_empty()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionSource {
    Rule,
    Backend,
}

/// Entities and relations the QAs ask about, deduplicated in first-seen
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    pub source: ExtractionSource,
}

/// A question pattern with `entity` and/or `relation` capture groups.
#[derive(Debug, Clone)]
pub struct ExtractionRule {
    pattern: Regex,
}

impl ExtractionRule {
    pub fn new(pattern: &str) -> Result<Self, Text2TgError> {
        let compiled = Regex::new(pattern).map_err(|source| Text2TgError::BadRule {
            pattern: pattern.to_string(),
            source,
        })?;
        Ok(ExtractionRule { pattern: compiled })
    }

    /// Rules covering common which/where/what question shapes.
    pub fn defaults() -> Vec<ExtractionRule> {
        [
            r"^Which (?P<relation>[a-z][a-z ]*?) did (?P<entity>[A-Z][A-Za-z0-9 .'-]*?) (?:hold|play|win|take|attend)\b",
            r"^Where did (?P<entity>[A-Z][A-Za-z0-9 .'-]*?) (?P<relation>work|live|study)\b",
            r"^What was (?P<entity>[A-Z][A-Za-z0-9 .'-]*?)'s (?P<relation>[a-z][a-z ]*[a-z])\b",
        ]
        .iter()
        .map(|p| ExtractionRule::new(p).expect("default rules compile"))
        .collect()
    }

    fn apply(&self, question: &str) -> Option<(Option<String>, Option<String>)> {
        let caps = self.pattern.captures(question)?;
        let get = |name: &str| caps.name(name).map(|m| m.as_str().trim().to_string());
        Some((get("entity"), get("relation")))
    }
}

fn push_unique(list: &mut Vec<String>, value: Option<String>) {
    if let Some(value) = value {
        if !value.is_empty() && !list.contains(&value) {
            list.push(value);
        }
    }
}

/// Extract the entities and relations the questions mention.  Every
/// question tries the rules first; the backend handles only the leftovers.
pub fn extract_entities_relations(
    questions: &[String],
    rules: &[ExtractionRule],
    backend: Option<&dyn Backend>,
    params: &GenParams,
) -> Result<ExtractionResult, Text2TgError> {
    let mut entities = Vec::new();
    let mut relations = Vec::new();
    let mut source = ExtractionSource::Rule;
    for question in questions {
        if let Some((entity, relation)) = rules.iter().find_map(|r| r.apply(question)) {
            push_unique(&mut entities, entity);
            push_unique(&mut relations, relation);
            continue;
        }
        let Some(backend) = backend else {
            return Err(Text2TgError::NoExtractorConfigured { question: question.clone() });
        };
        let prompt = format!(
            "{question}\n\nExtract the entity and the relation asked about in the above \
             question. Answer as 'entity: <entity>; relation: <relation>'."
        );
        let output = backend.generate(&prompt, params)?;
        let (entity, relation) = parse_entity_relation(&output).ok_or_else(|| {
            BackendError::MalformedResponse {
                reason: format!("no entity/relation markers in {output:?}"),
            }
        })?;
        push_unique(&mut entities, entity);
        push_unique(&mut relations, relation);
        source = ExtractionSource::Backend;
    }
    Ok(ExtractionResult { entities, relations, source })
}

fn parse_entity_relation(output: &str) -> Option<(Option<String>, Option<String>)> {
    let grab = |marker: &str| -> Option<String> {
        let lower = output.to_lowercase();
        let start = lower.find(marker)? + marker.len();
        let rest = &output[start..];
        let end = rest.find([';', '\n']).unwrap_or(rest.len());
        let value = rest[..end].trim().trim_matches('\'').trim().to_string();
        (!value.is_empty()).then_some(value)
    };
    let entity = grab("entity:");
    let relation = grab("relation:");
    (entity.is_some() || relation.is_some()).then_some((entity, relation))
}

/// One in-context demonstration for graph construction: a worked story
/// with its expected timeline text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructDemo {
    pub story: String,
    pub keyword: String,
    #[serde(default)]
    pub time_points: Vec<String>,
    pub timeline: String,
}

fn construct_keyword(entities: &[String], relations: &[String]) -> String {
    match (entities.first(), relations.first()) {
        (Some(e), Some(r)) => format!("{e}'s {r}"),
        (Some(e), None) => e.clone(),
        (None, Some(r)) => r.clone(),
        (None, None) => "the story".to_string(),
    }
}

fn render_construct_prompt(
    registry: &PromptRegistry,
    story: &str,
    keyword: &str,
    time_points: &[String],
) -> Result<String, PromptError> {
    let mut slots = BTreeMap::new();
    slots.insert("story".to_string(), story.to_string());
    slots.insert("keyword".to_string(), keyword.to_string());
    if time_points.is_empty() {
        registry.render("tg_construct_ordinal", &slots)
    } else {
        slots.insert("time_points".to_string(), time_points.join(", "));
        registry.render("tg_construct", &slots)
    }
}

/// The full construction prompt: worked demonstrations, then the story
/// under extraction.
pub fn construct_prompt(
    registry: &PromptRegistry,
    story: &str,
    entities: &[String],
    relations: &[String],
    times: &[TimeExpression],
    demos: &[ConstructDemo],
) -> Result<String, PromptError> {
    let mut blocks = Vec::new();
    for demo in demos {
        let prompt =
            render_construct_prompt(registry, &demo.story, &demo.keyword, &demo.time_points)?;
        blocks.push(format!("{prompt}\n{}", demo.timeline.trim_end()));
    }
    let surfaces: Vec<String> =
        times.iter().filter(|t| t.valid).map(|t| t.surface.clone()).collect();
    blocks.push(render_construct_prompt(
        registry,
        story,
        &construct_keyword(entities, relations),
        &surfaces,
    )?);
    Ok(blocks.join("\n\n"))
}

/// Convert a narrative sentence into an event key.  The usual
/// subject/relation/object split applies; sentences with no trailing
/// object ("Knox Cunningham passed away") move the predicate's last word
/// into the object position.
pub fn event_from_sentence(sentence: &str) -> Result<EventKey, String> {
    let sentence = sentence.trim().trim_end_matches('.');
    match split_phrase(sentence) {
        Ok(key) => Ok(key),
        Err(_) => {
            let tokens: Vec<&str> = sentence.split_whitespace().collect();
            let is_name = |t: &str| {
                t.chars().next().is_some_and(|c| c.is_uppercase() || c.is_ascii_digit())
            };
            let subject_len = tokens.iter().take_while(|t| is_name(t)).count();
            if subject_len == 0 || tokens.len() < subject_len + 2 {
                return Err(format!("cannot read {sentence:?} as an event"));
            }
            EventKey::new(
                tokens[..subject_len].join(" "),
                tokens[subject_len..tokens.len() - 1].join(" "),
                tokens[tokens.len() - 1].to_string(),
            )
            .map_err(|e| e.to_string())
        }
    }
}

fn sentence_endpoint(sentence: &str) -> Endpoint {
    let lower = sentence.to_lowercase();
    let has_word = |w: &str| lower.split(|c: char| !c.is_alphanumeric()).any(|t| t == w);
    if has_word("until") || has_word("ended") || has_word("ends") {
        Endpoint::End
    } else {
        Endpoint::Start
    }
}

/// Parse "<time>: <sentence>" bullet lines into facts, one per line.
pub fn parse_bullet_lines(text: &str) -> Result<Vec<TemporalFact>, String> {
    let mut facts = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (time_part, sentence) = line
            .split_once(": ")
            .ok_or_else(|| format!("line {}: no '<time>: <sentence>' separator", idx + 1))?;
        let time = normalize_time_expression(time_part)
            .ok_or_else(|| format!("line {}: unparsable time {time_part:?}", idx + 1))?;
        let key = event_from_sentence(sentence).map_err(|e| format!("line {}: {e}", idx + 1))?;
        facts.push(TemporalFact::new(key, sentence_endpoint(sentence), time));
    }
    if facts.is_empty() {
        return Err("no dated lines".to_string());
    }
    Ok(facts)
}

fn parse_construct_output(output: &str) -> Result<Vec<TemporalFact>, String> {
    match parse_timeline(output) {
        Ok(graph) if !graph.is_empty() => Ok(graph.facts().to_vec()),
        Ok(_) => Err("backend returned no facts".to_string()),
        Err(timeline_err) => parse_bullet_lines(output).map_err(|bullet_err| {
            format!("not fact lines ({timeline_err}) nor dated bullets ({bullet_err})")
        }),
    }
}

fn parse_ordinal_output(output: &str) -> Result<Vec<TemporalFact>, String> {
    let mut facts = Vec::new();
    for line in output.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let sentence = line
            .split_once(['.', ')'])
            .filter(|(prefix, _)| prefix.chars().all(|c| c.is_ascii_digit()))
            .map(|(_, rest)| rest)
            .unwrap_or(line);
        let key = event_from_sentence(sentence)?;
        let order = facts.len() as i32 + 1;
        facts.push(TemporalFact::new(key, Endpoint::Start, TimePoint::year_of(order)));
    }
    if facts.is_empty() {
        return Err("no ordered events".to_string());
    }
    Ok(facts)
}

/// Build a temporal graph for the story by prompting the backend.
///
/// With time expressions, the output (fact-line or dated-bullet form) is
/// constrained to those time points: facts at other times are discarded.
/// Without any, the ordinal prompt variant asks only for event order and
/// the resulting facts carry synthetic positions 1..n.
pub fn construct_tg(
    backend: &dyn Backend,
    registry: &PromptRegistry,
    story: &str,
    entities: &[String],
    relations: &[String],
    times: &[TimeExpression],
    demos: &[ConstructDemo],
    params: &GenParams,
) -> Result<TemporalGraph, Text2TgError> {
    if story.trim().is_empty() {
        return Err(Text2TgError::UnparsableTimeline { reason: "empty story".to_string() });
    }
    let prompt = construct_prompt(registry, story, entities, relations, times, demos)?;
    let output = backend.generate(&prompt, params)?;
    let allowed: BTreeSet<TimePoint> = times.iter().filter_map(|t| t.normalized).collect();
    let mut facts = if allowed.is_empty() {
        parse_ordinal_output(&output)
    } else {
        parse_construct_output(&output)
    }
    .map_err(|reason| Text2TgError::UnparsableTimeline { reason })?;
    if !allowed.is_empty() {
        facts.retain(|f| allowed.contains(&f.time));
        if facts.is_empty() {
            return Err(Text2TgError::UnparsableTimeline {
                reason: "no facts within the allowed time points".to_string(),
            });
        }
    }
    sort_chronological(facts)
        .map_err(|e| Text2TgError::UnparsableTimeline { reason: e.to_string() })
}

/// A QA the backend answered differently from the gold when reading the
/// constructed graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationFlag {
    pub qa_id: String,
    pub event: EventKey,
    pub expected: Vec<String>,
    pub model_answer: String,
}

fn flag_event(graph: &TemporalGraph, item: &QAItem) -> EventKey {
    item.slots
        .values()
        .find_map(|v| v.as_event().cloned())
        .or_else(|| graph.event_keys().first().cloned())
        .expect("verifiable items reference at least one event")
}

/// Answer each QA over the rendered graph; answers that miss every gold
/// (after normalization) become flags.  Probes run concurrently, at most
/// `max_in_flight` outstanding at a time.
pub fn verify_tg(
    backend: &dyn Backend,
    registry: &PromptRegistry,
    graph: &TemporalGraph,
    qas: &[QAItem],
    params: &GenParams,
    max_in_flight: usize,
) -> Result<Vec<VerificationFlag>, Text2TgError> {
    let timeline = tgkit_core::render_timeline(graph);
    let probes = run_bounded(qas, max_in_flight, |item| -> Result<_, Text2TgError> {
        let mut slots = BTreeMap::new();
        slots.insert("timeline".to_string(), timeline.clone());
        slots.insert("question".to_string(), item.question.clone());
        let prompt = registry.render("tg_verify", &slots)?;
        let answer = backend.generate(&prompt, params)?;
        let normalized = crate::metrics::normalize_answer(&answer);
        let hit = item.golds.iter().any(|g| crate::metrics::normalize_answer(g) == normalized);
        Ok((!hit).then(|| VerificationFlag {
            qa_id: item.id.clone(),
            event: flag_event(graph, item),
            expected: item.golds.clone(),
            model_answer: answer.trim().to_string(),
        }))
    });
    let mut flags = Vec::new();
    for probe in probes {
        if let Some(flag) = probe? {
            flags.push(flag);
        }
    }
    Ok(flags)
}

/// Clear the flag for one QA after a human accepts the mismatch; returns
/// whether a flag was cleared.
pub fn accept_flag(flags: &mut Vec<VerificationFlag>, qa_id: &str) -> bool {
    let before = flags.len();
    flags.retain(|f| f.qa_id != qa_id);
    flags.len() < before
}

/// Run `f` over every item with at most `max_in_flight` invocations
/// outstanding at once, preserving input order in the results.
pub fn run_bounded<T, R, F>(items: &[T], max_in_flight: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let bound = max_in_flight.max(1);
    let f = &f;
    let mut out = Vec::with_capacity(items.len());
    for wave in items.chunks(bound) {
        out.extend(std::thread::scope(|scope| {
            let handles: Vec<_> = wave.iter().map(|item| scope.spawn(move || f(item))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("bounded worker panicked"))
                .collect::<Vec<R>>()
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qa::{self, QaConfig};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use tgkit_backend::testing::ScriptedBackend;
    use tgkit_core::{fixtures, render_time_text};

    fn registry() -> PromptRegistry {
        PromptRegistry::builtin()
    }

    const STORY: &str = "Sir Samuel Knox Cunningham, 1st Baronet, QC (3 April 1909 \u{2013} 29 \
                         July 1976) was a Northern Irish barrister, businessman and politician. \
                         He studied law in the 1930s and was called to the Bar in 1939.";

    const QUESTION: &str = "Which position did Knox Cunningham hold from May 1955 to Apr 1956?";

    const BULLETS: &str = "3 April 1909: Knox Cunningham was born.\n\
                           1930s: He studied law and began his legal career.\n\
                           1935: On 2 July 1935, he married Dorothy Enid Riley JP.\n\
                           1939: Cunningham was called to the Bar by the Middle Temple.\n\
                           1942: He was called to the Bar in Northern Ireland.\n\
                           1943: Cunningham fought the Belfast West by-election.\n\
                           1945: He contested the same seat in the general election.\n\
                           1947: Knox Cunningham became involved with the World Alliance of \
                           YMCAs.\n\
                           1949: He became Chairman of the National Council of the YMCA.\n\
                           1954: Cunningham was elected to Orpington Urban District Council.\n\
                           29 July 1976: Knox Cunningham passed away.";

    const ALLOWED: [&str; 10] = [
        "3 April 1909",
        "1930s",
        "1939",
        "1942",
        "1943",
        "1945",
        "1947",
        "1949",
        "1954",
        "29 July 1976",
    ];

    fn allowed_times() -> Vec<TimeExpression> {
        ALLOWED.iter().map(|s| TimeExpression::parse(s)).collect()
    }

    #[test]
    fn normalization_covers_the_published_forms() {
        let cases = [
            ("1973", TimePoint::year_of(1973)),
            ("June 1994", TimePoint::month_of(1994, 6).unwrap()),
            ("3 April 1909", TimePoint::day_of(1909, 4, 3).unwrap()),
            ("Apr 1956", TimePoint::month_of(1956, 4).unwrap()),
            ("May 1955", TimePoint::month_of(1955, 5).unwrap()),
            ("April 3, 1909", TimePoint::day_of(1909, 4, 3).unwrap()),
            ("late 1980s", TimePoint::approx(1987, 1989).unwrap()),
            ("early 1980s", TimePoint::approx(1980, 1983).unwrap()),
            ("mid 1980s", TimePoint::approx(1984, 1986).unwrap()),
            ("1930s", TimePoint::approx(1930, 1939).unwrap()),
            ("1931-1934", TimePoint::approx(1931, 1934).unwrap()),
            ("1931 \u{2013} 1934", TimePoint::approx(1931, 1934).unwrap()),
            ("'June 1994',", TimePoint::month_of(1994, 6).unwrap()),
        ];
        for (surface, want) in cases {
            assert_eq!(normalize_time_expression(surface), Some(want), "surface {surface:?}");
        }
        assert_eq!(normalize_time_expression("someday"), None);
        assert_eq!(normalize_time_expression("Smarch 1999"), None);
        assert_eq!(normalize_time_expression(""), None);

        let bad = TimeExpression::parse("someday soon");
        assert!(!bad.valid);
        assert!(bad.normalized.is_none());
    }

    #[test]
    fn normalization_is_idempotent_through_rendering() {
        for surface in
            ["1973", "June 1994", "3 April 1909", "Apr 1956", "late 1980s", "1931-1934", "1930s"]
        {
            let first = normalize_time_expression(surface).unwrap();
            let again = normalize_time_expression(&render_time_text(&first)).unwrap();
            assert_eq!(first, again, "surface {surface:?}");
        }
    }

    #[test]
    fn rule_scan_finds_expressions_in_order_and_dedups() {
        let exprs = scan_time_expressions(STORY);
        let surfaces: Vec<&str> = exprs.iter().map(|e| e.surface.as_str()).collect();
        assert_eq!(surfaces, ["3 April 1909", "29 July 1976", "1930s", "1939"]);
        assert!(exprs.iter().all(|e| e.valid));

        let twice = scan_time_expressions("In 1939 and again in 1939.");
        assert_eq!(twice.len(), 1);
    }

    #[test]
    fn extraction_prefers_rules_and_falls_back_to_the_backend() {
        let rules = ExtractionRule::defaults();
        let params = GenParams::with_seed(0);

        let by_rule = extract_entities_relations(
            &[QUESTION.to_string()],
            &rules,
            None,
            &params,
        )
        .unwrap();
        assert_eq!(by_rule.entities, ["Knox Cunningham"]);
        assert_eq!(by_rule.relations, ["position"]);
        assert_eq!(by_rule.source, ExtractionSource::Rule);

        let backend = ScriptedBackend::new()
            .on_generate("Tell me about", "entity: Ada Lovelace; relation: profession")
            .default_response("entity: ?; relation: ?");
        let mixed = extract_entities_relations(
            &[QUESTION.to_string(), "Tell me about her profession?".to_string()],
            &rules,
            Some(&backend),
            &params,
        )
        .unwrap();
        assert_eq!(mixed.entities, ["Knox Cunningham", "Ada Lovelace"]);
        assert_eq!(mixed.relations, ["position", "profession"]);
        assert_eq!(mixed.source, ExtractionSource::Backend);

        let err = extract_entities_relations(
            &["Tell me about her profession?".to_string()],
            &rules,
            None,
            &params,
        )
        .unwrap_err();
        assert!(matches!(err, Text2TgError::NoExtractorConfigured { .. }));
    }

    #[test]
    fn dual_extractors_agree_on_rule_covered_questions() {
        let questions = vec![QUESTION.to_string()];
        let params = GenParams::with_seed(0);
        let by_rule =
            extract_entities_relations(&questions, &ExtractionRule::defaults(), None, &params)
                .unwrap();
        let backend = ScriptedBackend::new()
            .default_response("entity: Knox Cunningham; relation: position");
        let by_backend = extract_entities_relations(&questions, &[], Some(&backend), &params)
            .unwrap();
        assert_eq!(by_rule.entities, by_backend.entities);
        assert_eq!(by_rule.relations, by_backend.relations);
        assert_eq!(by_backend.source, ExtractionSource::Backend);
    }

    #[test]
    fn backend_time_identification_filters_invalid_output() {
        let backend = ScriptedBackend::new()
            .default_response("'June 1994', '1973', 'late 1980s', 'banana'");
        let exprs = identify_time_expressions(
            "story",
            Some(&backend),
            &registry(),
            &GenParams::with_seed(0),
        )
        .unwrap();
        let surfaces: Vec<&str> = exprs.iter().map(|e| e.surface.as_str()).collect();
        assert_eq!(surfaces, ["June 1994", "1973", "late 1980s"]);
        assert!(exprs.iter().all(|e| e.valid && e.normalized.is_some()));

        let offline =
            identify_time_expressions(STORY, None, &registry(), &GenParams::with_seed(0)).unwrap();
        assert_eq!(offline, scan_time_expressions(STORY));
    }

    #[test]
    fn construction_prompt_names_keyword_and_allowed_time_points() {
        let prompt = construct_prompt(
            &registry(),
            STORY,
            &["Knox Cunningham".to_string()],
            &["position".to_string()],
            &allowed_times(),
            &[],
        )
        .unwrap();
        assert!(prompt.starts_with(STORY));
        assert!(prompt.ends_with(
            "Construct a timeline for Knox Cunningham's position. You should only consider \
             these time points (3 April 1909, 1930s, 1939, 1942, 1943, 1945, 1947, 1949, 1954, \
             29 July 1976)."
        ));
    }

    #[test]
    fn bullet_output_parses_fully_and_filters_to_allowed_times() {
        let parsed = parse_bullet_lines(BULLETS).unwrap();
        assert_eq!(parsed.len(), 11);
        assert!(parsed.iter().all(|f| f.endpoint == Endpoint::Start));

        let backend = ScriptedBackend::new().default_response(BULLETS);
        let graph = construct_tg(
            &backend,
            &registry(),
            STORY,
            &["Knox Cunningham".to_string()],
            &["position".to_string()],
            &allowed_times(),
            &[],
            &GenParams::with_seed(0),
        )
        .unwrap();
        // The 1935 marriage is outside the allowed time points.
        assert_eq!(graph.len(), 10);
        assert!(graph.facts().iter().all(|f| f.time != TimePoint::year_of(1935)));
        let born = graph
            .facts()
            .iter()
            .find(|f| f.time == TimePoint::day_of(1909, 4, 3).unwrap())
            .unwrap();
        assert_eq!(born.key.subject, "Knox Cunningham");
        assert_eq!(born.key.phrase_inner(), "Knox Cunningham was born");
    }

    #[test]
    fn fact_line_output_is_also_accepted() {
        let backend = ScriptedBackend::new().default_response(
            "(Ada Lovelace annotated the Analytical Engine) starts at 1842\n\
             (Ada Lovelace annotated the Analytical Engine) ends at 1843",
        );
        let times =
            vec![TimeExpression::parse("1842"), TimeExpression::parse("1843")];
        let graph = construct_tg(
            &backend,
            &registry(),
            "story",
            &["Ada Lovelace".to_string()],
            &[],
            &times,
            &[],
            &GenParams::with_seed(0),
        )
        .unwrap();
        assert_eq!(graph.len(), 2);
        assert_eq!(graph.intervals().len(), 1);
    }

    #[test]
    fn demos_precede_the_real_prompt() {
        let demo = ConstructDemo {
            story: "Demo story.".to_string(),
            keyword: "Liam Mitchell's life".to_string(),
            time_points: vec!["1885".to_string()],
            timeline: "(Liam Mitchell was born in Harrison) starts at 1885\n".to_string(),
        };
        let prompt = construct_prompt(
            &registry(),
            STORY,
            &["Knox Cunningham".to_string()],
            &["position".to_string()],
            &allowed_times(),
            &[demo],
        )
        .unwrap();
        assert!(prompt.starts_with("Demo story.\n\nConstruct a timeline for Liam Mitchell's \
                                    life. You should only consider these time points (1885).\n\
                                    (Liam Mitchell was born in Harrison) starts at 1885"));
        let demo_pos = prompt.find("Demo story.").unwrap();
        let real_pos = prompt.find("Sir Samuel Knox Cunningham").unwrap();
        assert!(demo_pos < real_pos);
    }

    #[test]
    fn missing_time_points_fall_back_to_ordinal_order() {
        let backend = ScriptedBackend::new()
            .on_generate(
                "Provide the temporal order",
                "1. Ada Lovelace met Charles Babbage\n2. Ada Lovelace wrote the notes",
            )
            .default_response("unused");
        let graph = construct_tg(
            &backend,
            &registry(),
            "story",
            &["Ada Lovelace".to_string()],
            &[],
            &[],
            &[],
            &GenParams::with_seed(0),
        )
        .unwrap();
        assert_eq!(graph.len(), 2);
        assert_eq!(graph.facts()[0].time, TimePoint::year_of(1));
        assert_eq!(graph.facts()[0].key.phrase_inner(), "Ada Lovelace met Charles Babbage");
        assert_eq!(graph.facts()[1].time, TimePoint::year_of(2));
    }

    #[test]
    fn empty_stories_and_garbage_output_are_rejected() {
        let backend = ScriptedBackend::new().default_response(BULLETS);
        let err = construct_tg(
            &backend,
            &registry(),
            "   ",
            &[],
            &[],
            &allowed_times(),
            &[],
            &GenParams::with_seed(0),
        )
        .unwrap_err();
        assert!(matches!(err, Text2TgError::UnparsableTimeline { .. }));

        let garbage = ScriptedBackend::new().default_response("no timeline here");
        let err = construct_tg(
            &garbage,
            &registry(),
            STORY,
            &[],
            &[],
            &allowed_times(),
            &[],
            &GenParams::with_seed(0),
        )
        .unwrap_err();
        assert!(matches!(err, Text2TgError::UnparsableTimeline { .. }));

        // Every produced fact sits outside the allowed set.
        let outside = ScriptedBackend::new().default_response("1890: Someone did something.");
        let err = construct_tg(
            &outside,
            &registry(),
            STORY,
            &[],
            &[],
            &allowed_times(),
            &[],
            &GenParams::with_seed(0),
        )
        .unwrap_err();
        assert!(matches!(err, Text2TgError::UnparsableTimeline { .. }));
    }

    #[test]
    fn until_and_ended_cues_mark_end_facts() {
        let facts =
            parse_bullet_lines("1942: John Thompson owned Pearl Network until he sold it.")
                .unwrap();
        assert_eq!(facts[0].endpoint, Endpoint::End);
        let facts = parse_bullet_lines("1957: The marriage of Sophia Parker ended.").unwrap();
        assert_eq!(facts[0].endpoint, Endpoint::End);
        let facts = parse_bullet_lines("1942: John Thompson owned Pearl Network.").unwrap();
        assert_eq!(facts[0].endpoint, Endpoint::Start);
    }

    #[test]
    fn verification_flags_only_mismatched_answers() {
        let graph = fixtures::media_mogul_graph();
        let qas = qa::generate_qas(&graph, &QaConfig::with_seed(11));
        assert!(qas.len() >= 4);
        // Echo the gold for every question except two chosen ones.
        let wrong: Vec<&QAItem> = vec![&qas[1], &qas[3]];
        let mut backend = ScriptedBackend::new().default_response("unscripted");
        for item in &qas {
            let answer = if wrong.iter().any(|w| w.id == item.id) {
                "not the answer".to_string()
            } else {
                item.golds[0].clone()
            };
            backend = backend.on_generate(&item.question, &answer);
        }
        let mut flags = verify_tg(
            &backend,
            &registry(),
            &graph,
            &qas,
            &GenParams::with_seed(0),
            4,
        )
        .unwrap();
        assert_eq!(flags.len(), 2);
        assert_eq!(flags[0].qa_id, qas[1].id);
        assert_eq!(flags[1].qa_id, qas[3].id);
        assert_eq!(flags[0].expected, qas[1].golds);
        assert_eq!(flags[0].model_answer, "not the answer");
        assert_eq!(Some(&flags[0].event), qas[1].slots.values().find_map(|v| v.as_event()));

        assert!(accept_flag(&mut flags, &qas[1].id.clone()));
        assert_eq!(flags.len(), 1);
        assert!(!accept_flag(&mut flags, "no-such-qa"));
        assert_eq!(flags.len(), 1);
    }

    #[test]
    fn flag_rate_matches_injected_error_rate() {
        let graph = fixtures::two_marriages_graph();
        let qas = qa::generate_qas(&graph, &QaConfig::with_seed(3));
        for bad_count in [0, 1, qas.len().min(5)] {
            let mut backend = ScriptedBackend::new().default_response("unscripted");
            for (idx, item) in qas.iter().enumerate() {
                let answer =
                    if idx < bad_count { "garbled".to_string() } else { item.golds[0].clone() };
                backend = backend.on_generate(&item.question, &answer);
            }
            let flags = verify_tg(
                &backend,
                &registry(),
                &graph,
                &qas,
                &GenParams::with_seed(0),
                8,
            )
            .unwrap();
            assert_eq!(flags.len(), bad_count);
        }
    }

    #[test]
    fn bounded_runner_preserves_order_and_respects_the_bound() {
        let items: Vec<usize> = (0..23).collect();
        let in_flight = AtomicUsize::new(0);
        let peak = AtomicUsize::new(0);
        let doubled = run_bounded(&items, 4, |n| {
            let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(std::time::Duration::from_millis(2));
            in_flight.fetch_sub(1, Ordering::SeqCst);
            n * 2
        });
        assert_eq!(doubled, items.iter().map(|n| n * 2).collect::<Vec<_>>());
        assert!(peak.load(Ordering::SeqCst) <= 4);
        assert!(peak.load(Ordering::SeqCst) >= 2, "waves should actually overlap");
    }
}
