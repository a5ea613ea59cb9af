//! Property tests for the graph invariants and the timeline grammar.
//!
//! The chronological sort is checked against an independent selection-sort
//! oracle that scans the raw fact list, and the timeline text form is
//! checked to round-trip (`parse ∘ render` is the identity) on randomly
//! generated graphs covering every time granularity.

use proptest::prelude::*;
use tgkit_core::{
    Endpoint, EventKey, TemporalFact, TimePoint, parse_timeline, render_timeline,
    sort_chronological,
};

const PEOPLE: &[&str] = &[
    "Alice Moore", "Ben Carter", "Clara Finch", "Daniel Reyes", "Elena Vasquez", "Felix Grant",
    "Grace Howell", "Henry Albright", "Iris Delgado", "Jonas Weaver",
];
const PLACES: &[&str] =
    &["Ashford", "Briarwood", "Crestline", "Dunmore", "Eastvale", "Fairhaven, Ohio"];
const ORGS: &[&str] =
    &["Crescent Press", "Delta Foundry", "Ember Studios", "Falcon Institute", "Granite Works"];
const RELATIONS: &[(&str, bool)] = &[
    // (relation, object is a place rather than an organization)
    ("was born in", true),
    ("died in", true),
    ("lived in", true),
    ("worked at", false),
    ("owned", false),
    ("created", false),
    ("was affiliated to", false),
];

/// Raw ingredients for one event, expanded into facts by `build_facts`.
type EventSeed = (usize, usize, usize, i32, Option<i32>, u8, u8, u8, i32);

fn build_facts(events: Vec<EventSeed>) -> Vec<TemporalFact> {
    let mut keys_seen: Vec<EventKey> = Vec::new();
    let mut out = Vec::new();
    for (person, rel, obj, start_year, span, gran, month, day, approx_span) in events {
        let (relation, is_place) = RELATIONS[rel];
        let pool = if is_place { PLACES } else { ORGS };
        let key = EventKey::new(PEOPLE[person], relation, pool[obj % pool.len()]).unwrap();
        if keys_seen.contains(&key) {
            continue;
        }
        keys_seen.push(key.clone());
        let start = match gran % 6 {
            0 => TimePoint::month_of(start_year, month).unwrap(),
            1 => TimePoint::day_of(start_year, month, day).unwrap(),
            2 => TimePoint::approx(start_year, start_year + approx_span).unwrap(),
            _ => TimePoint::year_of(start_year),
        };
        out.push(TemporalFact::new(key.clone(), Endpoint::Start, start));
        if let Some(span) = span {
            // Ends use a plain later year, so the interval can never invert
            // regardless of the start granularity.
            out.push(TemporalFact::new(
                key,
                Endpoint::End,
                TimePoint::year_of(start_year + 10 + span),
            ));
        }
    }
    out
}

/// A shuffled list of valid facts: unique (key, endpoint) pairs with starts
/// never after ends.
fn arb_fact_list() -> impl Strategy<Value = Vec<TemporalFact>> {
    let event = (
        0..PEOPLE.len(),
        0..RELATIONS.len(),
        0..PLACES.len().max(ORGS.len()),
        1800..1990i32,
        proptest::option::of(0..50i32),
        0..6u8,
        1..=12u8,
        1..=28u8,
        0..9i32,
    );
    proptest::collection::vec(event, 1..10).prop_map(build_facts).prop_shuffle()
}

/// Independent oracle: repeatedly pick the earliest remaining fact by
/// (time, endpoint), taking the lowest index on full ties.
fn selection_sort_oracle(mut facts: Vec<TemporalFact>) -> Vec<TemporalFact> {
    let mut out = Vec::with_capacity(facts.len());
    while !facts.is_empty() {
        let mut best = 0;
        for i in 1..facts.len() {
            let candidate = (facts[i].time, facts[i].endpoint);
            let current = (facts[best].time, facts[best].endpoint);
            if candidate < current {
                best = i;
            }
        }
        out.push(facts.remove(best));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sort_matches_selection_sort_oracle(facts in arb_fact_list()) {
        let graph = sort_chronological(facts.clone()).unwrap();
        let expected = selection_sort_oracle(facts);
        prop_assert_eq!(graph.facts(), expected.as_slice());
    }

    #[test]
    fn sorting_twice_is_idempotent(facts in arb_fact_list()) {
        let once = sort_chronological(facts).unwrap();
        let twice = sort_chronological(once.facts().to_vec()).unwrap();
        prop_assert_eq!(&twice, &once);
    }

    #[test]
    fn timeline_round_trips(facts in arb_fact_list()) {
        let graph = sort_chronological(facts).unwrap();
        let text = render_timeline(&graph);
        let parsed = parse_timeline(&text).unwrap();
        prop_assert_eq!(parsed, graph);
    }

    #[test]
    fn intervals_agree_with_a_raw_scan(facts in arb_fact_list()) {
        let graph = sort_chronological(facts.clone()).unwrap();
        for (key, interval) in graph.intervals() {
            let start = facts
                .iter()
                .find(|f| f.key == *key && f.endpoint == Endpoint::Start)
                .map(|f| f.time);
            let end = facts
                .iter()
                .find(|f| f.key == *key && f.endpoint == Endpoint::End)
                .map(|f| f.time);
            prop_assert_eq!(interval.start, start);
            prop_assert_eq!(interval.end, end);
        }
        prop_assert_eq!(graph.intervals().len(), graph.event_keys().len());
    }
}

/// Rebuilding a graph from scrambled facts restores the printed order, as
/// long as the scramble keeps symmetric same-time pairs in their original
/// relative order (the tie rule is insertion order).
#[test]
fn scrambled_flagship_facts_sort_back_to_printed_order() {
    let graph = tgkit_core::fixtures::media_mogul_graph();
    let original = graph.facts().to_vec();
    // Positions of the 1947/1953 marriage pairs keep their relative order.
    let scramble: [usize; 9] = [8, 1, 4, 2, 0, 3, 5, 7, 6];
    let shuffled: Vec<TemporalFact> = scramble.iter().map(|&i| original[i].clone()).collect();
    let resorted = sort_chronological(shuffled).unwrap();
    assert_eq!(resorted.facts(), original.as_slice());
}
