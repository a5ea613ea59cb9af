//! The line-oriented timeline text form of a temporal graph.
//!
//! Each fact renders as one line:
//!
//! ```text
//! (John Thompson owned Pearl Network) starts at 1942
//! (Knox Cunningham held office) ends at 3 April 1909
//! ```
//!
//! Times render as bare years, `<MonthName> <year>`, `<day> <MonthName>
//! <year>`, or decade forms (`1930s`, `late 1980s`) for approximate ranges.
//! [`parse_timeline`] inverts [`render_timeline`]: parsing rendered text
//! reproduces the source graph exactly.

use crate::graph::{Endpoint, EventKey, GraphError, TemporalFact, TemporalGraph, sort_chronological};
use crate::time::{Granularity, TimePoint, month_from_name, month_name};

/// Render one graph as timeline text, one fact per line, no trailing
/// newline.  The empty graph renders as the empty string.
pub fn render_timeline(graph: &TemporalGraph) -> String {
    graph
        .facts()
        .iter()
        .map(render_fact_line)
        .collect::<Vec<_>>()
        .join("\n")
}

/// One timeline line: `(<phrase>) starts at <time>`.
pub fn render_fact_line(fact: &TemporalFact) -> String {
    format!(
        "{} {}s at {}",
        fact.key.phrase(),
        fact.endpoint.verb(),
        render_time_text(&fact.time)
    )
}

/// Human-facing time form used on timelines and in questions.
pub fn render_time_text(time: &TimePoint) -> String {
    match time.granularity() {
        Granularity::Year => time.year().to_string(),
        Granularity::Month => format!("{} {}", month_name(time.month().unwrap()), time.year()),
        Granularity::Day => format!(
            "{} {} {}",
            time.day().unwrap(),
            month_name(time.month().unwrap()),
            time.year()
        ),
        Granularity::Approx => {
            let (lo, hi) = time.approx_range().unwrap();
            let decade = lo - lo.rem_euclid(10);
            if lo == decade && hi == decade + 9 {
                format!("{decade}s")
            } else if lo == decade && hi == decade + 3 {
                format!("early {decade}s")
            } else if lo == decade + 4 && hi == decade + 6 {
                format!("mid {decade}s")
            } else if lo == decade + 7 && hi == decade + 9 {
                format!("late {decade}s")
            } else {
                format!("{lo}-{hi}")
            }
        }
    }
}

/// Parse a human-facing time form; strict inverse of [`render_time_text`].
pub fn parse_time_text(text: &str) -> Option<TimePoint> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((qualifier, rest)) = text.split_once(' ') {
        if let Some(decade) = parse_decade(rest) {
            let span = match qualifier {
                "early" => (decade, decade + 3),
                "mid" => (decade + 4, decade + 6),
                "late" => (decade + 7, decade + 9),
                _ => return None,
            };
            return TimePoint::approx(span.0, span.1).ok();
        }
    }
    if let Some(decade) = parse_decade(text) {
        return TimePoint::approx(decade, decade + 9).ok();
    }
    if let Ok(year) = text.parse::<i32>() {
        return Some(TimePoint::year_of(year));
    }
    let words: Vec<&str> = text.split_whitespace().collect();
    match words.as_slice() {
        [month, year] => {
            let m = month_from_name(month)?;
            let y = year.parse().ok()?;
            TimePoint::month_of(y, m).ok()
        }
        [day, month, year] => {
            let d = day.parse().ok()?;
            let m = month_from_name(month)?;
            let y = year.parse().ok()?;
            TimePoint::day_of(y, m, d).ok()
        }
        _ => {
            // Plain inclusive range, e.g. `1931-1934`.
            let (lo, hi) = text.split_once('-')?;
            let lo = lo.parse().ok()?;
            let hi = hi.parse().ok()?;
            TimePoint::approx(lo, hi).ok()
        }
    }
}

fn parse_decade(text: &str) -> Option<i32> {
    let digits = text.strip_suffix('s')?;
    let decade: i32 = digits.parse().ok()?;
    (decade % 10 == 0 && !digits.is_empty()).then_some(decade)
}

/// Parse timeline text back into a graph.  Blank lines are skipped; any
/// other deviation from the rendering grammar fails with
/// [`GraphError::MalformedLine`] carrying the 1-based line number.
pub fn parse_timeline(text: &str) -> Result<TemporalGraph, GraphError> {
    let mut facts = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        facts.push(parse_fact_line(line).map_err(|reason| GraphError::MalformedLine {
            line: line_no,
            reason,
        })?);
    }
    sort_chronological(facts)
}

fn parse_fact_line(line: &str) -> Result<TemporalFact, String> {
    let rest = line
        .strip_prefix('(')
        .ok_or_else(|| "expected leading '('".to_string())?;
    // The phrase itself may contain parentheses, so split at the *last*
    // endpoint marker.
    let (inner, endpoint, time_text) = [") starts at ", ") ends at "]
        .iter()
        .filter_map(|marker| {
            rest.rfind(marker).map(|pos| {
                let endpoint = if marker.contains("starts") { Endpoint::Start } else { Endpoint::End };
                (&rest[..pos], endpoint, &rest[pos + marker.len()..])
            })
        })
        .max_by_key(|(inner, _, _)| inner.len())
        .ok_or_else(|| "expected ') starts at ' or ') ends at '".to_string())?;
    let key = split_phrase(inner)?;
    let time = parse_time_text(time_text)
        .ok_or_else(|| format!("unparsable time {time_text:?}"))?;
    Ok(TemporalFact::new(key, endpoint, time))
}

/// Split an event phrase into its (subject, relation, object) triple.
///
/// Entity names are capitalized token runs and relations are lowercase verb
/// phrases, so: the subject is the longest capitalized prefix, the relation
/// is the following lowercase run, and the object is everything after it.
/// `John Thompson was born in Weston` splits into `John Thompson` / `was
/// born in` / `Weston`.
pub fn split_phrase(inner: &str) -> Result<EventKey, String> {
    let tokens: Vec<&str> = inner.split(' ').filter(|t| !t.is_empty()).collect();
    let is_name_token =
        |t: &str| t.chars().next().is_some_and(|c| c.is_uppercase() || c.is_ascii_digit());
    let subject_len = tokens.iter().take_while(|t| is_name_token(t)).count();
    if subject_len == 0 || subject_len == tokens.len() {
        return Err(format!("cannot find a subject/relation boundary in {inner:?}"));
    }
    let relation_len = tokens[subject_len..].iter().take_while(|t| !is_name_token(t)).count();
    if subject_len + relation_len == tokens.len() {
        return Err(format!("no object after the relation in {inner:?}"));
    }
    EventKey::new(
        tokens[..subject_len].join(" "),
        tokens[subject_len..subject_len + relation_len].join(" "),
        tokens[subject_len + relation_len..].join(" "),
    )
    .map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn renders_the_flagship_timeline_verbatim() {
        let expected = "\
(John Thompson was born in Weston) starts at 1921
(John Thompson owned Pearl Network) starts at 1942
(Sophia Parker was married to John Thompson) starts at 1947
(John Thompson was married to Sophia Parker) starts at 1947
(Sophia Parker was married to John Thompson) ends at 1953
(John Thompson was married to Sophia Parker) ends at 1953
(John Thompson owned Pearl Network) ends at 1967
(John Thompson died in Riverside) starts at 1988
(Sophia Parker died in Lancaster) starts at 1995";
        assert_eq!(render_timeline(&fixtures::media_mogul_graph()), expected);
    }

    #[test]
    fn empty_graph_renders_empty_text() {
        assert_eq!(render_timeline(&TemporalGraph::empty()), "");
        assert_eq!(parse_timeline("").unwrap(), TemporalGraph::empty());
    }

    #[test]
    fn parse_inverts_render_on_the_fixtures() {
        for graph in [
            fixtures::media_mogul_graph(),
            fixtures::two_marriages_graph(),
            fixtures::network_founder_graph(),
            fixtures::biologist_graph(),
        ] {
            let text = render_timeline(&graph);
            assert_eq!(parse_timeline(&text).unwrap(), graph);
        }
    }

    #[test]
    fn parses_single_lines_with_multiword_names() {
        let graph = parse_timeline("(Chris Evans created Pearl Network) starts at 2005").unwrap();
        let fact = &graph.facts()[0];
        assert_eq!(fact.key.subject, "Chris Evans");
        assert_eq!(fact.key.relation, "created");
        assert_eq!(fact.key.object, "Pearl Network");
        assert_eq!(fact.endpoint, Endpoint::Start);
        assert_eq!(fact.time, TimePoint::year_of(2005));

        let graph = parse_timeline(
            "(Liam Thomas Dawson won prize Member of the National Academy) starts at 1950",
        )
        .unwrap();
        let fact = &graph.facts()[0];
        assert_eq!(fact.key.subject, "Liam Thomas Dawson");
        assert_eq!(fact.key.relation, "won prize");
        assert_eq!(fact.key.object, "Member of the National Academy");
    }

    #[test]
    fn day_granularity_times_render_and_parse() {
        let fact = TemporalFact::new(
            EventKey::new("Knox Cunningham", "was born in", "Belfast").unwrap(),
            Endpoint::Start,
            TimePoint::day_of(1909, 4, 3).unwrap(),
        );
        let line = render_fact_line(&fact);
        assert_eq!(line, "(Knox Cunningham was born in Belfast) starts at 3 April 1909");
        let graph = parse_timeline(&line).unwrap();
        assert_eq!(graph.facts()[0], fact);
    }

    #[test]
    fn approximate_times_render_and_parse() {
        let cases = [
            (TimePoint::approx(1930, 1939).unwrap(), "1930s"),
            (TimePoint::approx(1980, 1983).unwrap(), "early 1980s"),
            (TimePoint::approx(1984, 1986).unwrap(), "mid 1980s"),
            (TimePoint::approx(1987, 1989).unwrap(), "late 1980s"),
            (TimePoint::approx(1931, 1934).unwrap(), "1931-1934"),
        ];
        for (tp, text) in cases {
            assert_eq!(render_time_text(&tp), text);
            assert_eq!(parse_time_text(text), Some(tp), "parsing {text:?}");
        }
        assert_eq!(parse_time_text("June 1994"), Some(TimePoint::month_of(1994, 6).unwrap()));
        assert_eq!(parse_time_text("1973"), Some(TimePoint::year_of(1973)));
        assert_eq!(parse_time_text("not a time"), None);
    }

    #[test]
    fn malformed_lines_carry_line_numbers() {
        let text = "(John Thompson owned Pearl Network) starts at 1942\nno parens here";
        match parse_timeline(text) {
            Err(GraphError::MalformedLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected MalformedLine, got {other:?}"),
        }
        assert!(parse_timeline("(John Thompson owned) starts at 1942").is_err());
        assert!(parse_timeline("(John Thompson owned Pearl Network) starts at soon").is_err());
    }
}
