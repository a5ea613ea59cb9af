//! Small canonical example graphs shared across the test suites and the
//! bundled demonstration data.
//!
//! These graphs exercise the corners the rest of the toolkit cares about:
//! symmetric marriage pairs that tie on both start and end year, open
//! intervals (births and deaths), and multi-word entity names.

use crate::graph::{Endpoint, EventKey, TemporalFact, TemporalGraph, sort_chronological};
use crate::time::TimePoint;

fn facts(rows: &[(&str, &str, &str, Endpoint, i32)]) -> TemporalGraph {
    let facts = rows
        .iter()
        .map(|(s, r, o, endpoint, year)| {
            TemporalFact::new(
                EventKey::new(*s, *r, *o).expect("fixture keys are nonempty"),
                *endpoint,
                TimePoint::year_of(*year),
            )
        })
        .collect();
    sort_chronological(facts).expect("fixture graphs are valid")
}

use Endpoint::{End, Start};

/// A media proprietor's life: birth, a 25-year network ownership, a 6-year
/// marriage (stated in both directions), and two deaths.
pub fn media_mogul_graph() -> TemporalGraph {
    facts(&[
        ("John Thompson", "was born in", "Weston", Start, 1921),
        ("John Thompson", "owned", "Pearl Network", Start, 1942),
        ("Sophia Parker", "was married to", "John Thompson", Start, 1947),
        ("John Thompson", "was married to", "Sophia Parker", Start, 1947),
        ("Sophia Parker", "was married to", "John Thompson", End, 1953),
        ("John Thompson", "was married to", "Sophia Parker", End, 1953),
        ("John Thompson", "owned", "Pearl Network", End, 1967),
        ("John Thompson", "died in", "Riverside", Start, 1988),
        ("Sophia Parker", "died in", "Lancaster", Start, 1995),
    ])
}

/// Two successive marriages of one person, used as the in-context
/// demonstration graph: durations 2 and 6 with births and deaths around
/// them.
pub fn two_marriages_graph() -> TemporalGraph {
    facts(&[
        ("Liam Mitchell", "was born in", "Harrison", Start, 1885),
        ("Maddox Reynolds", "was born in", "Glenville", Start, 1893),
        ("Liam Mitchell", "was married to", "Emma Scott", Start, 1916),
        ("Emma Scott", "was married to", "Liam Mitchell", Start, 1916),
        ("Liam Mitchell", "was married to", "Emma Scott", End, 1918),
        ("Emma Scott", "was married to", "Liam Mitchell", End, 1918),
        ("Maddox Reynolds", "was married to", "Liam Mitchell", Start, 1922),
        ("Liam Mitchell", "was married to", "Maddox Reynolds", Start, 1922),
        ("Maddox Reynolds", "was married to", "Liam Mitchell", End, 1928),
        ("Liam Mitchell", "was married to", "Maddox Reynolds", End, 1928),
        ("Liam Mitchell", "died in", "Boston", Start, 1941),
        ("Emma Scott", "died in", "Oceanview", Start, 1984),
    ])
}

/// A network founder with a comma-carrying birthplace; the held-out query
/// graph paired with [`two_marriages_graph`] in demonstrations.
pub fn network_founder_graph() -> TemporalGraph {
    facts(&[
        ("Chris Evans", "was born in", "Bristol, Connecticut", Start, 1948),
        ("Oliver Jensen", "was born in", "Bristol, Connecticut", Start, 1948),
        ("Chris Evans", "was married to", "Oliver Jensen", Start, 1970),
        ("Oliver Jensen", "was married to", "Chris Evans", Start, 1970),
        ("Chris Evans", "created", "Pearl Network", Start, 2005),
        ("Chris Evans", "won prize", "Victory Achievement Award", Start, 2007),
        ("Chris Evans", "was married to", "Oliver Jensen", End, 2010),
        ("Oliver Jensen", "was married to", "Chris Evans", End, 2010),
        ("Chris Evans", "created", "Pearl Network", End, 2013),
    ])
}

/// A prize-laden scientist couple; exercises long multi-word prize names.
pub fn biologist_graph() -> TemporalGraph {
    facts(&[
        ("Molly Adams", "was born in", "Seattle", Start, 1896),
        ("Liam Thomas Dawson", "was born in", "Seattle", Start, 1896),
        ("Molly Adams", "was married to", "Liam Thomas Dawson", Start, 1920),
        ("Liam Thomas Dawson", "was married to", "Molly Adams", Start, 1920),
        (
            "Liam Thomas Dawson",
            "won prize",
            "James Parker Prize for Advanced Biomedical Studies",
            Start,
            1946,
        ),
        ("Liam Thomas Dawson", "won prize", "Champion Award in Biology or Science", Start, 1947),
        ("Liam Thomas Dawson", "won prize", "Oakley Smith Prize", Start, 1948),
        ("Liam Thomas Dawson", "won prize", "Member of the National Academy", Start, 1950),
        ("Molly Adams", "was married to", "Liam Thomas Dawson", End, 1957),
        ("Liam Thomas Dawson", "was married to", "Molly Adams", End, 1957),
        ("Liam Thomas Dawson", "died in", "Kingsville, Texas", Start, 1984),
    ])
}
