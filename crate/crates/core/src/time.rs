//! Time points with year, month, day, or approximate-range granularity.
//!
//! Ordering is total: points compare by year, then month, then day, with
//! absent components sorting earliest (so `1947` precedes `June 1947`).
//! Approximate points (decade-style ranges) compare by the midpoint of their
//! range, with ties broken toward the lower start year.  Only
//! year-granularity points take part in duration arithmetic; coarser or
//! approximate points exist so that text extraction can represent every
//! expression it encounters.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Full month names used by both the timeline grammar and text extraction.
pub const MONTH_NAMES: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

/// How precisely a [`TimePoint`] is pinned down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Year,
    Month,
    Day,
    Approx,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimeError {
    #[error("month {0} out of range 1-12")]
    MonthOutOfRange(u16),
    #[error("day {0} out of range 1-31")]
    DayOutOfRange(u16),
    #[error("approximate range {0}..{1} is inverted")]
    InvertedRange(i32, i32),
    #[error("unparsable time point: {0:?}")]
    Unparsable(String),
}

/// A point on the timeline.
///
/// Construct through [`TimePoint::year_of`], [`TimePoint::month_of`],
/// [`TimePoint::day_of`], or [`TimePoint::approx`]; the constructors enforce
/// that a day implies a month, that months and days stay in calendar range,
/// and that approximate ranges are not inverted.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimePoint {
    year: i32,
    month: Option<u8>,
    day: Option<u8>,
    /// Inclusive year range; present exactly for approx granularity.
    approx: Option<(i32, i32)>,
}

impl TimePoint {
    /// A bare year such as `1973`.
    pub fn year_of(year: i32) -> Self {
        TimePoint { year, month: None, day: None, approx: None }
    }

    /// A month within a year such as `June 1994`.
    pub fn month_of(year: i32, month: u8) -> Result<Self, TimeError> {
        if !(1..=12).contains(&month) {
            return Err(TimeError::MonthOutOfRange(month as u16));
        }
        Ok(TimePoint { year, month: Some(month), day: None, approx: None })
    }

    /// A full date such as `3 April 1909`.
    pub fn day_of(year: i32, month: u8, day: u8) -> Result<Self, TimeError> {
        if !(1..=12).contains(&month) {
            return Err(TimeError::MonthOutOfRange(month as u16));
        }
        if !(1..=31).contains(&day) {
            return Err(TimeError::DayOutOfRange(day as u16));
        }
        Ok(TimePoint { year, month: Some(month), day: Some(day), approx: None })
    }

    /// An approximate inclusive year range such as `late 1980s` (1987-1989).
    pub fn approx(low: i32, high: i32) -> Result<Self, TimeError> {
        if low > high {
            return Err(TimeError::InvertedRange(low, high));
        }
        Ok(TimePoint { year: low, month: None, day: None, approx: Some((low, high)) })
    }

    /// Representative year: the year itself, or the low end of an
    /// approximate range.
    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> Option<u8> {
        self.month
    }

    pub fn day(&self) -> Option<u8> {
        self.day
    }

    pub fn approx_range(&self) -> Option<(i32, i32)> {
        self.approx
    }

    pub fn granularity(&self) -> Granularity {
        if self.approx.is_some() {
            Granularity::Approx
        } else if self.day.is_some() {
            Granularity::Day
        } else if self.month.is_some() {
            Granularity::Month
        } else {
            Granularity::Year
        }
    }

    /// True when the point is an exact bare year, the only granularity that
    /// participates in duration and gap arithmetic.
    pub fn is_plain_year(&self) -> bool {
        self.granularity() == Granularity::Year
    }

    /// Sort key realizing the total order.  Years are doubled so that an
    /// approximate range can sit at its midpoint even when the midpoint is
    /// not a whole year.
    fn sort_key(&self) -> (i64, u8, u8, i32, u8, i32) {
        let (lo, hi) = self.approx.unwrap_or((self.year, self.year));
        let doubled = lo as i64 + hi as i64;
        let rank = match self.granularity() {
            Granularity::Year => 0,
            Granularity::Month => 1,
            Granularity::Day => 2,
            Granularity::Approx => 3,
        };
        (doubled, self.month.unwrap_or(0), self.day.unwrap_or(0), lo, rank, hi)
    }
}

impl Ord for TimePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for TimePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compact machine form: `1947`, `1994-06`, `1909-04-03`, `1987~1989`.
/// The human-facing timeline form lives in [`crate::timeline`].
impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((lo, hi)) = self.approx {
            return write!(f, "{lo}~{hi}");
        }
        match (self.month, self.day) {
            (Some(m), Some(d)) => write!(f, "{}-{m:02}-{d:02}", self.year),
            (Some(m), None) => write!(f, "{}-{m:02}", self.year),
            _ => write!(f, "{}", self.year),
        }
    }
}

impl fmt::Debug for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TimePoint({self})")
    }
}

impl FromStr for TimePoint {
    type Err = TimeError;

    fn from_str(s: &str) -> Result<Self, TimeError> {
        let bad = || TimeError::Unparsable(s.to_string());
        // Years are never zero-padded in the compact form, so a leading zero
        // marks a misfielded fragment like "04-03" rather than year 4.
        let parse_year = |field: &str| -> Result<i32, TimeError> {
            let digits = field.trim().trim_start_matches('-');
            if digits.len() > 1 && digits.starts_with('0') {
                return Err(bad());
            }
            field.trim().parse().map_err(|_| bad())
        };
        if let Some((lo, hi)) = s.split_once('~') {
            return TimePoint::approx(parse_year(lo)?, parse_year(hi)?);
        }
        // Year may itself be negative, so split fields off the tail.
        let mut parts: Vec<&str> = s.rsplitn(3, '-').collect();
        if s.starts_with('-') {
            // A leading sign is part of the year, not a separator.
            parts = vec![s];
            if let Some(rest) = s.get(1..) {
                if rest.contains('-') {
                    return Err(bad());
                }
            }
        }
        match parts.as_slice() {
            [year] => Ok(TimePoint::year_of(parse_year(year)?)),
            [month, year] => {
                let y = parse_year(year)?;
                let m: u8 = month.trim().parse().map_err(|_| bad())?;
                TimePoint::month_of(y, m)
            }
            [day, month, year] => {
                let y = parse_year(year)?;
                let m: u8 = month.trim().parse().map_err(|_| bad())?;
                let d: u8 = day.trim().parse().map_err(|_| bad())?;
                TimePoint::day_of(y, m, d)
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for TimePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(D::Error::custom)
    }
}

/// Full or three-letter month name to month number, case-insensitive.
pub fn month_from_name(name: &str) -> Option<u8> {
    let name = name.trim_end_matches('.');
    MONTH_NAMES.iter().position(|m| {
        m.eq_ignore_ascii_case(name) || (name.len() == 3 && m[..3].eq_ignore_ascii_case(name))
    }).map(|i| i as u8 + 1)
}

pub fn month_name(month: u8) -> &'static str {
    MONTH_NAMES[(month as usize - 1) % 12]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn y(n: i32) -> TimePoint {
        TimePoint::year_of(n)
    }

    #[test]
    fn constructors_enforce_ranges() {
        assert_eq!(TimePoint::month_of(1994, 13), Err(TimeError::MonthOutOfRange(13)));
        assert_eq!(TimePoint::day_of(1909, 4, 32), Err(TimeError::DayOutOfRange(32)));
        assert_eq!(TimePoint::approx(1990, 1980), Err(TimeError::InvertedRange(1990, 1980)));
        assert!(TimePoint::day_of(1909, 4, 3).is_ok());
    }

    #[test]
    fn absent_components_sort_earliest() {
        let year = y(1947);
        let june = TimePoint::month_of(1947, 6).unwrap();
        let june_3 = TimePoint::day_of(1947, 6, 3).unwrap();
        assert!(year < june);
        assert!(june < june_3);
        assert!(y(1946) < year);
        assert!(june_3 < y(1948));
    }

    #[test]
    fn approx_sorts_by_midpoint_then_low_end() {
        let late_80s = TimePoint::approx(1987, 1989).unwrap();
        assert!(y(1987) < late_80s);
        assert!(late_80s < y(1989));
        // Midpoint 1988 ties with the plain year; the tie resolves
        // deterministically and consistently with equality.
        assert_ne!(y(1988).cmp(&late_80s), Ordering::Equal);
        let whole_80s = TimePoint::approx(1980, 1989).unwrap();
        let early_80s = TimePoint::approx(1980, 1983).unwrap();
        assert!(early_80s < whole_80s);
    }

    #[test]
    fn display_and_parse_round_trip() {
        for tp in [
            y(1973),
            y(-431),
            TimePoint::month_of(1994, 6).unwrap(),
            TimePoint::day_of(1909, 4, 3).unwrap(),
            TimePoint::approx(1930, 1939).unwrap(),
        ] {
            let text = tp.to_string();
            assert_eq!(text.parse::<TimePoint>().unwrap(), tp, "round trip of {text}");
        }
        assert_eq!("1909-04-03".parse::<TimePoint>().unwrap(), TimePoint::day_of(1909, 4, 3).unwrap());
        assert!("04-03".parse::<TimePoint>().is_err());
        assert!("".parse::<TimePoint>().is_err());
    }

    #[test]
    fn serde_uses_compact_string_form() {
        let tp = TimePoint::day_of(1909, 4, 3).unwrap();
        let json = serde_json::to_string(&tp).unwrap();
        assert_eq!(json, "\"1909-04-03\"");
        assert_eq!(serde_json::from_str::<TimePoint>(&json).unwrap(), tp);
    }

    #[test]
    fn month_names_round_trip() {
        assert_eq!(month_from_name("April"), Some(4));
        assert_eq!(month_from_name("apr"), Some(4));
        assert_eq!(month_from_name("Apr."), Some(4));
        assert_eq!(month_from_name("Smarch"), None);
        assert_eq!(month_name(12), "December");
    }

    fn arb_time_point() -> impl Strategy<Value = TimePoint> {
        prop_oneof![
            (1000..3000i32).prop_map(TimePoint::year_of),
            (1000..3000i32, 1..=12u8).prop_map(|(y, m)| TimePoint::month_of(y, m).unwrap()),
            (1000..3000i32, 1..=12u8, 1..=28u8)
                .prop_map(|(y, m, d)| TimePoint::day_of(y, m, d).unwrap()),
            (1000..3000i32, 0..12i32)
                .prop_map(|(lo, span)| TimePoint::approx(lo, lo + span).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn order_is_total_and_consistent(a in arb_time_point(), b in arb_time_point(), c in arb_time_point()) {
            // Antisymmetry and consistency with equality.
            prop_assert_eq!(a.cmp(&b) == Ordering::Equal, a == b);
            prop_assert_eq!(a.cmp(&b).reverse(), b.cmp(&a));
            // Transitivity.
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
        }

        #[test]
        fn string_form_round_trips(tp in arb_time_point()) {
            prop_assert_eq!(tp.to_string().parse::<TimePoint>().unwrap(), tp);
        }
    }
}
