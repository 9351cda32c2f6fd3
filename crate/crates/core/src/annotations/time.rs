use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{AnnotationError, Dim};

/// Parses `YYYY-MM-DD`; a trailing time-of-day (`THH:MM...`) is floored away.
pub fn parse_day(s: &str) -> Result<NaiveDate, AnnotationError> {
    let s = s.trim();
    let day_part = match s.find('T') {
        Some(i) => &s[..i],
        None => s,
    };
    let d = NaiveDate::parse_from_str(day_part, "%Y-%m-%d").map_err(|_| AnnotationError::InvalidDate(s.to_string()))?;
    if d.year() < 1 || d.year() > 9999 {
        return Err(AnnotationError::InvalidDate(s.to_string()));
    }
    Ok(d)
}

/// Closed interval of calendar days, `begin <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct TimeInterval {
    begin: NaiveDate,
    end: NaiveDate,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    begin: String,
    end: String,
}

impl TryFrom<RawInterval> for TimeInterval {
    type Error = AnnotationError;
    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        TimeInterval::parse(&raw.begin, &raw.end)
    }
}

impl From<TimeInterval> for RawInterval {
    fn from(t: TimeInterval) -> Self {
        RawInterval {
            begin: t.begin.format("%Y-%m-%d").to_string(),
            end: t.end.format("%Y-%m-%d").to_string(),
        }
    }
}

impl TimeInterval {
    pub fn new(begin: NaiveDate, end: NaiveDate) -> Result<Self, AnnotationError> {
        if begin > end {
            return Err(AnnotationError::InvalidInterval(format!(
                "begin {begin} is after end {end}"
            )));
        }
        Ok(Self { begin, end })
    }

    pub fn parse(begin: &str, end: &str) -> Result<Self, AnnotationError> {
        Self::new(parse_day(begin)?, parse_day(end)?)
    }

    pub fn day(d: NaiveDate) -> Self {
        Self { begin: d, end: d }
    }

    pub fn begin(&self) -> NaiveDate {
        self.begin
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    /// Number of days, both ends inclusive.
    pub fn len_days(&self) -> i64 {
        (self.end - self.begin).num_days() + 1
    }

    pub fn overlaps(&self, other: &TimeInterval) -> bool {
        self.begin <= other.end && other.begin <= self.end
    }

    pub fn intersection(&self, other: &TimeInterval) -> Option<TimeInterval> {
        let begin = self.begin.max(other.begin);
        let end = self.end.min(other.end);
        (begin <= end).then_some(TimeInterval { begin, end })
    }

    pub fn hull(&self, other: &TimeInterval) -> TimeInterval {
        TimeInterval {
            begin: self.begin.min(other.begin),
            end: self.end.max(other.end),
        }
    }

    /// Middle day; for an even number of days the earlier of the two middles.
    pub fn midpoint(&self) -> NaiveDate {
        self.begin + chrono::Duration::days((self.len_days() - 1) / 2)
    }
}

impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.begin, self.end)
    }
}

/// Jaccard similarity of the two intervals' day sets.
pub fn time_sim(a: &TimeInterval, b: &TimeInterval) -> f64 {
    let inter = match a.intersection(b) {
        Some(i) => i.len_days(),
        None => return 0.0,
    };
    let union = a.len_days() + b.len_days() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeLevel {
    Day,
    Month,
    Year,
    Decade,
    All,
}

impl TimeLevel {
    pub const ALL_LEVELS: [TimeLevel; 5] = [
        TimeLevel::Day,
        TimeLevel::Month,
        TimeLevel::Year,
        TimeLevel::Decade,
        TimeLevel::All,
    ];

    pub fn coarser(self) -> Option<TimeLevel> {
        let i = self as usize;
        Self::ALL_LEVELS.get(i + 1).copied()
    }

    pub fn finer(self) -> Option<TimeLevel> {
        (self as usize).checked_sub(1).map(|i| Self::ALL_LEVELS[i])
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeLevel::Day => "day",
            TimeLevel::Month => "month",
            TimeLevel::Year => "year",
            TimeLevel::Decade => "decade",
            TimeLevel::All => "all",
        }
    }
}

impl fmt::Display for TimeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TimeLevel {
    type Err = AnnotationError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL_LEVELS
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AnnotationError::UnknownLevel(s.to_string()))
    }
}

/// A member of the calendar hierarchy day < month < year < decade < ALL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeMember {
    Day(NaiveDate),
    Month {
        year: i32,
        month: u32,
    },
    Year(i32),
    /// First year of the decade, e.g. 2000 for the 2000s.
    Decade(i32),
    All,
}

impl TimeMember {
    pub fn level(&self) -> TimeLevel {
        match self {
            TimeMember::Day(_) => TimeLevel::Day,
            TimeMember::Month { .. } => TimeLevel::Month,
            TimeMember::Year(_) => TimeLevel::Year,
            TimeMember::Decade(_) => TimeLevel::Decade,
            TimeMember::All => TimeLevel::All,
        }
    }

    fn year(&self) -> Option<i32> {
        match *self {
            TimeMember::Day(d) => Some(d.year()),
            TimeMember::Month { year, .. } | TimeMember::Year(year) | TimeMember::Decade(year) => Some(year),
            TimeMember::All => None,
        }
    }

    /// Projects this member onto a level at or above its own.
    pub fn roll(&self, level: TimeLevel) -> Result<TimeMember, AnnotationError> {
        if level < self.level() {
            return Err(AnnotationError::RollDown {
                dim: Dim::Time,
                member: self.to_string(),
                from: self.level().to_string(),
                to: level.to_string(),
            });
        }
        Ok(match level {
            TimeLevel::Day => *self,
            TimeLevel::Month => match *self {
                TimeMember::Day(d) => TimeMember::Month {
                    year: d.year(),
                    month: d.month(),
                },
                m => m,
            },
            TimeLevel::Year => TimeMember::Year(self.year().expect("not ALL")),
            TimeLevel::Decade => TimeMember::Decade(self.year().expect("not ALL").div_euclid(10) * 10),
            TimeLevel::All => TimeMember::All,
        })
    }

    /// Calendar span covered by the member; `None` for ALL.
    pub fn span(&self) -> Option<TimeInterval> {
        let ymd = |y: i32, m: u32, d: u32| NaiveDate::from_ymd_opt(y, m, d);
        let (b, e) = match *self {
            TimeMember::Day(d) => (Some(d), Some(d)),
            TimeMember::Month { year, month } => {
                let next = if month == 12 {
                    ymd(year + 1, 1, 1)
                } else {
                    ymd(year, month + 1, 1)
                };
                let last = next.and_then(|n| n.pred_opt()).or_else(|| ymd(year, 12, 31));
                (ymd(year, month, 1), last)
            }
            TimeMember::Year(y) => (ymd(y, 1, 1), ymd(y, 12, 31)),
            TimeMember::Decade(y) => (ymd(y.max(1), 1, 1), ymd((y + 9).min(9999), 12, 31)),
            TimeMember::All => return None,
        };
        Some(TimeInterval { begin: b?, end: e? })
    }

    /// Parses the textual form of a member at the given level.
    pub fn parse_at(level: TimeLevel, s: &str) -> Result<TimeMember, AnnotationError> {
        let s = s.trim();
        let bad = || AnnotationError::UnmappedMember {
            dim: Dim::Time,
            member: s.to_string(),
            level: level.to_string(),
        };
        match level {
            TimeLevel::Day => parse_day(s).map(TimeMember::Day).map_err(|_| bad()),
            TimeLevel::Month => {
                let (y, m) = s.split_once('-').ok_or_else(bad)?;
                let year: i32 = y.parse().map_err(|_| bad())?;
                let month: u32 = m.parse().map_err(|_| bad())?;
                if y.len() != 4 || m.len() != 2 || !(1..=12).contains(&month) || year < 1 {
                    return Err(bad());
                }
                Ok(TimeMember::Month { year, month })
            }
            TimeLevel::Year => {
                let year: i32 = s.parse().map_err(|_| bad())?;
                if !(1..=9999).contains(&year) {
                    return Err(bad());
                }
                Ok(TimeMember::Year(year))
            }
            TimeLevel::Decade => {
                let digits = s.strip_suffix('s').ok_or_else(bad)?;
                let year: i32 = digits.parse().map_err(|_| bad())?;
                if year % 10 != 0 || !(0..=9990).contains(&year) {
                    return Err(bad());
                }
                Ok(TimeMember::Decade(year))
            }
            TimeLevel::All => {
                if s.eq_ignore_ascii_case("all") {
                    Ok(TimeMember::All)
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl fmt::Display for TimeMember {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeMember::Day(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            TimeMember::Month { year, month } => write!(f, "{year:04}-{month:02}"),
            TimeMember::Year(y) => write!(f, "{y:04}"),
            TimeMember::Decade(y) => write!(f, "{y}s"),
            TimeMember::All => f.write_str("ALL"),
        }
    }
}

impl Serialize for TimeMember {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TimeMember {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        TimeLevel::ALL_LEVELS
            .iter()
            .find_map(|&l| TimeMember::parse_at(l, &s).ok())
            .ok_or_else(|| serde::de::Error::custom(format!("invalid time member {s:?}")))
    }
}
