//! Calendar-month time axis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A calendar month, stored as months since year 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then(|| Month(year * 12 + month as i32 - 1))
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    /// 1-based month of the year.
    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    /// 0-based month of the year, used to index climatologies.
    pub fn month_index(self) -> usize {
        self.0.rem_euclid(12) as usize
    }

    pub fn plus(self, months: i32) -> Self {
        Month(self.0 + months)
    }

    /// Signed number of months from `other` to `self`.
    pub fn since(self, other: Month) -> i32 {
        self.0 - other.0
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Domain(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        Month::new(year, month).ok_or_else(bad)
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Consecutive monthly time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub start: Month,
    pub len: usize,
}

impl TimeAxis {
    pub fn new(start: Month, len: usize) -> Self {
        TimeAxis { start, len }
    }

    pub fn month(&self, t: usize) -> Month {
        self.start.plus(t as i32)
    }

    pub fn index_of(&self, m: Month) -> Option<usize> {
        let d = m.since(self.start);
        (d >= 0 && (d as usize) < self.len).then_some(d as usize)
    }

    pub fn end(&self) -> Month {
        self.start.plus(self.len as i32 - 1)
    }

    /// Time indices whose month falls in `[first, last]`.
    pub fn range_within(&self, first: Month, last: Month) -> std::ops::Range<usize> {
        let lo = first.since(self.start).clamp(0, self.len as i32) as usize;
        let hi = (last.since(self.start) + 1).clamp(0, self.len as i32) as usize;
        lo..hi.max(lo)
    }
}
