//! The dataset time axis: monthly or daily periods addressed by a dense ordinal.

use std::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Monthly,
    Daily,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Monthly => "monthly",
            Granularity::Daily => "daily",
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An absolute calendar position: months since `0000-01` or days since the
/// start of the common era, depending on granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CalendarPeriod {
    granularity: Granularity,
    index: i64,
}

impl CalendarPeriod {
    /// Parses `YYYY-MM` (monthly) or `YYYY-MM-DD` (daily). Zero padding is
    /// mandatory.
    pub fn parse(text: &str, granularity: Granularity) -> Result<CalendarPeriod, ModelError> {
        let err = || ModelError::PeriodFormat {
            text: text.to_string(),
            granularity,
        };
        let b = text.as_bytes();
        let digits = |r: std::ops::Range<usize>| b[r].iter().all(u8::is_ascii_digit);
        match granularity {
            Granularity::Monthly => {
                if b.len() != 7 || b[4] != b'-' || !digits(0..4) || !digits(5..7) {
                    return Err(err());
                }
                let year: i64 = text[0..4].parse().map_err(|_| err())?;
                let month: i64 = text[5..7].parse().map_err(|_| err())?;
                if !(1..=12).contains(&month) {
                    return Err(err());
                }
                Ok(CalendarPeriod {
                    granularity,
                    index: year * 12 + month - 1,
                })
            }
            Granularity::Daily => {
                if b.len() != 10 || b[4] != b'-' || b[7] != b'-' || !digits(0..4) || !digits(5..7) || !digits(8..10) {
                    return Err(err());
                }
                let date = NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| err())?;
                Ok(CalendarPeriod {
                    granularity,
                    index: i64::from(date.num_days_from_ce()),
                })
            }
        }
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub(crate) fn index(&self) -> i64 {
        self.index
    }

    pub(crate) fn from_index(granularity: Granularity, index: i64) -> CalendarPeriod {
        CalendarPeriod { granularity, index }
    }

    /// The period `steps` positions later.
    pub fn offset(&self, steps: i64) -> CalendarPeriod {
        CalendarPeriod {
            granularity: self.granularity,
            index: self.index + steps,
        }
    }

    /// Signed number of periods from `self` to `other`.
    pub fn steps_to(&self, other: &CalendarPeriod) -> i64 {
        other.index - self.index
    }
}

impl fmt::Display for CalendarPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.granularity {
            Granularity::Monthly => {
                let year = self.index.div_euclid(12);
                let month = self.index.rem_euclid(12) + 1;
                write!(f, "{year:04}-{month:02}")
            }
            Granularity::Daily => {
                let days = i32::try_from(self.index).map_err(|_| fmt::Error)?;
                let date = NaiveDate::from_num_days_from_ce_opt(days).ok_or(fmt::Error)?;
                write!(f, "{}", date.format("%Y-%m-%d"))
            }
        }
    }
}

/// One step of a dataset's time axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Period {
    pub ordinal: u32,
    pub calendar: CalendarPeriod,
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.calendar.fmt(f)
    }
}

/// A dense, non-empty range of periods starting at ordinal 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodAxis {
    first: CalendarPeriod,
    len: u32,
}

impl PeriodAxis {
    pub fn new(first: CalendarPeriod, last: CalendarPeriod) -> Result<PeriodAxis, ModelError> {
        if first.granularity != last.granularity {
            return Err(ModelError::MixedGranularity);
        }
        let steps = first.steps_to(&last);
        if steps < 0 {
            return Err(ModelError::ReversedRange {
                first: first.to_string(),
                last: last.to_string(),
            });
        }
        let len = u32::try_from(steps + 1).map_err(|_| ModelError::PeriodOverflow)?;
        Ok(PeriodAxis { first, len })
    }

    pub fn parse(first: &str, last: &str, granularity: Granularity) -> Result<PeriodAxis, ModelError> {
        PeriodAxis::new(
            CalendarPeriod::parse(first, granularity)?,
            CalendarPeriod::parse(last, granularity)?,
        )
    }

    pub fn granularity(&self) -> Granularity {
        self.first.granularity
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    /// Always false; an axis holds at least one period.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn first(&self) -> CalendarPeriod {
        self.first
    }

    pub fn last(&self) -> CalendarPeriod {
        self.first.offset(i64::from(self.len) - 1)
    }

    pub fn get(&self, ordinal: u32) -> Option<Period> {
        (ordinal < self.len).then(|| Period {
            ordinal,
            calendar: self.first.offset(i64::from(ordinal)),
        })
    }

    pub fn ordinal_of(&self, calendar: &CalendarPeriod) -> Option<u32> {
        if calendar.granularity != self.granularity() {
            return None;
        }
        let steps = self.first.steps_to(calendar);
        u32::try_from(steps).ok().filter(|&o| o < self.len)
    }

    pub fn iter(&self) -> impl Iterator<Item = Period> + '_ {
        (0..self.len).filter_map(|o| self.get(o))
    }
}

/// Builds the dense, ascending list of periods between two calendar labels.
pub fn period_range(first: &str, last: &str, granularity: Granularity) -> Result<Vec<Period>, ModelError> {
    Ok(PeriodAxis::parse(first, last, granularity)?.iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_months() {
        let periods = period_range("2000-01", "2000-03", Granularity::Monthly).unwrap();
        let labels: Vec<String> = periods.iter().map(|p| p.to_string()).collect();
        assert_eq!(labels, ["2000-01", "2000-02", "2000-03"]);
        let ordinals: Vec<u32> = periods.iter().map(|p| p.ordinal).collect();
        assert_eq!(ordinals, [0, 1, 2]);
    }

    #[test]
    fn degenerate_range() {
        let periods = period_range("2001-01", "2001-01", Granularity::Monthly).unwrap();
        assert_eq!(periods.len(), 1);
        assert_eq!(periods[0].ordinal, 0);
    }

    #[test]
    fn twenty_years_monthly() {
        assert_eq!(
            period_range("2000-01", "2019-12", Granularity::Monthly).unwrap().len(),
            20 * 12
        );
    }

    #[test]
    fn daily_across_leap_day() {
        let periods = period_range("2020-02-27", "2020-03-01", Granularity::Daily).unwrap();
        let labels: Vec<String> = periods.iter().map(|p| p.to_string()).collect();
        assert_eq!(labels, ["2020-02-27", "2020-02-28", "2020-02-29", "2020-03-01"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            period_range("2000-03", "2000-01", Granularity::Monthly),
            Err(ModelError::ReversedRange { .. })
        ));
        for bad in ["2000-1", "2000-13", "2000-00", "200-01", "2000/01", "2000-01-01"] {
            assert!(
                matches!(
                    CalendarPeriod::parse(bad, Granularity::Monthly),
                    Err(ModelError::PeriodFormat { .. })
                ),
                "{bad}"
            );
        }
        for bad in ["2021-02-29", "2020-2-01", "2020-02", "2020-02-30"] {
            assert!(CalendarPeriod::parse(bad, Granularity::Daily).is_err(), "{bad}");
        }
    }

    #[test]
    fn ordinal_lookup() {
        let axis = PeriodAxis::parse("1999-11", "2000-02", Granularity::Monthly).unwrap();
        let jan = CalendarPeriod::parse("2000-01", Granularity::Monthly).unwrap();
        assert_eq!(axis.ordinal_of(&jan), Some(2));
        let before = CalendarPeriod::parse("1999-10", Granularity::Monthly).unwrap();
        assert_eq!(axis.ordinal_of(&before), None);
        assert_eq!(axis.last().to_string(), "2000-02");
        assert!(axis.get(4).is_none());
    }
}
