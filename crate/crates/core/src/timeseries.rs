//! Validated price series on a calendar-day axis.
//!
//! Dates map to real-valued day ordinals counted from 1970-01-01, so every
//! window length and horizon elsewhere in the crate is in calendar days.
//! Gaps (weekends, holidays) are left as they are.

use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

const EPOCH: NaiveDate = match NaiveDate::from_ymd_opt(1970, 1, 1) {
    Some(d) => d,
    None => panic!("epoch"),
};

/// Days since 1970-01-01.
pub fn day_ordinal(date: NaiveDate) -> f64 {
    date.signed_duration_since(EPOCH).num_days() as f64
}

/// Calendar date containing the ordinal `t` (fractions are floored).
pub fn date_from_ordinal(t: f64) -> NaiveDate {
    let days = math::floor(t) as i64;
    if days >= 0 {
        EPOCH + Days::new(days as u64)
    } else {
        EPOCH - Days::new(days.unsigned_abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub date: NaiveDate,
    pub price: f64,
}

/// Dated, strictly positive prices in ascending date order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeries")]
pub struct PriceSeries {
    asset_id: String,
    source: String,
    observations: Vec<Observation>,
}

#[derive(Deserialize)]
struct RawSeries {
    asset_id: String,
    source: String,
    observations: Vec<Observation>,
}

impl TryFrom<RawSeries> for PriceSeries {
    type Error = Error;

    fn try_from(raw: RawSeries) -> Result<Self> {
        PriceSeries::new(raw.asset_id, raw.source, raw.observations)
    }
}

impl PriceSeries {
    pub fn new(asset_id: impl Into<String>, source: impl Into<String>, observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptySeries);
        }
        for obs in &observations {
            if !(obs.price > 0.0) || !obs.price.is_finite() {
                return Err(Error::NonPositivePrice {
                    date: obs.date,
                    price: obs.price,
                });
            }
        }
        for pair in observations.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(Error::UnorderedDates { date: pair[1].date });
            }
        }
        Ok(Self {
            asset_id: asset_id.into(),
            source: source.into(),
            observations,
        })
    }

    /// Builds a series from `(date, price)` pairs.
    pub fn from_pairs(asset_id: impl Into<String>, pairs: impl IntoIterator<Item = (NaiveDate, f64)>) -> Result<Self> {
        let observations = pairs
            .into_iter()
            .map(|(date, price)| Observation { date, price })
            .collect();
        Self::new(asset_id, "", observations)
    }

    pub fn asset_id(&self) -> &str {
        &self.asset_id
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first_date(&self) -> NaiveDate {
        self.observations[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.observations[self.observations.len() - 1].date
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.observations.iter().map(|o| o.date)
    }

    pub fn prices(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.price)
    }

    pub fn times(&self) -> Vec<f64> {
        self.dates().map(day_ordinal).collect()
    }

    pub fn log_prices(&self) -> Vec<f64> {
        self.prices().map(math::ln).collect()
    }

    /// Date of the highest price; ties resolve to the earliest date.
    pub fn peak_date(&self) -> NaiveDate {
        let mut best = self.observations[0];
        for obs in &self.observations[1..] {
            if obs.price > best.price {
                best = *obs;
            }
        }
        best.date
    }

    /// Observations with `t1 <= date <= t2`.
    pub fn slice(&self, t1: NaiveDate, t2: NaiveDate) -> Result<PriceSeries> {
        if t1 >= t2 {
            return Err(Error::InvalidRange { from: t1, to: t2 });
        }
        let lo = self.observations.partition_point(|o| o.date < t1);
        let hi = self.observations.partition_point(|o| o.date <= t2);
        if lo >= hi {
            return Err(Error::EmptySlice { from: t1, to: t2 });
        }
        Ok(self.slice_indices(lo, hi))
    }

    /// Observations with index in `lo..hi`. Panics if the range is empty or
    /// out of bounds.
    pub fn slice_indices(&self, lo: usize, hi: usize) -> PriceSeries {
        assert!(lo < hi && hi <= self.observations.len());
        PriceSeries {
            asset_id: self.asset_id.clone(),
            source: self.source.clone(),
            observations: self.observations[lo..hi].to_vec(),
        }
    }

    /// Everything up to and including `as_of`.
    pub fn truncate_after(&self, as_of: NaiveDate) -> Result<PriceSeries> {
        let hi = self.observations.partition_point(|o| o.date <= as_of);
        if hi == 0 {
            return Err(Error::EmptySlice {
                from: self.first_date(),
                to: as_of,
            });
        }
        Ok(self.slice_indices(0, hi))
    }

    /// Same series with every price multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<PriceSeries> {
        let obs = self
            .observations
            .iter()
            .map(|o| Observation {
                date: o.date,
                price: o.price * factor,
            })
            .collect();
        PriceSeries::new(self.asset_id.clone(), self.source.clone(), obs)
    }

    /// Index of the last observation dated at or before `date`.
    pub fn index_at_or_before(&self, date: NaiveDate) -> Option<usize> {
        let n = self.observations.partition_point(|o| o.date <= date);
        n.checked_sub(1)
    }

    /// Index of the first observation dated at or after `date`.
    pub fn index_at_or_after(&self, date: NaiveDate) -> Option<usize> {
        let i = self.observations.partition_point(|o| o.date < date);
        (i < self.observations.len()).then_some(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Up,
    Down,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Return {
    pub date: NaiveDate,
    pub value: f64,
    pub sign: Sign,
}

/// One-day close-to-close price changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    /// Date of the first price the returns were computed from.
    pub start: NaiveDate,
    pub entries: Vec<Return>,
}

/// Close-to-close differences; entry `i` is dated on observation `i + 1`.
/// Zero detection is exact equality of recorded prices.
pub fn returns(series: &PriceSeries) -> Result<ReturnSeries> {
    let obs = series.observations();
    if obs.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: obs.len(),
        });
    }
    let entries = obs
        .windows(2)
        .map(|w| {
            let value = w[1].price - w[0].price;
            let sign = if w[1].price > w[0].price {
                Sign::Up
            } else if w[1].price == w[0].price {
                Sign::Zero
            } else {
                Sign::Down
            };
            Return {
                date: w[1].date,
                value,
                sign,
            }
        })
        .collect();
    Ok(ReturnSeries {
        start: obs[0].date,
        entries,
    })
}
