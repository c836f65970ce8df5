//! Post-hoc regime-change metrics.

use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lppl::{FilterConfig, SearchConfig};
use crate::math;
use crate::scanner::{self, WindowGrid};
use crate::timeseries::{day_ordinal, PriceSeries, ReturnSeries, Sign};

/// Trading days per year used to annualize per-observation growth rates.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Largest peak-to-trough drop in a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drawdown {
    pub peak_date: NaiveDate,
    pub trough_date: NaiveDate,
    pub peak_price: f64,
    pub trough_price: f64,
    /// `1 - trough / peak`, in `[0, 1]`.
    pub depth: f64,
    pub duration_days: i64,
    /// No decline at all: depth is 0 and both dates are the first
    /// observation of the region.
    pub degenerate: bool,
}

/// Maximum drawdown over observations dated `from..=to`. Ties go to the
/// earliest peak, then the earliest trough.
pub fn max_drawdown(series: &PriceSeries, from: NaiveDate, to: NaiveDate) -> Result<Drawdown> {
    let region = series.slice(from, to)?;
    let obs = region.observations();
    if obs.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: obs.len(),
        });
    }
    let mut peak = 0usize;
    let mut best: Option<(usize, usize, f64)> = None;
    for j in 1..obs.len() {
        if obs[j].price > obs[peak].price {
            peak = j;
            continue;
        }
        let depth = 1.0 - obs[j].price / obs[peak].price;
        if depth > 0.0 && best.is_none_or(|(_, _, d)| depth > d) {
            best = Some((peak, j, depth));
        }
    }
    Ok(match best {
        Some((i, j, depth)) => Drawdown {
            peak_date: obs[i].date,
            trough_date: obs[j].date,
            peak_price: obs[i].price,
            trough_price: obs[j].price,
            depth,
            duration_days: (obs[j].date - obs[i].date).num_days(),
            degenerate: false,
        },
        None => Drawdown {
            peak_date: obs[0].date,
            trough_date: obs[0].date,
            peak_price: obs[0].price,
            trough_price: obs[0].price,
            depth: 0.0,
            duration_days: 0,
            degenerate: true,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Updays,
    SgDerivative,
    BubbleIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub date: NaiveDate,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub kind: MetricKind,
    /// Calendar days for up-day windows, observations for SG stencils,
    /// 0 when not applicable.
    pub window: u32,
    /// Multiply `value` by this to get per-year units, when meaningful.
    pub annualization: Option<f64>,
    pub entries: Vec<MetricPoint>,
}

impl MetricSeries {
    /// Entry with the largest value; ties go to the earliest date.
    pub fn peak(&self) -> Option<MetricPoint> {
        self.entries.iter().copied().fold(None, |best, p| match best {
            Some(b) if b.value >= p.value => Some(b),
            _ => Some(p),
        })
    }

    /// [`Self::peak`] restricted to `from..=to`.
    pub fn peak_between(&self, from: NaiveDate, to: NaiveDate) -> Option<MetricPoint> {
        self.entries
            .iter()
            .copied()
            .filter(|p| p.date >= from && p.date <= to)
            .fold(None, |best, p| match best {
                Some(b) if b.value >= p.value => Some(b),
                _ => Some(p),
            })
    }
}

/// Fraction of up days among up and down days in the trailing window
/// `(d - window_days, d]`. Zero returns are ignored; dates whose window
/// holds no nonzero return are omitted. Only dates with a full trailing
/// window (`d - window_days >= start of data`) are reported.
pub fn updays_fraction(returns: &ReturnSeries, window_days: u32) -> Result<MetricSeries> {
    let w = i64::from(window_days);
    if window_days == 0 {
        return Err(Error::InvalidConfig("up-day window must be positive".into()));
    }
    let entries = &returns.entries;
    let span = entries.last().map_or(0, |e| (e.date - returns.start).num_days());
    if span < w {
        return Err(Error::SpanTooShort {
            needed: w as f64,
            have: span as f64,
        });
    }
    let mut out = Vec::new();
    let (mut ups, mut downs) = (0usize, 0usize);
    let mut tail = 0usize;
    for (i, e) in entries.iter().enumerate() {
        match e.sign {
            Sign::Up => ups += 1,
            Sign::Down => downs += 1,
            Sign::Zero => {}
        }
        while (e.date - entries[tail].date).num_days() >= w {
            match entries[tail].sign {
                Sign::Up => ups -= 1,
                Sign::Down => downs -= 1,
                Sign::Zero => {}
            }
            tail += 1;
        }
        debug_assert!(tail <= i);
        let covered = (e.date - returns.start).num_days() >= w;
        if covered && ups + downs > 0 {
            out.push(MetricPoint {
                date: e.date,
                value: ups as f64 / (ups + downs) as f64,
            });
        }
    }
    Ok(MetricSeries {
        kind: MetricKind::Updays,
        window: window_days,
        annualization: None,
        entries: out,
    })
}

/// Savitzky-Golay first-derivative weights for a centred stencil of
/// `2 * half + 1` unit-spaced samples and polynomial `order`.
pub fn sg_derivative_weights(half: usize, order: usize) -> Result<Vec<f64>> {
    let len = 2 * half + 1;
    if half == 0 || order == 0 || order >= len || order > 7 {
        return Err(Error::InvalidConfig(alloc::format!(
            "Savitzky-Golay: need 1 <= order < window and order <= 7, got order {order}, window {len}"
        )));
    }
    let k = order + 1;
    // Abscissae scaled to [-1, 1] keep the normal equations well conditioned.
    let xs: Vec<f64> = (0..len).map(|i| (i as f64 - half as f64) / half as f64).collect();
    let mut gram = alloc::vec![0.0; k * k];
    for &x in &xs {
        let mut pw = [1.0f64; 16];
        for p in 1..2 * k {
            pw[p] = pw[p - 1] * x;
        }
        for r in 0..k {
            for c in 0..k {
                gram[r * k + c] += pw[r + c];
            }
        }
    }
    // Row 1 of (V'V)^-1 (the matrix is symmetric).
    let mut e1 = alloc::vec![0.0; k];
    e1[1] = 1.0;
    linalg::solve_square(&mut gram, &mut e1, k)
        .ok_or_else(|| Error::InvalidConfig("Savitzky-Golay normal equations are singular".into()))?;
    Ok(xs
        .iter()
        .map(|&x| {
            let mut acc = 0.0;
            let mut pw = 1.0;
            for z in &e1 {
                acc += z * pw;
                pw *= x;
            }
            acc / half as f64
        })
        .collect())
}

/// Stencil length actually used for a requested window: even counts are
/// rounded up to the next odd count.
pub fn sg_stencil_len(window_obs: usize) -> usize {
    if window_obs.is_multiple_of(2) {
        window_obs + 1
    } else {
        window_obs
    }
}

/// First derivative per sample of the centred order-`order` least-squares
/// polynomial, for every sample with a full stencil. Output index `i`
/// corresponds to input index `i + half`.
pub fn sg_derivative_values(values: &[f64], window_obs: usize, order: usize) -> Result<Vec<f64>> {
    let len = sg_stencil_len(window_obs);
    let half = len / 2;
    let weights = sg_derivative_weights(half, order)?;
    if values.len() < len {
        return Err(Error::TooShort {
            needed: len,
            have: values.len(),
        });
    }
    Ok(values
        .windows(len)
        .map(|w| w.iter().zip(&weights).map(|(v, c)| v * c).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgInput {
    #[default]
    LogPrice,
    Price,
}

/// Savitzky-Golay growth rate of a series, dated at stencil centres.
/// Observations are treated as unit spaced; `value` is per observation and
/// `annualization` is [`TRADING_DAYS_PER_YEAR`].
pub fn sg_derivative(series: &PriceSeries, window_obs: usize, order: usize, input: SgInput) -> Result<MetricSeries> {
    let values: Vec<f64> = match input {
        SgInput::LogPrice => series.log_prices(),
        SgInput::Price => series.prices().collect(),
    };
    let len = sg_stencil_len(window_obs);
    let half = len / 2;
    let deriv = sg_derivative_values(&values, window_obs, order)?;
    let obs = series.observations();
    let entries = deriv
        .into_iter()
        .enumerate()
        .map(|(i, value)| MetricPoint {
            date: obs[i + half].date,
            value,
        })
        .collect();
    Ok(MetricSeries {
        kind: MetricKind::SgDerivative,
        window: len as u32,
        annualization: Some(TRADING_DAYS_PER_YEAR),
        entries,
    })
}

/// Annualized growth of an OLS trend of log-price on calendar time over
/// `from..=to`: `exp(slope * 365.25) - 1`.
pub fn trend_slope(series: &PriceSeries, from: NaiveDate, to: NaiveDate) -> Result<f64> {
    let region = series.slice(from, to)?;
    if region.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: region.len(),
        });
    }
    let t = region.times();
    let y = region.log_prices();
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let mut cols = alloc::vec![1.0; t.len()];
    cols.extend(t.iter().map(|v| v - mean));
    let ls = linalg::solve(&mut cols, &y, 2).ok_or(Error::InvalidRange { from, to })?;
    Ok(math::exp(ls.coefficients[1] * 365.25) - 1.0)
}

/// Proxy bubble index: fraction of qualified fits among all windows
/// tested by a scan of the data up to `as_of`.
pub fn bubble_index(
    series: &PriceSeries,
    as_of: NaiveDate,
    grid: &WindowGrid,
    search: &SearchConfig,
    filter: &FilterConfig,
) -> Result<f64> {
    let upto = series.truncate_after(as_of)?;
    let result = scanner::scan(&upto, grid, search, filter)?;
    if result.n_tested == 0 {
        return Err(Error::TooShort {
            needed: search.min_obs,
            have: upto.len(),
        });
    }
    Ok(result.found_fraction())
}

/// [`bubble_index`] evaluated at each date in `as_of`, skipping dates
/// where a scan is infeasible.
pub fn bubble_index_series(
    series: &PriceSeries,
    as_of: &[NaiveDate],
    grid: &WindowGrid,
    search: &SearchConfig,
    filter: &FilterConfig,
) -> MetricSeries {
    let mut dates: Vec<NaiveDate> = as_of.to_vec();
    dates.sort();
    dates.dedup();
    let entries = dates
        .into_iter()
        .filter_map(|d| {
            bubble_index(series, d, grid, search, filter)
                .ok()
                .map(|value| MetricPoint { date: d, value })
        })
        .collect();
    MetricSeries {
        kind: MetricKind::BubbleIndex,
        window: 0,
        annualization: None,
        entries,
    }
}

/// Calendar days between two dates as a real number.
pub fn days_between(a: NaiveDate, b: NaiveDate) -> f64 {
    day_ordinal(b) - day_ordinal(a)
}
