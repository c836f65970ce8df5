//! Sub-window grid and the per-window fitting scan.
//!
//! `t2` steps back from the last observation by `dt2` for at most
//! `t2_span` days; for each `t2`, `t1` steps back from `t2 - min_len` by
//! `dt1` while the window stays within `max_len` and the data. Nominal
//! grid dates are snapped inward onto observations: `t2` to the latest
//! observation at or before it, `t1` to the earliest at or after it.

use alloc::string::ToString;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppl::{self, FilterConfig, LpplFit, SearchConfig};
use crate::timeseries::{date_from_ordinal, day_ordinal, PriceSeries};

/// Slack for comparing grid arithmetic in day units.
const DAY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowGrid {
    pub dt1: f64,
    pub dt2: f64,
    pub min_len: f64,
    pub max_len: f64,
    pub t2_span: f64,
}

impl Default for WindowGrid {
    fn default() -> Self {
        Self {
            dt1: 10.0,
            dt2: 10.0,
            min_len: 110.0,
            max_len: 1500.0,
            t2_span: 31.0,
        }
    }
}

impl WindowGrid {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt1 > 0.0
            && self.dt2 > 0.0
            && self.min_len > 0.0
            && self.t2_span >= 0.0
            && self.min_len < self.max_len
            && self.dt1 <= self.min_len
            && [self.dt1, self.dt2, self.min_len, self.max_len, self.t2_span]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!(
                "grid: need positive steps, t2_span >= 0, dt1 <= min_len < max_len; got {self:?}"
            )))
        }
    }

    /// Nominal `t2` ordinals, latest first.
    fn t2_values(&self, last: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let back = k as f64 * self.dt2;
            if back > self.t2_span + DAY_EPS {
                break;
            }
            out.push(last - back);
            k += 1;
        }
        out
    }
}

/// One grid window: nominal bounds plus the observation index range they
/// snap to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub nominal_t1: f64,
    pub nominal_t2: f64,
    /// Index of the first observation inside the window.
    pub first: usize,
    /// Index of the last observation inside the window.
    pub last: usize,
}

impl Window {
    pub fn len_days(&self) -> f64 {
        self.nominal_t2 - self.nominal_t1
    }

    pub fn population(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn nominal_dates(&self) -> (NaiveDate, NaiveDate) {
        (date_from_ordinal(self.nominal_t1), date_from_ordinal(self.nominal_t2))
    }
}

/// All nominal `(t1, t2)` ordinals in output order (t2 descending, length
/// ascending), before snapping or population checks.
pub fn nominal_windows(series: &PriceSeries, grid: &WindowGrid) -> Result<Vec<(f64, f64)>> {
    grid.validate()?;
    let first = day_ordinal(series.first_date());
    let last = day_ordinal(series.last_date());
    if last - first + DAY_EPS < grid.min_len {
        return Err(Error::SpanTooShort {
            needed: grid.min_len,
            have: last - first,
        });
    }
    let mut out = Vec::new();
    for t2 in grid.t2_values(last) {
        let mut j = 0usize;
        loop {
            let len = grid.min_len + j as f64 * grid.dt1;
            let t1 = t2 - len;
            if len > grid.max_len + DAY_EPS || t1 < first - DAY_EPS {
                break;
            }
            out.push((t1, t2));
            j += 1;
        }
    }
    Ok(out)
}

/// Grid windows snapped onto observations, excluding those with fewer than
/// `min_obs` points.
pub fn generate_windows(series: &PriceSeries, grid: &WindowGrid, min_obs: usize) -> Result<Vec<Window>> {
    let nominal = nominal_windows(series, grid)?;
    let times = series.times();
    let windows = nominal
        .into_iter()
        .filter_map(|(t1, t2)| {
            let last = times.partition_point(|&t| t <= t2 + DAY_EPS).checked_sub(1)?;
            let first = times.partition_point(|&t| t < t1 - DAY_EPS);
            (first <= last && last + 1 - first >= min_obs).then_some(Window {
                nominal_t1: t1,
                nominal_t2: t2,
                first,
                last,
            })
        })
        .collect();
    Ok(windows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub asset_id: alloc::string::String,
    pub grid: WindowGrid,
    pub search: SearchConfig,
    pub filter: FilterConfig,
    pub last_obs_date: NaiveDate,
    pub peak_date: NaiveDate,
    pub n_found: usize,
    pub n_tested: usize,
    pub windows: Vec<Window>,
    pub fits: Vec<LpplFit>,
}

impl ScanResult {
    pub fn qualified(&self) -> impl Iterator<Item = (&Window, &LpplFit)> {
        self.windows.iter().zip(&self.fits).filter(|(_, f)| f.qualified)
    }

    /// `n_found / n_tested`.
    pub fn found_fraction(&self) -> f64 {
        if self.n_tested == 0 {
            0.0
        } else {
            self.n_found as f64 / self.n_tested as f64
        }
    }
}

fn fit_one(
    times: &[f64],
    y: &[f64],
    series: &PriceSeries,
    w: &Window,
    search: &SearchConfig,
    filter: &FilterConfig,
) -> LpplFit {
    let obs = series.observations();
    let (t1, t2) = (obs[w.first].date, obs[w.last].date);
    let range = w.first..w.last + 1;
    match lppl::fit_window(&times[range.clone()], &y[range], t1, t2, search) {
        Ok(mut fit) => {
            fit.qualified = lppl::qualify(&fit, filter);
            fit
        }
        Err(e) => LpplFit::failed(t1, t2, w.population(), e.to_string()),
    }
}

/// Fits every grid window. Window failures become unconverged records;
/// output order is the window order regardless of scheduling.
pub fn scan(
    series: &PriceSeries,
    grid: &WindowGrid,
    search: &SearchConfig,
    filter: &FilterConfig,
) -> Result<ScanResult> {
    search.validate()?;
    filter.validate()?;
    let windows = generate_windows(series, grid, search.min_obs)?;
    let times = series.times();
    let y = series.log_prices();

    #[cfg(feature = "parallel")]
    let fits: Vec<LpplFit> = {
        use rayon::prelude::*;
        windows
            .par_iter()
            .map(|w| fit_one(&times, &y, series, w, search, filter))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let fits: Vec<LpplFit> = windows
        .iter()
        .map(|w| fit_one(&times, &y, series, w, search, filter))
        .collect();

    let n_found = fits.iter().filter(|f| f.qualified).count();
    Ok(ScanResult {
        asset_id: series.asset_id().into(),
        grid: grid.clone(),
        search: search.clone(),
        filter: filter.clone(),
        last_obs_date: series.last_date(),
        peak_date: series.peak_date(),
        n_found,
        n_tested: fits.len(),
        windows,
        fits,
    })
}
