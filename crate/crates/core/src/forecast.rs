//! Residual bootstrap around qualified fits and the critical-time
//! quantile windows derived from the ensemble.

use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppl::{self, FilterConfig, LpplFit, SearchConfig};
use crate::math;
use crate::scanner::ScanResult;
use crate::timeseries::{date_from_ordinal, day_ordinal, PriceSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resampling {
    /// Residuals drawn independently with replacement.
    #[default]
    Iid,
    /// Circular blocks of `block_len` consecutive residuals.
    Block,
}

/// Which fits contribute critical times to the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    #[default]
    ParentsAndRefits,
    RefitsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub n_bootstraps: usize,
    pub horizon_days: f64,
    pub rng_seed: u64,
    pub resampling: Resampling,
    pub block_len: usize,
    pub ensemble: EnsembleMode,
    /// Keep critical times at or before the last observation (they can
    /// come from windows ending before it). When false the ensemble only
    /// admits `last_obs < tc`.
    pub admit_before_last_obs: bool,
    /// Re-apply the filter to bootstrap refits.
    pub requalify_refits: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_bootstraps: 10,
            horizon_days: 182.0,
            rng_seed: 0,
            resampling: Resampling::Iid,
            block_len: 10,
            ensemble: EnsembleMode::ParentsAndRefits,
            admit_before_last_obs: true,
            requalify_refits: false,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bootstraps == 0 {
            return Err(Error::InvalidConfig("bootstrap.n_bootstraps must be >= 1".into()));
        }
        if !(self.horizon_days > 0.0) {
            return Err(Error::InvalidConfig("bootstrap.horizon_days must be positive".into()));
        }
        if self.resampling == Resampling::Block && self.block_len == 0 {
            return Err(Error::InvalidConfig("bootstrap.block_len must be positive".into()));
        }
        Ok(())
    }

    fn admits(&self, tc: f64, last_obs: f64) -> bool {
        tc <= last_obs + self.horizon_days && (self.admit_before_last_obs || tc > last_obs)
    }
}

/// Stream index for bootstrap `b` of the `k`-th qualified fit.
pub fn stream_index(k: usize, b: usize) -> u64 {
    ((k as u64) << 32) | b as u64
}

/// Model values plus resampled residuals of `fit` on the window
/// `(times, log_prices)`. Deterministic in `(cfg.rng_seed, index)`.
pub fn make_synthetic(
    fit: &LpplFit,
    times: &[f64],
    log_prices: &[f64],
    cfg: &BootstrapConfig,
    index: u64,
) -> Result<Vec<f64>> {
    if times.len() != log_prices.len() {
        return Err(Error::LengthMismatch {
            left: times.len(),
            right: log_prices.len(),
        });
    }
    if times.is_empty() {
        return Err(Error::TooShort { needed: 1, have: 0 });
    }
    let model: Vec<f64> = times
        .iter()
        .map(|&t| lppl::evaluate(&fit.params, t))
        .collect::<Result<_>>()?;
    let resid: Vec<f64> = log_prices.iter().zip(&model).map(|(y, m)| y - m).collect();
    let n = resid.len();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(index);
    let mut out = Vec::with_capacity(n);
    match cfg.resampling {
        Resampling::Iid => {
            for m in &model {
                out.push(m + resid[rng.random_range(0..n)]);
            }
        }
        Resampling::Block => {
            let block = cfg.block_len.max(1);
            while out.len() < n {
                let start = rng.random_range(0..n);
                for j in 0..block {
                    if out.len() == n {
                        break;
                    }
                    let i = out.len();
                    out.push(model[i] + resid[(start + j) % n]);
                }
            }
        }
    }
    Ok(out)
}

/// Critical times collected from parents and bootstrap refits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub tcs: Vec<f64>,
    pub n_parents: usize,
    pub n_refits: usize,
    /// Refits that failed to converge (dropped, not retried).
    pub n_unconverged: usize,
    /// Refits dropped by re-qualification.
    pub n_unqualified: usize,
    /// Parents and refits whose `tc` fell outside the horizon.
    pub n_outside_horizon: usize,
}

struct Member {
    parent: Option<f64>,
    refits: Vec<Option<f64>>,
    unqualified: usize,
}

#[allow(clippy::too_many_arguments)]
fn bootstrap_member(
    k: usize,
    fit: &LpplFit,
    first: usize,
    last: usize,
    times: &[f64],
    y: &[f64],
    cfg: &BootstrapConfig,
    search: &SearchConfig,
    filter: &FilterConfig,
) -> Result<Member> {
    let (wt, wy) = (&times[first..=last], &y[first..=last]);
    let mut refits = Vec::with_capacity(cfg.n_bootstraps);
    let mut unqualified = 0;
    for b in 0..cfg.n_bootstraps {
        let synthetic = make_synthetic(fit, wt, wy, cfg, stream_index(k, b))?;
        let refit = lppl::refit_from(wt, &synthetic, fit.t1, fit.t2, fit.params.shape(), search);
        let tc = match refit {
            Ok(r) if r.converged => {
                if cfg.requalify_refits && !lppl::qualify(&r, filter) {
                    unqualified += 1;
                    None
                } else {
                    Some(r.params.tc)
                }
            }
            _ => None,
        };
        refits.push(tc);
    }
    Ok(Member {
        parent: Some(fit.params.tc),
        refits,
        unqualified,
    })
}

/// Bootstraps every qualified fit of `scan` and returns the critical times
/// inside the horizon, in scan order (parent first, then its refits).
pub fn ensemble_tc(
    scan: &ScanResult,
    series: &PriceSeries,
    cfg: &BootstrapConfig,
    search: &SearchConfig,
    filter: &FilterConfig,
) -> Result<Ensemble> {
    cfg.validate()?;
    search.validate()?;
    let times = series.times();
    let y = series.log_prices();
    let qualified: Vec<_> = scan.qualified().collect();
    if qualified.is_empty() {
        return Err(Error::NoQualifiedFits);
    }
    for (w, _) in &qualified {
        if w.last >= times.len() {
            return Err(Error::InvalidConfig(
                "scan windows do not match the supplied series".into(),
            ));
        }
    }
    let run = |(k, (w, fit)): (usize, &(&crate::scanner::Window, &LpplFit))| {
        bootstrap_member(k, fit, w.first, w.last, &times, &y, cfg, search, filter)
    };

    #[cfg(feature = "parallel")]
    let members: Vec<Member> = {
        use rayon::prelude::*;
        qualified.par_iter().enumerate().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let members: Vec<Member> = qualified.iter().enumerate().map(run).collect::<Result<_>>()?;

    let last_obs = day_ordinal(series.last_date());
    let mut ensemble = Ensemble {
        tcs: Vec::new(),
        n_parents: 0,
        n_refits: 0,
        n_unconverged: 0,
        n_unqualified: 0,
        n_outside_horizon: 0,
    };
    for m in members {
        if cfg.ensemble == EnsembleMode::ParentsAndRefits {
            if let Some(tc) = m.parent {
                if cfg.admits(tc, last_obs) {
                    ensemble.tcs.push(tc);
                    ensemble.n_parents += 1;
                } else {
                    ensemble.n_outside_horizon += 1;
                }
            }
        }
        ensemble.n_unqualified += m.unqualified;
        let unconverged = m.refits.iter().filter(|r| r.is_none()).count() - m.unqualified;
        ensemble.n_unconverged += unconverged;
        for tc in m.refits.into_iter().flatten() {
            if cfg.admits(tc, last_obs) {
                ensemble.tcs.push(tc);
                ensemble.n_refits += 1;
            } else {
                ensemble.n_outside_horizon += 1;
            }
        }
    }
    if ensemble.tcs.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(ensemble)
}

/// Linear interpolation between closest ranks on sorted data
/// (`h = (n - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of empty data");
    let h = (n - 1) as f64 * p;
    let lo = math::floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// The 5/95 and 20/80 critical-time windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastQuantiles {
    pub q05: NaiveDate,
    pub q20: NaiveDate,
    pub q80: NaiveDate,
    pub q95: NaiveDate,
    pub last_obs: NaiveDate,
    pub n_ensemble: usize,
    /// Unrounded quantiles as day ordinals, in the order 5, 20, 80, 95.
    pub ordinals: [f64; 4],
}

impl ForecastQuantiles {
    /// Two-row table: `05/95 <low> <high>` and `20/80 <low> <high>`.
    pub fn table(&self) -> String {
        alloc::format!(
            "      Low        High\n05/95 {} {}\n20/80 {} {}\n",
            self.q05,
            self.q95,
            self.q20,
            self.q80
        )
    }

    pub fn outer_contains(&self, date: NaiveDate) -> bool {
        date >= self.q05 && date <= self.q95
    }

    pub fn inner_contains(&self, date: NaiveDate) -> bool {
        date >= self.q20 && date <= self.q80
    }
}

pub fn quantiles(tcs: &[f64], last_obs: NaiveDate) -> Result<ForecastQuantiles> {
    if tcs.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut sorted = tcs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = [0.05, 0.20, 0.80, 0.95].map(|p| quantile_sorted(&sorted, p));
    Ok(ForecastQuantiles {
        q05: date_from_ordinal(q[0]),
        q20: date_from_ordinal(q[1]),
        q80: date_from_ordinal(q[2]),
        q95: date_from_ordinal(q[3]),
        last_obs,
        n_ensemble: tcs.len(),
        ordinals: q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedPoint {
    pub t: f64,
    pub ln_price: f64,
    pub post_critical: bool,
}

/// Model path beyond the window: `t2 < t <= t2 + horizon` every
/// `step_days`, always ending exactly at the horizon. Points within half a
/// day of `tc` are skipped.
pub fn extrapolate(fit: &LpplFit, horizon_days: f64, step_days: f64) -> Vec<ExtrapolatedPoint> {
    let t2 = fit.t2_ordinal();
    let tc = fit.params.tc;
    let mut ts = Vec::new();
    if horizon_days > 0.0 && step_days > 0.0 {
        let mut k = 1usize;
        while (k as f64) * step_days < horizon_days {
            ts.push(t2 + k as f64 * step_days);
            k += 1;
        }
        ts.push(t2 + horizon_days);
    }
    ts.into_iter()
        .filter(|t| (t - tc).abs() >= 0.5)
        .filter_map(|t| {
            lppl::evaluate(&fit.params, t).ok().map(|v| ExtrapolatedPoint {
                t,
                ln_price: v,
                post_critical: t > tc,
            })
        })
        .collect()
}

/// Everything a published forecast needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub quantiles: ForecastQuantiles,
    pub ensemble: Ensemble,
}

/// Bootstrap ensemble and quantiles for a finished scan.
pub fn forecast(
    scan: &ScanResult,
    series: &PriceSeries,
    cfg: &BootstrapConfig,
    search: &SearchConfig,
    filter: &FilterConfig,
) -> Result<Forecast> {
    let ensemble = ensemble_tc(scan, series, cfg, search, filter)?;
    let quantiles = quantiles(&ensemble.tcs, series.last_date())?;
    Ok(Forecast { quantiles, ensemble })
}
