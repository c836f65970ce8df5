//! The log-periodic power-law model
//!
//! ```text
//! ln P(t) = A + B |t - tc|^alpha + C |t - tc|^alpha cos(omega ln|t - tc| + phi)
//! ```
//!
//! Fitting splits the seven parameters in two. The nonlinear shape
//! `(tc, alpha, omega)` is searched numerically; for a fixed shape the
//! model is linear in `(A, B, C1, C2)` with
//! `C cos(x + phi) = C1 cos(x) + C2 sin(x)`, so those four are solved
//! exactly by least squares ("profiled out"). The search is a coarse grid
//! over the shape box followed by Levenberg-Marquardt refinement of the
//! profiled residuals from the best grid points.

use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{self, atan2, exp, ln, sin_cos, sqrt};
use crate::timeseries::{date_from_ordinal, day_ordinal, PriceSeries};

/// Parameters in the seven-parameter model form. `tc` is a day ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub omega: f64,
    pub phi: f64,
    pub tc: f64,
}

impl LpplParams {
    /// Combines a shape with its profiled linear coefficients.
    pub fn from_linear(shape: Shape, linear: LinearParams) -> Self {
        let c = sqrt(linear.c1 * linear.c1 + linear.c2 * linear.c2);
        let phi = if c == 0.0 {
            0.0
        } else {
            math::wrap_phase(atan2(-linear.c2, linear.c1))
        };
        Self {
            a: linear.a,
            b: linear.b,
            c,
            alpha: shape.alpha,
            omega: shape.omega,
            phi,
            tc: shape.tc,
        }
    }

    pub fn shape(&self) -> Shape {
        Shape {
            tc: self.tc,
            alpha: self.alpha,
            omega: self.omega,
        }
    }

    pub fn linear(&self) -> LinearParams {
        let (s, c) = sin_cos(self.phi);
        LinearParams {
            a: self.a,
            b: self.b,
            c1: self.c * c,
            c2: -self.c * s,
        }
    }

    /// Same parameters with `phi` reduced to `[0, 2π)`.
    pub fn canonical(mut self) -> Self {
        self.phi = math::wrap_phase(self.phi);
        self
    }

    /// `|C / B|`, infinite when `B = 0`.
    pub fn relative_oscillation(&self) -> f64 {
        if self.b == 0.0 {
            f64::INFINITY
        } else {
            (self.c / self.b).abs()
        }
    }

    pub fn tc_date(&self) -> NaiveDate {
        date_from_ordinal(self.tc)
    }
}

/// The nonlinear part of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub tc: f64,
    pub alpha: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Exact least-squares solution for a fixed shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub linear: LinearParams,
    pub sse: f64,
}

/// Model log-price at day ordinal `t`.
pub fn evaluate(params: &LpplParams, t: f64) -> Result<f64> {
    let dt = (t - params.tc).abs();
    if dt == 0.0 {
        return Err(Error::Singularity { tc: params.tc });
    }
    let ld = ln(dt);
    let p = exp(params.alpha * ld);
    Ok(params.a + params.b * p + params.c * p * math::cos(params.omega * ld + params.phi))
}

/// Fills the four design columns `[1, f, f cos, f sin]` for distances
/// `dt` (all > 0).
fn design_columns(dt: impl ExactSizeIterator<Item = f64>, alpha: f64, omega: f64, out: &mut Vec<f64>) {
    let n = dt.len();
    out.clear();
    out.resize(4 * n, 1.0);
    for (i, d) in dt.enumerate() {
        let ld = ln(d);
        let p = exp(alpha * ld);
        let (s, c) = sin_cos(omega * ld);
        out[n + i] = p;
        out[2 * n + i] = p * c;
        out[3 * n + i] = p * s;
    }
}

fn linear_from(coef: &[f64]) -> LinearParams {
    LinearParams {
        a: coef[0],
        b: coef[1],
        c1: coef[2],
        c2: coef[3],
    }
}

/// Solves the linear coefficients for `shape` on `(times, log_prices)`.
///
/// `shape.tc` must lie strictly outside `[min(times), max(times)]`.
pub fn profile_linear(shape: Shape, times: &[f64], log_prices: &[f64]) -> Result<Profile> {
    if times.len() != log_prices.len() {
        return Err(Error::LengthMismatch {
            left: times.len(),
            right: log_prices.len(),
        });
    }
    if times.is_empty() {
        return Err(Error::TooShort { needed: 1, have: 0 });
    }
    let (lo, hi) = times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &t| (l.min(t), h.max(t)));
    if shape.tc >= lo && shape.tc <= hi {
        return Err(Error::CriticalTimeInsideWindow { tc: shape.tc });
    }
    let degenerate = Error::DegenerateShape {
        tc: shape.tc,
        alpha: shape.alpha,
        omega: shape.omega,
    };
    let mut cols = Vec::new();
    design_columns(
        times.iter().map(|t| (t - shape.tc).abs()),
        shape.alpha,
        shape.omega,
        &mut cols,
    );
    let design = cols.clone();
    let ls = linalg::solve(&mut cols, log_prices, 4).ok_or(degenerate)?;
    let sse = residual_sse(&design, &ls.coefficients, log_prices, None);
    Ok(Profile {
        linear: linear_from(&ls.coefficients),
        sse,
    })
}

fn residual_sse(design: &[f64], coef: &[f64], y: &[f64], mut out: Option<&mut Vec<f64>>) -> f64 {
    let n = y.len();
    if let Some(o) = out.as_deref_mut() {
        o.clear();
    }
    let mut sse = 0.0;
    for i in 0..n {
        let m = coef[0] + coef[1] * design[n + i] + coef[2] * design[2 * n + i] + coef[3] * design[3 * n + i];
        let r = y[i] - m;
        sse += r * r;
        if let Some(o) = out.as_deref_mut() {
            o.push(r);
        }
    }
    sse
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.lo < self.hi && self.lo.is_finite() && self.hi.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(alloc::format!(
                "{name}: need lo < hi, got [{}, {}]",
                self.lo,
                self.hi
            )))
        }
    }
}

/// Multi-start search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Critical times are searched in `(t2, t2 + tc_search_days]`.
    pub tc_search_days: f64,
    /// Closest the refined `tc` may approach `t2`.
    pub tc_min_gap_days: f64,
    pub tc_points: usize,
    pub alpha_range: Interval,
    pub alpha_points: usize,
    pub omega_range: Interval,
    pub omega_points: usize,
    /// Grid points refined locally.
    pub n_starts: usize,
    pub max_iter: usize,
    /// Relative parameter step declaring convergence.
    pub xtol: f64,
    pub min_obs: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            tc_search_days: 365.0,
            tc_min_gap_days: 0.5,
            tc_points: 24,
            alpha_range: Interval::new(0.05, 0.95),
            alpha_points: 7,
            omega_range: Interval::new(2.0, 25.0),
            omega_points: 12,
            n_starts: 10,
            max_iter: 200,
            xtol: 1e-6,
            min_obs: 30,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        self.alpha_range.validate("search.alpha_range")?;
        self.omega_range.validate("search.omega_range")?;
        if !(self.tc_search_days > self.tc_min_gap_days) || !(self.tc_min_gap_days > 0.0) {
            return bad("search: need 0 < tc_min_gap_days < tc_search_days");
        }
        if self.tc_points == 0 || self.alpha_points == 0 || self.omega_points == 0 {
            return bad("search: grid point counts must be positive");
        }
        if self.n_starts == 0 || self.max_iter == 0 {
            return bad("search: n_starts and max_iter must be positive");
        }
        if !(self.xtol > 0.0) {
            return bad("search: xtol must be positive");
        }
        if self.min_obs < 5 {
            return bad("search: min_obs must be at least 5");
        }
        Ok(())
    }

    fn grid(range: Interval, points: usize) -> Vec<f64> {
        if points == 1 {
            return alloc::vec![0.5 * (range.lo + range.hi)];
        }
        (0..points)
            .map(|i| range.lo + (range.hi - range.lo) * i as f64 / (points - 1) as f64)
            .collect()
    }
}

/// Direction of the bubble being looked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BubbleSign {
    /// Accelerating rise, `B < 0`.
    #[default]
    Positive,
    /// Accelerating decline, `B > 0`.
    Negative,
}

/// Parameter ranges a converged fit must satisfy to count as a bubble
/// signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub alpha_range: Interval,
    pub omega_range: Interval,
    pub require_negative_b: bool,
    pub tc_horizon_days: f64,
    pub max_relative_oscillation: Option<f64>,
    pub bubble_sign: BubbleSign,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            alpha_range: Interval::new(0.1, 0.9),
            omega_range: Interval::new(2.0, 25.0),
            require_negative_b: true,
            tc_horizon_days: 365.0,
            max_relative_oscillation: None,
            bubble_sign: BubbleSign::Positive,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        self.alpha_range.validate("filter.alpha_range")?;
        self.omega_range.validate("filter.omega_range")?;
        if !(self.tc_horizon_days > 0.0) {
            return Err(Error::InvalidConfig("filter.tc_horizon_days must be positive".into()));
        }
        if let Some(bound) = self.max_relative_oscillation {
            if !(bound > 0.0) {
                return Err(Error::InvalidConfig(
                    "filter.max_relative_oscillation must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One fitted window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpplFit {
    #[serde(flatten)]
    pub params: LpplParams,
    /// First and last observation dates actually fitted.
    pub t1: NaiveDate,
    pub t2: NaiveDate,
    pub sse: f64,
    pub n_obs: usize,
    pub iterations: usize,
    pub converged: bool,
    pub qualified: bool,
    /// Why the window produced no usable fit, if it did not.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl LpplFit {
    pub fn t2_ordinal(&self) -> f64 {
        day_ordinal(self.t2)
    }

    /// Placeholder record for a window whose fit failed outright.
    pub fn failed(t1: NaiveDate, t2: NaiveDate, n_obs: usize, reason: String) -> Self {
        Self {
            params: LpplParams {
                a: 0.0,
                b: 0.0,
                c: 0.0,
                alpha: 0.0,
                omega: 0.0,
                phi: 0.0,
                tc: day_ordinal(t2),
            },
            t1,
            t2,
            sse: 0.0,
            n_obs,
            iterations: 0,
            converged: false,
            qualified: false,
            failure: Some(reason),
        }
    }
}

/// Whether a fit falls inside the filter ranges. Unconverged fits never
/// qualify.
pub fn qualify(fit: &LpplFit, cfg: &FilterConfig) -> bool {
    if !fit.converged {
        return false;
    }
    let p = &fit.params;
    let sign_ok = !cfg.require_negative_b
        || match cfg.bubble_sign {
            BubbleSign::Positive => p.b < 0.0,
            BubbleSign::Negative => p.b > 0.0,
        };
    let lead = p.tc - fit.t2_ordinal();
    let osc_ok = match cfg.max_relative_oscillation {
        None => true,
        Some(bound) => p.b != 0.0 && p.relative_oscillation() <= bound,
    };
    cfg.alpha_range.contains(p.alpha)
        && cfg.omega_range.contains(p.omega)
        && sign_ok
        && lead > 0.0
        && lead <= cfg.tc_horizon_days
        && osc_ok
}

/// Fitting problem in window-relative time: `tau = t - t2 <= 0`, so the
/// shape's `tc` is the lead beyond the last observation.
pub(crate) struct Problem<'a> {
    tau: Vec<f64>,
    y: &'a [f64],
    t2: f64,
    cols: Vec<f64>,
    design: Vec<f64>,
}

/// Raw outcome of a refinement, in relative time.
#[derive(Debug, Clone, Copy)]
struct Refined {
    shape: Shape,
    linear: LinearParams,
    sse: f64,
    iterations: usize,
    converged: bool,
}

impl<'a> Problem<'a> {
    pub(crate) fn new(times: &[f64], y: &'a [f64]) -> Self {
        let t2 = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            tau: times.iter().map(|t| t - t2).collect(),
            y,
            t2,
            cols: Vec::new(),
            design: Vec::new(),
        }
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    /// Profiles a relative shape; fills `resid` when given.
    fn profile(&mut self, shape: Shape, resid: Option<&mut Vec<f64>>) -> Option<(LinearParams, f64)> {
        if !(shape.tc > 0.0) {
            return None;
        }
        let tc = shape.tc;
        design_columns(
            self.tau.iter().map(|t| tc - t),
            shape.alpha,
            shape.omega,
            &mut self.cols,
        );
        self.design.clear();
        self.design.extend_from_slice(&self.cols);
        let ls = linalg::solve(&mut self.cols, self.y, 4)?;
        let sse = residual_sse(&self.design, &ls.coefficients, self.y, resid);
        sse.is_finite().then(|| (linear_from(&ls.coefficients), sse))
    }

    /// Coarse grid; returns up to `keep` best shapes in ascending
    /// `(sse, tc, omega)` order.
    fn grid_starts(&mut self, search: &SearchConfig, keep: usize) -> Vec<(f64, Shape)> {
        let n = self.n();
        let alphas = SearchConfig::grid(search.alpha_range, search.alpha_points);
        let omegas = SearchConfig::grid(search.omega_range, search.omega_points);
        let mut ln_dt = alloc::vec![0.0; n];
        let mut trig = alloc::vec![0.0; 2 * n * omegas.len()];
        let mut power = alloc::vec![0.0; n];
        let mut cols = alloc::vec![0.0; 4 * n];
        let mut design = alloc::vec![0.0; 4 * n];
        let mut found: Vec<(f64, Shape)> = Vec::new();

        for k in 1..=search.tc_points {
            let tc = search.tc_search_days * k as f64 / search.tc_points as f64;
            if tc < search.tc_min_gap_days {
                continue;
            }
            for (l, t) in ln_dt.iter_mut().zip(&self.tau) {
                *l = ln(tc - t);
            }
            for (w, omega) in omegas.iter().enumerate() {
                let (cs, sn) = trig[2 * n * w..2 * n * (w + 1)].split_at_mut(n);
                for i in 0..n {
                    let (s, c) = sin_cos(omega * ln_dt[i]);
                    cs[i] = c;
                    sn[i] = s;
                }
            }
            for &alpha in &alphas {
                for (p, l) in power.iter_mut().zip(&ln_dt) {
                    *p = exp(alpha * l);
                }
                for (w, &omega) in omegas.iter().enumerate() {
                    let (cs, sn) = trig[2 * n * w..2 * n * (w + 1)].split_at(n);
                    design[..n].fill(1.0);
                    for i in 0..n {
                        design[n + i] = power[i];
                        design[2 * n + i] = power[i] * cs[i];
                        design[3 * n + i] = power[i] * sn[i];
                    }
                    cols.copy_from_slice(&design);
                    if let Some(ls) = linalg::solve(&mut cols, self.y, 4) {
                        let sse = residual_sse(&design, &ls.coefficients, self.y, None);
                        if sse.is_finite() {
                            found.push((sse, Shape { tc, alpha, omega }));
                        }
                    }
                }
            }
        }
        found.sort_by(|a, b| candidate_order((a.0, a.1), (b.0, b.1)));
        found.truncate(keep);
        found
    }

    /// Levenberg-Marquardt on the profiled residuals, inside the search box.
    fn refine(&mut self, start: Shape, search: &SearchConfig) -> Option<Refined> {
        let bounds = [
            Interval::new(search.tc_min_gap_days, search.tc_search_days),
            search.alpha_range,
            search.omega_range,
        ];
        let mut theta = [
            bounds[0].clamp(start.tc),
            bounds[1].clamp(start.alpha),
            bounds[2].clamp(start.omega),
        ];
        let to_shape = |t: &[f64; 3]| Shape {
            tc: t[0],
            alpha: t[1],
            omega: t[2],
        };
        let mut r0 = Vec::new();
        let (mut linear, mut sse) = self.profile(to_shape(&theta), Some(&mut r0))?;
        let n = self.n();
        let mut lambda = 1e-3;
        let mut jac = alloc::vec![0.0; 3 * n];
        let mut rp = Vec::new();
        let mut trial_resid = Vec::new();

        for iter in 0..search.max_iter {
            if sse == 0.0 {
                return Some(Refined {
                    shape: to_shape(&theta),
                    linear,
                    sse,
                    iterations: iter,
                    converged: true,
                });
            }
            // Forward-difference Jacobian of the residual vector.
            for p in 0..3 {
                let scale = theta[p].abs().max(1.0);
                let mut h = 1e-7 * scale;
                if theta[p] + h > bounds[p].hi {
                    h = -h;
                }
                let mut probe = theta;
                probe[p] += h;
                match self.profile(to_shape(&probe), Some(&mut rp)) {
                    Some(_) => {
                        for i in 0..n {
                            jac[p * n + i] = (rp[i] - r0[i]) / h;
                        }
                    }
                    None => {
                        return Some(Refined {
                            shape: to_shape(&theta),
                            linear,
                            sse,
                            iterations: iter,
                            converged: false,
                        })
                    }
                }
            }
            let mut jtj = [0.0f64; 9];
            let mut jtr = [0.0f64; 3];
            for a in 0..3 {
                let ja = &jac[a * n..(a + 1) * n];
                jtr[a] = ja.iter().zip(&r0).map(|(x, r)| x * r).sum();
                for b in a..3 {
                    let v: f64 = ja.iter().zip(&jac[b * n..(b + 1) * n]).map(|(x, y)| x * y).sum();
                    jtj[a * 3 + b] = v;
                    jtj[b * 3 + a] = v;
                }
            }

            loop {
                let mut m = jtj;
                for d in 0..3 {
                    m[d * 4] += lambda * jtj[d * 4].max(1e-12);
                }
                let mut delta = [-jtr[0], -jtr[1], -jtr[2]];
                // Residuals are y - model, so the Gauss-Newton step for
                // J = d(resid)/d(theta) is -(J'J)^-1 J'r.
                if linalg::solve_square(&mut m, &mut delta, 3).is_none() {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        break;
                    }
                    continue;
                }
                let mut trial = theta;
                let mut step = 0.0f64;
                for p in 0..3 {
                    trial[p] = bounds[p].clamp(theta[p] + delta[p]);
                    step = step.max((trial[p] - theta[p]).abs() / theta[p].abs().max(1.0));
                }
                let outcome = self.profile(to_shape(&trial), Some(&mut trial_resid));
                let improved = matches!(outcome, Some((_, s)) if s <= sse);
                if improved {
                    let (lin, s) = outcome.unwrap();
                    theta = trial;
                    linear = lin;
                    sse = s;
                    core::mem::swap(&mut r0, &mut trial_resid);
                    lambda = (lambda * 0.1).max(1e-12);
                }
                if step < search.xtol {
                    return Some(Refined {
                        shape: to_shape(&theta),
                        linear,
                        sse,
                        iterations: iter + 1,
                        converged: true,
                    });
                }
                if improved {
                    break;
                }
                lambda *= 10.0;
                if lambda > 1e16 {
                    break;
                }
            }
            if lambda > 1e16 {
                break;
            }
        }
        Some(Refined {
            shape: to_shape(&theta),
            linear,
            sse,
            iterations: search.max_iter,
            converged: false,
        })
    }

    fn to_fit(&self, r: Refined, t1: NaiveDate, t2: NaiveDate) -> LpplFit {
        let shape = Shape {
            tc: self.t2 + r.shape.tc,
            ..r.shape
        };
        LpplFit {
            params: LpplParams::from_linear(shape, r.linear),
            t1,
            t2,
            sse: r.sse,
            n_obs: self.n(),
            iterations: r.iterations,
            converged: r.converged,
            qualified: false,
            failure: None,
        }
    }
}

/// `(sse, tc, omega)` ascending: the lowest residual wins, then the
/// earliest critical time, then the lowest frequency.
fn candidate_order(a: (f64, Shape), b: (f64, Shape)) -> core::cmp::Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.tc.total_cmp(&b.1.tc))
        .then(a.1.omega.total_cmp(&b.1.omega))
}

/// Best refinement over all starts; converged results are preferred.
fn pick_best(candidates: Vec<Refined>) -> Option<Refined> {
    let better = |a: &Refined, b: &Refined| {
        (a.converged && !b.converged)
            || (a.converged == b.converged && candidate_order((a.sse, a.shape), (b.sse, b.shape)).is_lt())
    };
    let mut best: Option<Refined> = None;
    for c in candidates {
        if best.as_ref().is_none_or(|b| better(&c, b)) {
            best = Some(c);
        }
    }
    best
}

/// Multi-start fit of a window. Returns the best converged fit; when no
/// start converges the best unconverged one is returned with
/// `converged = false`.
pub(crate) fn fit_window(
    times: &[f64],
    log_prices: &[f64],
    t1: NaiveDate,
    t2: NaiveDate,
    search: &SearchConfig,
) -> Result<LpplFit> {
    if times.len() < search.min_obs {
        return Err(Error::TooShort {
            needed: search.min_obs,
            have: times.len(),
        });
    }
    let mut problem = Problem::new(times, log_prices);
    let starts = problem.grid_starts(search, search.n_starts);
    let refined: Vec<Refined> = starts
        .into_iter()
        .filter_map(|(_, s)| problem.refine(s, search))
        .collect();
    let best = pick_best(refined).ok_or(Error::NoAdmissibleStart)?;
    Ok(problem.to_fit(best, t1, t2))
}

/// Local refinement only, started from `start` (absolute `tc`). Used for
/// bootstrap refits.
pub(crate) fn refit_from(
    times: &[f64],
    log_prices: &[f64],
    t1: NaiveDate,
    t2: NaiveDate,
    start: Shape,
    search: &SearchConfig,
) -> Result<LpplFit> {
    let mut problem = Problem::new(times, log_prices);
    let rel = Shape {
        tc: start.tc - problem.t2,
        ..start
    };
    let r = problem.refine(rel, search).ok_or(Error::NoAdmissibleStart)?;
    Ok(problem.to_fit(r, t1, t2))
}

/// Fits a price sub-window: multi-start search over `(tc, alpha, omega)`
/// with the linear parameters profiled.
pub fn fit(series: &PriceSeries, search: &SearchConfig) -> Result<LpplFit> {
    search.validate()?;
    let times = series.times();
    let y = series.log_prices();
    let fit = fit_window(&times, &y, series.first_date(), series.last_date(), search)?;
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::NotConverged { sse: fit.sse })
    }
}

/// Like [`fit`] but keeps unconverged results instead of failing.
pub fn fit_lenient(series: &PriceSeries, search: &SearchConfig) -> Result<LpplFit> {
    search.validate()?;
    let times = series.times();
    let y = series.log_prices();
    fit_window(&times, &y, series.first_date(), series.last_date(), search)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use chrono::Days;

    fn params() -> LpplParams {
        LpplParams {
            a: 7.0,
            b: -0.5,
            c: 0.1,
            alpha: 0.5,
            omega: 8.0,
            phi: 0.0,
            tc: 100.0,
        }
    }

    #[test]
    fn constant_model() {
        let p = LpplParams {
            b: 0.0,
            c: 0.0,
            ..params()
        };
        for t in [0.0, 50.0, 99.5, 150.0] {
            assert_eq!(evaluate(&p, t).unwrap(), 7.0);
        }
    }

    #[test]
    fn unit_distance() {
        let p = LpplParams { c: 0.0, ..params() };
        assert_eq!(evaluate(&p, 99.0).unwrap(), 6.5);
        assert_eq!(evaluate(&p, 101.0).unwrap(), 6.5);
    }

    #[test]
    fn singular_at_tc() {
        assert_eq!(evaluate(&params(), 100.0), Err(Error::Singularity { tc: 100.0 }));
    }

    #[test]
    fn phase_wraps() {
        let p = params();
        let q = LpplParams {
            phi: p.phi + core::f64::consts::TAU,
            ..p
        };
        let a = evaluate(&p, 37.0).unwrap();
        let b = evaluate(&q.canonical(), 37.0).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!(q.canonical().phi < core::f64::consts::TAU);
    }

    #[test]
    fn linear_form_round_trip() {
        let p = LpplParams { phi: 2.0, ..params() };
        let back = LpplParams::from_linear(p.shape(), p.linear());
        assert!((back.c - p.c).abs() < 1e-15);
        assert!((back.phi - p.phi).abs() < 1e-12);
    }

    #[test]
    fn profile_rejects_tc_inside_window() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0; 6];
        let shape = Shape {
            tc: 2.5,
            alpha: 0.5,
            omega: 6.0,
        };
        assert!(matches!(
            profile_linear(shape, &t, &y),
            Err(Error::CriticalTimeInsideWindow { .. })
        ));
    }

    #[test]
    fn profile_rejects_collinear_design() {
        let t: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let y = vec![1.0; 40];
        let shape = Shape {
            tc: 100.0,
            alpha: 0.0,
            omega: 6.0,
        };
        assert!(matches!(
            profile_linear(shape, &t, &y),
            Err(Error::DegenerateShape { .. })
        ));
    }

    #[test]
    fn profile_constant_data() {
        let t: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let y = vec![4.25; 50];
        let prof = profile_linear(
            Shape {
                tc: 80.0,
                alpha: 0.4,
                omega: 7.0,
            },
            &t,
            &y,
        )
        .unwrap();
        assert!((prof.linear.a - 4.25).abs() < 1e-10);
        assert!(prof.linear.b.abs() < 1e-10);
        assert!(prof.linear.c1.abs() < 1e-10 && prof.linear.c2.abs() < 1e-10);
        assert!(prof.sse < 1e-20);
    }

    #[test]
    fn qualify_rules() {
        let t2 = NaiveDate::from_ymd_opt(2009, 10, 29).unwrap();
        let base = LpplFit {
            params: LpplParams {
                a: 10.0,
                b: -1.0,
                c: 0.1,
                alpha: 0.5,
                omega: 10.0,
                phi: 0.0,
                tc: day_ordinal(t2) + 30.0,
            },
            t1: t2 - Days::new(200),
            t2,
            sse: 0.1,
            n_obs: 150,
            iterations: 5,
            converged: true,
            qualified: false,
            failure: None,
        };
        let cfg = FilterConfig::default();
        assert!(qualify(&base, &cfg));

        let mut at_t2 = base.clone();
        at_t2.params.tc = day_ordinal(t2);
        assert!(!qualify(&at_t2, &cfg));

        let mut edge = base.clone();
        edge.params.alpha = 0.1;
        assert!(qualify(&edge, &cfg));

        let mut unconverged = base.clone();
        unconverged.converged = false;
        assert!(!qualify(&unconverged, &cfg));

        let mut positive_b = base.clone();
        positive_b.params.b = 1.0;
        assert!(!qualify(&positive_b, &cfg));
        let negative = FilterConfig {
            bubble_sign: BubbleSign::Negative,
            ..cfg.clone()
        };
        assert!(qualify(&positive_b, &negative));

        let mut zero_b = base.clone();
        zero_b.params.b = 0.0;
        let bounded = FilterConfig {
            max_relative_oscillation: Some(0.5),
            require_negative_b: false,
            ..cfg.clone()
        };
        assert!(!qualify(&zero_b, &bounded));
        assert!(qualify(&base, &bounded));

        let mut far = base;
        far.params.tc = day_ordinal(t2) + 366.0;
        assert!(!qualify(&far, &cfg));
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        assert!(FilterConfig::default().validate().is_ok());
        let bad = FilterConfig {
            alpha_range: Interval::new(0.9, 0.1),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = FilterConfig {
            tc_horizon_days: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
