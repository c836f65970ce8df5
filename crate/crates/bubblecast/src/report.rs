//! Forecast and evaluation documents. The JSON form is the contract; the
//! Markdown rendering follows the same section order.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use bubblecast_core::diagnostics::{Drawdown, MetricKind, MetricPoint, MetricSeries};
use bubblecast_core::forecast::{Ensemble, Forecast, ForecastQuantiles};
use bubblecast_core::scanner::ScanResult;
use bubblecast_core::timeseries::PriceSeries;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::ingest;
use crate::sealing;

pub const FORECAST_FORMAT: &str = "bubblecast-forecast/1";
pub const EVALUATION_FORMAT: &str = "bubblecast-evaluation/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_parents: usize,
    pub n_refits: usize,
    pub n_unconverged_refits: usize,
    pub n_unqualified_refits: usize,
    pub n_outside_horizon: usize,
}

impl From<&Ensemble> for EnsembleSummary {
    fn from(e: &Ensemble) -> Self {
        Self {
            n_parents: e.n_parents,
            n_refits: e.n_refits,
            n_unconverged_refits: e.n_unconverged,
            n_unqualified_refits: e.n_unqualified,
            n_outside_horizon: e.n_outside_horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastDocument {
    pub format: String,
    pub asset_id: String,
    pub data_source: String,
    /// SHA-256 of the canonical `date,close` snapshot of the analysed data.
    pub data_sha256: String,
    pub first_observation: NaiveDate,
    pub last_observation: NaiveDate,
    pub observed_peak: NaiveDate,
    pub intervals_found: usize,
    pub intervals_tested: usize,
    pub quantiles: ForecastQuantiles,
    pub ensemble: EnsembleSummary,
    pub config: RunConfig,
}

impl ForecastDocument {
    pub fn new(cfg: &RunConfig, series: &PriceSeries, scan: &ScanResult, forecast: &Forecast) -> Self {
        let snapshot = ingest::to_csv_string(series);
        Self {
            format: FORECAST_FORMAT.into(),
            asset_id: cfg.asset_id.clone(),
            data_source: series.source().into(),
            data_sha256: sealing::hash_bytes(snapshot.as_bytes()).sha256,
            first_observation: series.first_date(),
            last_observation: scan.last_obs_date,
            observed_peak: scan.peak_date,
            intervals_found: scan.n_found,
            intervals_tested: scan.n_tested,
            quantiles: forecast.quantiles.clone(),
            ensemble: EnsembleSummary::from(&forecast.ensemble),
            config: cfg.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let q = &self.quantiles;
        let _ = writeln!(md, "# Bubble forecast: {}\n", self.asset_id);
        let _ = writeln!(md, "## 1 Data source\n");
        let _ = writeln!(
            md,
            "{} ({} through {}; snapshot sha256 `{}`)\n",
            if self.data_source.is_empty() {
                "unspecified"
            } else {
                &self.data_source
            },
            self.first_observation,
            self.last_observation,
            self.data_sha256
        );
        let _ = writeln!(md, "## 2 Input Parameters\n");
        let _ = writeln!(md, "| | |\n|---|---|");
        let _ = writeln!(
            md,
            "| Date of last observation used in analysis | {} |",
            self.last_observation
        );
        let _ = writeln!(md, "| Date of observed peak of data | {} |", self.observed_peak);
        let _ = writeln!(md, "| Number LPPL intervals found | {} |", self.intervals_found);
        let _ = writeln!(md, "| Number total intervals tested | {} |\n", self.intervals_tested);
        let _ = writeln!(md, "## 3 Forecast quantiles for t_c\n");
        let _ = writeln!(md, "```\n{}```\n", q.table());
        let _ = writeln!(
            md,
            "Ensemble: {} critical times ({} parent fits, {} bootstrap refits) within {} days of the last observation.\n",
            q.n_ensemble, self.ensemble.n_parents, self.ensemble.n_refits, self.config.bootstrap.horizon_days
        );
        let _ = writeln!(md, "## Configuration\n");
        let _ = writeln!(md, "```toml\n{}```", self.config.to_toml());
        md
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowVerdict {
    pub date: NaiveDate,
    pub in_outer: bool,
    pub in_inner: bool,
}

impl WindowVerdict {
    pub fn new(date: NaiveDate, q: &ForecastQuantiles) -> Self {
        Self {
            date,
            in_outer: q.outer_contains(date),
            in_inner: q.inner_contains(date),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub kind: MetricKind,
    pub window: u32,
    pub file: String,
    pub peak: Option<MetricPoint>,
    pub peak_verdict: Option<WindowVerdict>,
    /// Last value at or before the last analysed observation.
    pub at_last_observation: Option<f64>,
    pub at_end: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationDocument {
    pub format: String,
    pub asset_id: String,
    pub last_observation: NaiveDate,
    pub evaluation_end: NaiveDate,
    pub quantiles: ForecastQuantiles,
    pub drawdown: Drawdown,
    pub drawdown_onset: WindowVerdict,
    pub trend_before: f64,
    pub trend_after: f64,
    pub metrics: Vec<MetricSummary>,
    pub config: RunConfig,
}

impl EvaluationDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let d = &self.drawdown;
        let _ = writeln!(md, "# Forecast evaluation: {}\n", self.asset_id);
        let _ = writeln!(
            md,
            "Last analysed observation {}, evaluated through {}.\n",
            self.last_observation, self.evaluation_end
        );
        let _ = writeln!(md, "```\n{}```\n", self.quantiles.table());
        let _ = writeln!(md, "## Drawdown after the last observation\n");
        if d.degenerate {
            let _ = writeln!(md, "No decline in the evaluation period.\n");
        } else {
            let _ = writeln!(
                md,
                "{:.1}% in {} days, from {} ({:.2}) to {} ({:.2}). Onset inside 5/95: {}; inside 20/80: {}.\n",
                100.0 * d.depth,
                d.duration_days,
                d.peak_date,
                d.peak_price,
                d.trough_date,
                d.trough_price,
                yes_no(self.drawdown_onset.in_outer),
                yes_no(self.drawdown_onset.in_inner)
            );
        }
        let _ = writeln!(md, "## Trend\n");
        let _ = writeln!(
            md,
            "Annualized log-linear trend: {:.1}% before, {:.1}% after the last observation.\n",
            100.0 * self.trend_before,
            100.0 * self.trend_after
        );
        let _ = writeln!(md, "## Metrics\n");
        let _ = writeln!(
            md,
            "| metric | window | peak date | peak value | in 5/95 | in 20/80 | data |"
        );
        let _ = writeln!(md, "|---|---|---|---|---|---|---|");
        for m in &self.metrics {
            let (date, value) = m.peak.map_or(("-".into(), "-".into()), |p| {
                (p.date.to_string(), format!("{:.4}", p.value))
            });
            let (o, i) = m
                .peak_verdict
                .as_ref()
                .map_or(("-", "-"), |v| (yes_no(v.in_outer), yes_no(v.in_inner)));
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} |",
                metric_label(m.kind),
                m.window,
                date,
                value,
                o,
                i,
                m.file
            );
        }
        let _ = writeln!(md, "\n## Configuration\n");
        let _ = writeln!(md, "```toml\n{}```", self.config.to_toml());
        md
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Human-facing metric names. The bubble index here is a proxy and is
/// always labelled as such.
pub fn metric_label(kind: MetricKind) -> &'static str {
    match kind {
        MetricKind::Updays => "up-day fraction",
        MetricKind::SgDerivative => "Savitzky-Golay growth rate",
        MetricKind::BubbleIndex => "proxy index (qualified-fit fraction)",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSidecar {
    pub kind: MetricKind,
    pub label: String,
    pub window: u32,
    pub units: String,
    pub annualization: Option<f64>,
    pub conventions: Vec<String>,
    pub n_points: usize,
}

fn sidecar(m: &MetricSeries, cfg: &RunConfig) -> MetricSidecar {
    let (units, conventions) = match m.kind {
        MetricKind::Updays => (
            "fraction of up days among nonzero one-day returns".to_string(),
            vec![
                format!("trailing calendar window (d - {}, d]", m.window),
                "zero returns excluded; dates with no nonzero return omitted".into(),
                "only dates with a full trailing window".into(),
            ],
        ),
        MetricKind::SgDerivative => (
            format!(
                "{} per observation step",
                match cfg.diagnostics.sg_input {
                    bubblecast_core::diagnostics::SgInput::LogPrice => "ln-price",
                    bubblecast_core::diagnostics::SgInput::Price => "price",
                }
            ),
            vec![
                format!(
                    "centred stencil of {} observations, polynomial order {}",
                    m.window, cfg.diagnostics.sg_order
                ),
                "observations treated as unit spaced".into(),
                "multiply by annualization for per-year units".into(),
            ],
        ),
        MetricKind::BubbleIndex => (
            "fraction of tested windows with a qualified fit".to_string(),
            vec!["proxy index: not a published bubble-index definition".into()],
        ),
    };
    MetricSidecar {
        kind: m.kind,
        label: metric_label(m.kind).into(),
        window: m.window,
        units,
        annualization: m.annualization,
        conventions,
        n_points: m.entries.len(),
    }
}

/// Writes `<stem>.csv` (`date,value`) and `<stem>.json` into `dir`,
/// returning the CSV path.
pub fn write_metric(dir: &Path, stem: &str, m: &MetricSeries, cfg: &RunConfig) -> io::Result<PathBuf> {
    let mut csv = String::from("date,value\n");
    for e in &m.entries {
        let _ = writeln!(csv, "{},{}", e.date, e.value);
    }
    let path = dir.join(format!("{stem}.csv"));
    fs::write(&path, csv)?;
    let mut json = serde_json::to_string_pretty(&sidecar(m, cfg)).expect("sidecar serializes");
    json.push('\n');
    fs::write(dir.join(format!("{stem}.json")), json)?;
    Ok(path)
}

/// One fit per row.
pub fn scan_csv(scan: &ScanResult) -> String {
    let mut out = String::from("t1,t2,n_obs,a,b,c,alpha,omega,phi,tc,tc_date,sse,iterations,converged,qualified\n");
    for f in &scan.fits {
        let p = &f.params;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.t1,
            f.t2,
            f.n_obs,
            p.a,
            p.b,
            p.c,
            p.alpha,
            p.omega,
            p.phi,
            p.tc,
            p.tc_date(),
            f.sse,
            f.iterations,
            f.converged,
            f.qualified
        );
    }
    out
}
