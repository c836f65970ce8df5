//! ingest -> scan -> forecast -> evaluate, with outputs written to disk.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use bubblecast_core::diagnostics::{
    bubble_index_series, max_drawdown, sg_derivative, trend_slope, updays_fraction, MetricSeries,
};
use bubblecast_core::forecast::{self, Forecast};
use bubblecast_core::scanner::{self, ScanResult};
use bubblecast_core::timeseries::{returns, PriceSeries};
use chrono::{Days, NaiveDate};

use crate::config::{ConfigError, RunConfig};
use crate::ingest::{self, IngestError};
use crate::report::{EvaluationDocument, ForecastDocument, MetricSummary, WindowVerdict, EVALUATION_FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("ingestion failed: {0}")]
    Ingest(#[from] IngestError),
    #[error("no bubble diagnosed: {tested} windows tested, none qualified")]
    NoQualifiedFits { tested: usize },
    #[error("empty ensemble: no critical time within {horizon} days of the last observation")]
    EmptyEnsemble { horizon: f64 },
    #[error("{0}")]
    Evaluation(String),
    #[error(transparent)]
    Core(bubblecast_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Document { path: PathBuf, source: serde_json::Error },
}

impl From<bubblecast_core::Error> for PipelineError {
    fn from(e: bubblecast_core::Error) -> Self {
        PipelineError::Core(e)
    }
}

pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const INGEST: u8 = 3;
    pub const NO_QUALIFIED_FITS: u8 = 4;
    pub const EMPTY_ENSEMBLE: u8 = 5;
    pub const VERIFY_MISMATCH: u8 = 6;
}

impl PipelineError {
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Ingest(_) => exit::INGEST,
            PipelineError::NoQualifiedFits { .. } => exit::NO_QUALIFIED_FITS,
            PipelineError::EmptyEnsemble { .. } => exit::EMPTY_ENSEMBLE,
            _ => exit::FAILURE,
        }
    }
}

fn write(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn load_series(cfg: &RunConfig) -> Result<PriceSeries, PipelineError> {
    let path = cfg.data_path()?;
    Ok(ingest::load_csv(
        path,
        &cfg.asset_id,
        &cfg.data.source,
        &cfg.data.format,
    )?)
}

pub fn run_scan(cfg: &RunConfig, series: &PriceSeries) -> Result<ScanResult, PipelineError> {
    cfg.validate()?;
    Ok(scanner::scan(series, &cfg.grid, &cfg.search, &cfg.filter)?)
}

pub struct ForecastRun {
    pub series: PriceSeries,
    pub scan: ScanResult,
    pub forecast: Forecast,
    pub document: ForecastDocument,
}

pub fn run_forecast(cfg: &RunConfig, series: PriceSeries) -> Result<ForecastRun, PipelineError> {
    if cfg.seed.is_none() {
        return Err(ConfigError::Missing("a seed is required for forecast runs").into());
    }
    let scan = run_scan(cfg, &series)?;
    let fc = forecast::forecast(&scan, &series, &cfg.bootstrap, &cfg.search, &cfg.filter).map_err(|e| match e {
        bubblecast_core::Error::NoQualifiedFits => PipelineError::NoQualifiedFits { tested: scan.n_tested },
        bubblecast_core::Error::EmptyEnsemble => PipelineError::EmptyEnsemble {
            horizon: cfg.bootstrap.horizon_days,
        },
        other => other.into(),
    })?;
    let document = ForecastDocument::new(cfg, &series, &scan, &fc);
    Ok(ForecastRun {
        series,
        scan,
        forecast: fc,
        document,
    })
}

pub fn write_scan(dir: &Path, scan: &ScanResult) -> Result<Vec<PathBuf>, PipelineError> {
    ensure_dir(dir)?;
    let json = dir.join("scan.json");
    let mut text = serde_json::to_string_pretty(scan).expect("scan serializes");
    text.push('\n');
    write(&json, &text)?;
    let csv = dir.join("scan.csv");
    write(&csv, &crate::report::scan_csv(scan))?;
    Ok(vec![json, csv])
}

pub fn write_forecast(dir: &Path, run: &ForecastRun) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files = write_scan(dir, &run.scan)?;
    let data = dir.join("data.csv");
    write(&data, &ingest::to_csv_string(&run.series))?;
    let json = dir.join("forecast.json");
    write(&json, &run.document.to_json())?;
    let md = dir.join("forecast.md");
    write(&md, &run.document.to_markdown())?;
    files.extend([data, json, md]);
    Ok(files)
}

pub fn read_forecast(path: &Path) -> Result<ForecastDocument, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ForecastDocument::from_json(&text).map_err(|source| PipelineError::Document {
        path: path.to_path_buf(),
        source,
    })
}

pub struct Evaluation {
    pub document: EvaluationDocument,
    /// File stem and series for each exported metric.
    pub metrics: Vec<(String, MetricSeries)>,
}

fn value_at_or_before(m: &MetricSeries, date: NaiveDate) -> Option<f64> {
    m.entries.iter().rev().find(|p| p.date <= date).map(|p| p.value)
}

/// Post-hoc metrics for a published forecast against data running past
/// its last observation.
pub fn evaluate(cfg: &RunConfig, doc: &ForecastDocument, full: &PriceSeries) -> Result<Evaluation, PipelineError> {
    cfg.validate()?;
    let t2 = doc.last_observation;
    let q = &doc.quantiles;
    let data_end = full.last_date();
    if data_end <= t2 {
        return Err(PipelineError::Evaluation(format!(
            "data ends {data_end}, not after the last analysed observation {t2}"
        )));
    }
    let end = match cfg.diagnostics.evaluation_end {
        Some(end) if end > data_end => {
            return Err(PipelineError::Evaluation(format!(
                "data ends {data_end}, before the evaluation end {end}"
            )))
        }
        Some(end) if end <= t2 => {
            return Err(PipelineError::Evaluation(format!(
                "evaluation end {end} is not after the last analysed observation {t2}"
            )))
        }
        Some(end) => end,
        None if data_end < q.q95 => {
            return Err(PipelineError::Evaluation(format!(
                "data ends {data_end}, before the forecast window closes {}; pass an explicit evaluation end",
                q.q95
            )))
        }
        None => data_end,
    };
    if end < q.q05 {
        return Err(PipelineError::Evaluation(format!(
            "forecast windows start {} after the evaluation end {end}",
            q.q05
        )));
    }

    let series = full.truncate_after(end)?;
    let drawdown = max_drawdown(&series, t2, end)?;
    let trend_before = trend_slope(&series, doc.first_observation, t2)?;
    let trend_after = trend_slope(&series, t2, end)?;
    let region_start = doc.first_observation;
    let stem = |s: String| format!("{}_{s}", cfg.asset_id);

    let mut metrics: Vec<(String, MetricSeries)> = Vec::new();
    let rets = returns(&series)?;
    for &w in &cfg.diagnostics.updays_windows {
        metrics.push((stem(format!("updays_{w}")), updays_fraction(&rets, w)?));
    }
    for &w in &cfg.diagnostics.sg_windows {
        let m = sg_derivative(&series, w, cfg.diagnostics.sg_order, cfg.diagnostics.sg_input)?;
        metrics.push((stem(format!("sg_{}", m.window)), m));
    }
    let step = cfg.diagnostics.bubble_index_step_days;
    if step > 0 {
        let first = t2
            .checked_sub_days(Days::new(cfg.diagnostics.bubble_index_lookback_days.into()))
            .unwrap_or(t2);
        let mut dates = Vec::new();
        let mut d = first;
        while d <= end {
            dates.push(d);
            d = d + Days::new(step.into());
        }
        let m = bubble_index_series(&series, &dates, &cfg.grid, &cfg.search, &cfg.filter);
        metrics.push((stem("proxy_index".into()), m));
    }

    let summaries = metrics
        .iter()
        .map(|(name, m)| {
            let peak = m.peak_between(region_start, end);
            MetricSummary {
                kind: m.kind,
                window: m.window,
                file: format!("{name}.csv"),
                peak,
                peak_verdict: peak.map(|p| WindowVerdict::new(p.date, q)),
                at_last_observation: value_at_or_before(m, t2),
                at_end: m.entries.last().map(|p| p.value),
            }
        })
        .collect();

    let document = EvaluationDocument {
        format: EVALUATION_FORMAT.into(),
        asset_id: cfg.asset_id.clone(),
        last_observation: t2,
        evaluation_end: end,
        quantiles: q.clone(),
        drawdown_onset: WindowVerdict::new(drawdown.peak_date, q),
        drawdown,
        trend_before,
        trend_after,
        metrics: summaries,
        config: cfg.clone(),
    };
    Ok(Evaluation { document, metrics })
}

pub fn write_evaluation(dir: &Path, cfg: &RunConfig, eval: &Evaluation) -> Result<Vec<PathBuf>, PipelineError> {
    ensure_dir(dir)?;
    let mut files = Vec::new();
    for (name, m) in &eval.metrics {
        let path = crate::report::write_metric(dir, name, m, cfg).map_err(|source| PipelineError::Io {
            path: dir.join(name),
            source,
        })?;
        files.push(path);
    }
    let json = dir.join("evaluation.json");
    write(&json, &eval.document.to_json())?;
    let md = dir.join("evaluation.md");
    write(&md, &eval.document.to_markdown())?;
    files.extend([json, md]);
    Ok(files)
}
