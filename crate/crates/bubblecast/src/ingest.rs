//! CSV price ingestion and the canonical `date,close` snapshot format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use bubblecast_core::timeseries::{Observation, PriceSeries};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("line {line}: unparseable date {value:?}")]
    BadDate { line: u64, value: String },
    #[error("line {line}: unparseable price {value:?}")]
    BadPrice { line: u64, value: String },
    #[error("line {line}: missing price")]
    MissingPrice { line: u64 },
    #[error("line {line}: non-positive price {price} on {date}")]
    NonPositivePrice { line: u64, date: NaiveDate, price: f64 },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("no valid rows")]
    NoRows,
    #[error(transparent)]
    Series(#[from] bubblecast_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `date,close`, ISO dates.
    #[default]
    Canonical,
    /// Yahoo historical export: `Date,Open,High,Low,Close,Adj Close,Volume`.
    Yahoo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub preset: Preset,
    /// Overrides the preset's date column.
    pub date_column: Option<String>,
    /// Overrides the preset's price column.
    pub price_column: Option<String>,
    /// chrono format string.
    pub date_format: String,
    /// Use the adjusted close column (Yahoo preset only).
    pub adjusted: bool,
    /// Drop rows with missing or non-positive prices instead of failing.
    pub skip_invalid: bool,
    /// On duplicate dates keep the last row instead of failing.
    pub last_wins: bool,
    /// Cell values treated as missing.
    pub missing_tokens: Vec<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            preset: Preset::Canonical,
            date_column: None,
            price_column: None,
            date_format: "%Y-%m-%d".into(),
            adjusted: false,
            skip_invalid: false,
            last_wins: false,
            missing_tokens: vec!["".into(), "null".into(), "NaN".into(), "nan".into()],
        }
    }
}

impl IngestConfig {
    pub fn yahoo() -> Self {
        Self {
            preset: Preset::Yahoo,
            ..Self::default()
        }
    }

    pub fn columns(&self) -> (String, String) {
        let (date, price) = match self.preset {
            Preset::Canonical => ("date", "close"),
            Preset::Yahoo if self.adjusted => ("Date", "Adj Close"),
            Preset::Yahoo => ("Date", "Close"),
        };
        (
            self.date_column.clone().unwrap_or_else(|| date.into()),
            self.price_column.clone().unwrap_or_else(|| price.into()),
        )
    }
}

pub fn load_csv(path: &Path, asset_id: &str, source: &str, cfg: &IngestConfig) -> Result<PriceSeries, IngestError> {
    let file = File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, asset_id, source, cfg)
}

pub fn read_csv<R: Read>(
    reader: R,
    asset_id: &str,
    source: &str,
    cfg: &IngestConfig,
) -> Result<PriceSeries, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let (date_col, price_col) = cfg.columns();
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.into()))
    };
    let (di, pi) = (find(&date_col)?, find(&price_col)?);

    let mut rows: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let raw_date = record.get(di).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, &cfg.date_format).map_err(|_| IngestError::BadDate {
            line,
            value: raw_date.into(),
        })?;
        let raw_price = record.get(pi).unwrap_or("");
        let price = if cfg.missing_tokens.iter().any(|t| t == raw_price) {
            None
        } else {
            Some(raw_price.parse::<f64>().map_err(|_| IngestError::BadPrice {
                line,
                value: raw_price.into(),
            })?)
        };
        let price = match price {
            Some(p) if p > 0.0 && p.is_finite() => p,
            _ if cfg.skip_invalid => continue,
            None => return Err(IngestError::MissingPrice { line }),
            Some(p) => return Err(IngestError::NonPositivePrice { line, date, price: p }),
        };
        if rows.insert(date, price).is_some() && !cfg.last_wins {
            return Err(IngestError::DuplicateDate(date));
        }
    }
    if rows.is_empty() {
        return Err(IngestError::NoRows);
    }
    let observations = rows
        .into_iter()
        .map(|(date, price)| Observation { date, price })
        .collect();
    Ok(PriceSeries::new(asset_id, source, observations)?)
}

/// Canonical snapshot: header `date,close`, ISO dates, shortest
/// round-trip decimal prices, LF line endings.
pub fn write_csv<W: Write>(series: &PriceSeries, mut out: W) -> io::Result<()> {
    out.write_all(b"date,close\n")?;
    for o in series.observations() {
        writeln!(out, "{},{}", o.date, o.price)?;
    }
    Ok(())
}

pub fn to_csv_string(series: &PriceSeries) -> String {
    let mut buf = Vec::new();
    write_csv(series, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}
