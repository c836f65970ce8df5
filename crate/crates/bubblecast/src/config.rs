//! Run configuration: TOML file, `key=value` overrides, validation.

use std::fs;
use std::path::{Path, PathBuf};

use bubblecast_core::diagnostics::SgInput;
use bubblecast_core::forecast::BootstrapConfig;
use bubblecast_core::lppl::{FilterConfig, SearchConfig};
use bubblecast_core::scanner::WindowGrid;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::ingest::IngestConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("override {0:?}: expected key=value")]
    BadOverride(String),
    #[error("override {key:?}: {reason}")]
    OverridePath { key: String, reason: String },
    #[error(transparent)]
    Invalid(#[from] bubblecast_core::Error),
    #[error("config: {0}")]
    Missing(&'static str),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    /// Free-text description of where the data came from, echoed into reports.
    pub source: String,
    pub format: IngestConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Trailing calendar-day windows for the up-day fraction.
    pub updays_windows: Vec<u32>,
    /// Savitzky-Golay stencils in observations (even counts are bumped).
    pub sg_windows: Vec<usize>,
    pub sg_order: usize,
    pub sg_input: SgInput,
    /// Last date to evaluate; defaults to the end of the data.
    pub evaluation_end: Option<NaiveDate>,
    /// Spacing of proxy-index scans in days; 0 disables them.
    pub bubble_index_step_days: u32,
    /// How far before the last analysed observation the proxy index starts.
    pub bubble_index_lookback_days: u32,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            updays_windows: vec![30, 60, 90],
            sg_windows: vec![120, 180],
            sg_order: 3,
            sg_input: SgInput::LogPrice,
            evaluation_end: None,
            bubble_index_step_days: 30,
            bubble_index_lookback_days: 180,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub asset_id: String,
    /// Mandatory for `forecast`; copied into `bootstrap.rng_seed`.
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub grid: WindowGrid,
    pub search: SearchConfig,
    pub filter: FilterConfig,
    pub bootstrap: BootstrapConfig,
    pub diagnostics: DiagnosticsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            asset_id: "asset".into(),
            seed: None,
            output_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            grid: WindowGrid::default(),
            search: SearchConfig::default(),
            filter: FilterConfig::default(),
            bootstrap: BootstrapConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
        }
    }
}

impl RunConfig {
    /// Builds the effective configuration from an optional file plus
    /// `key=value` overrides applied in order. Values parse as TOML
    /// (`grid.dt1=5`, `filter.bubble_sign="negative"`); anything that does
    /// not parse is taken as a string.
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let table = match file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
                text.parse::<toml::Table>()?
            }
            None => toml::Table::new(),
        };
        Self::from_table(table, overrides)
    }

    /// `self` as the base layer, then `overrides`.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        let table = toml::Table::try_from(self).expect("config serializes");
        Self::from_table(table, overrides)
    }

    fn from_table(mut table: toml::Table, overrides: &[String]) -> Result<Self, ConfigError> {
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table).try_into()?;
        if let Some(seed) = cfg.seed {
            cfg.bootstrap.rng_seed = seed;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid.validate()?;
        self.search.validate()?;
        self.filter.validate()?;
        self.bootstrap.validate()?;
        Ok(())
    }

    pub fn data_path(&self) -> Result<&Path, ConfigError> {
        self.data
            .path
            .as_deref()
            .ok_or(ConfigError::Missing("data.path is required (flag --data)"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<(), ConfigError> {
    let (key, raw) = ov.split_once('=').ok_or_else(|| ConfigError::BadOverride(ov.into()))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.into()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::BadOverride(ov.into()));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let slot = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = slot.as_table_mut().ok_or_else(|| ConfigError::OverridePath {
            key: key.into(),
            reason: format!("{part} is not a table"),
        })?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
