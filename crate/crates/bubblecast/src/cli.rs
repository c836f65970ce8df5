use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::ingest::{self, Preset};
use crate::pipeline::{self, exit, PipelineError};
use crate::sealing::{self, Algorithm, Ledger, LedgerEntry, SealError};

#[derive(Debug, Parser)]
#[command(
    name = "bubblecast",
    version,
    about = "Scan price series for log-periodic bubbles and forecast their end"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set grid.dt1=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Price CSV (data.path).
    #[arg(long, global = true, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Input layout (data.format.preset).
    #[arg(long, global = true, value_enum)]
    pub preset: Option<PresetArg>,
    /// Asset identifier used in reports and file names.
    #[arg(long, global = true)]
    pub asset: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum PresetArg {
    Canonical,
    Yahoo,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a price file into the canonical `date,close` snapshot.
    Ingest {
        /// Destination; defaults to `<out>/<asset>.csv`.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Fit every window of the grid and write scan.json and scan.csv.
    Scan,
    /// Scan, bootstrap and write forecast.json and forecast.md.
    Forecast {
        #[arg(long)]
        seed: u64,
    },
    /// Evaluate a forecast against data extending past its last observation.
    Diagnose {
        /// forecast.json from an earlier run; its configuration is the base
        /// unless --config is given.
        #[arg(long, value_name = "FILE")]
        forecast: PathBuf,
        /// Last date to evaluate.
        #[arg(long, value_name = "DATE")]
        until: Option<NaiveDate>,
    },
    /// Re-render forecast.md from forecast.json.
    Report {
        #[arg(long, value_name = "FILE")]
        forecast: PathBuf,
        /// Destination; stdout when absent.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Hash a document and append it to the sealing ledger.
    Seal {
        document: PathBuf,
        #[arg(long, value_name = "FILE")]
        ledger: PathBuf,
        /// Asset label recorded with the entry.
        #[arg(long = "label")]
        label: Option<String>,
        /// Publication date; defaults to today (UTC).
        #[arg(long, value_name = "DATE")]
        date: Option<NaiveDate>,
        /// Also write MD5SUMS, SHA256SUMS and SHA512SUMS into this directory.
        #[arg(long, value_name = "DIR")]
        checks: Option<PathBuf>,
    },
    /// Re-hash sealed documents; exits 6 unless every entry matches.
    Verify {
        #[arg(long, value_name = "FILE")]
        ledger: PathBuf,
        /// Directory holding the documents; defaults to the ledger's.
        #[arg(long, value_name = "DIR")]
        dir: Option<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Seal(#[from] SealError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("verification failed")]
    Mismatch,
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl From<ingest::IngestError> for CliError {
    fn from(e: ingest::IngestError) -> Self {
        CliError::Pipeline(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) => e.exit_code(),
            CliError::Mismatch => exit::VERIFY_MISMATCH,
            CliError::Seal(_) | CliError::Io { .. } => exit::FAILURE,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn apply_flags(mut cfg: RunConfig, c: &Common) -> RunConfig {
    if let Some(d) = &c.data {
        cfg.data.path = Some(d.clone());
    }
    if let Some(p) = c.preset {
        cfg.data.format.preset = match p {
            PresetArg::Canonical => Preset::Canonical,
            PresetArg::Yahoo => Preset::Yahoo,
        };
    }
    if let Some(a) = &c.asset {
        cfg.asset_id = a.clone();
    }
    if let Some(o) = &c.out {
        cfg.output_dir = o.clone();
    }
    cfg
}

fn load_config(c: &Common) -> Result<RunConfig, CliError> {
    Ok(apply_flags(RunConfig::load(c.config.as_deref(), &c.overrides)?, c))
}

fn print_paths(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    match cli.command {
        Command::Ingest { output } => {
            let cfg = load_config(c)?;
            let series = pipeline::load_series(&cfg)?;
            let dest = output.unwrap_or_else(|| cfg.output_dir.join(format!("{}.csv", cfg.asset_id)));
            if let Some(parent) = dest.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            fs::write(&dest, ingest::to_csv_string(&series)).map_err(io_err(&dest))?;
            println!(
                "{} observations, {} to {}",
                series.len(),
                series.first_date(),
                series.last_date()
            );
            print_paths(&[dest]);
        }
        Command::Scan => {
            let cfg = load_config(c)?;
            let series = pipeline::load_series(&cfg)?;
            let scan = pipeline::run_scan(&cfg, &series)?;
            println!("{} of {} windows qualified", scan.n_found, scan.n_tested);
            print_paths(&pipeline::write_scan(&cfg.output_dir, &scan)?);
        }
        Command::Forecast { seed } => {
            let mut cfg = load_config(c)?;
            cfg.seed = Some(seed);
            cfg.bootstrap.rng_seed = seed;
            let series = pipeline::load_series(&cfg)?;
            let run = pipeline::run_forecast(&cfg, series)?;
            print!("{}", run.forecast.quantiles.table());
            print_paths(&pipeline::write_forecast(&cfg.output_dir, &run)?);
        }
        Command::Diagnose { forecast, until } => {
            let doc = pipeline::read_forecast(&forecast)?;
            let base = match &c.config {
                Some(_) => RunConfig::load(c.config.as_deref(), &c.overrides)?,
                None => doc.config.with_overrides(&c.overrides)?,
            };
            let mut cfg = apply_flags(base, c);
            if c.data.is_none() {
                return Err(
                    crate::config::ConfigError::Missing("diagnose needs the full data set (flag --data)").into(),
                );
            }
            if until.is_some() {
                cfg.diagnostics.evaluation_end = until;
            }
            let full = pipeline::load_series(&cfg)?;
            let eval = pipeline::evaluate(&cfg, &doc, &full)?;
            let d = &eval.document.drawdown;
            println!(
                "drawdown {:.1}% over {} days from {}",
                100.0 * d.depth,
                d.duration_days,
                d.peak_date
            );
            print_paths(&pipeline::write_evaluation(&cfg.output_dir, &cfg, &eval)?);
        }
        Command::Report { forecast, output } => {
            let md = pipeline::read_forecast(&forecast)?.to_markdown();
            match output {
                Some(p) => {
                    fs::write(&p, md).map_err(io_err(&p))?;
                    print_paths(&[p]);
                }
                None => print!("{md}"),
            }
        }
        Command::Seal {
            document,
            ledger,
            label,
            date,
            checks,
        } => {
            let name = document
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| SealError::InvalidEntry(format!("{} has no file name", document.display())))?
                .to_string();
            let digests = sealing::hash_document(&document)?;
            let date = date.unwrap_or_else(|| chrono::Utc::now().date_naive());
            let entry = LedgerEntry::new(date, name, digests, label)?;
            println!("{entry}");
            let next = sealing::append_to_file(&ledger, entry)?;
            if let Some(dir) = checks {
                write_checks(&next, &dir)?;
            }
        }
        Command::Verify { ledger, dir, json } => {
            let book = Ledger::load(&ledger)?;
            let dir = dir.unwrap_or_else(|| {
                ledger
                    .parent()
                    .filter(|p| !p.as_os_str().is_empty())
                    .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
            });
            let report = sealing::verify(&book, &dir);
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{report}");
            }
            if !report.passed() {
                return Err(CliError::Mismatch);
            }
        }
    }
    Ok(())
}

pub fn write_checks(ledger: &Ledger, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    for alg in Algorithm::ALL {
        let path = dir.join(alg.file_name());
        fs::write(&path, ledger.export_checks(alg)).map_err(io_err(&path))?;
        files.push(path);
    }
    print_paths(&files);
    Ok(files)
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
