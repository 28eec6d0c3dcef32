//! Command-line flags, the optional TOML config file, and their merge into
//! an effective [`RunConfig`]. Flags win over the file, the file over defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::format::{read_text, OutputFormat};

/// Relative input paths resolve against this directory when it is set; it
/// is also the default output directory.
pub const DATA_DIR_ENV: &str = "ECOMPLEXITY_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "ecomplexity", version, about = "Economic complexity metrics and the knowhow model")]
pub struct Cli {
    /// TOML file with default values for any of the flags below.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for output files [default: $ECOMPLEXITY_DATA_DIR or .]
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    /// Format of tabular outputs [default: csv]
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a `country,product,value` CSV into a canonical matrix file.
    Ingest {
        trade_csv: PathBuf,
        /// Output file [default: <out-dir>/matrix.txt]
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compute TDI/TSI, ECI/PCI and Fitness/Q on a canonical matrix file.
    Metrics {
        matrix: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Draw a synthetic world from the knowhow model.
    Simulate(ModelArgs),
    /// Regress income on diversification and compare the metrics.
    Validate {
        matrix: PathBuf,
        /// CSV with header `country,gdp,natural_rents`.
        income_csv: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
    },
    /// Estimate τ from a column of product sophistication scores.
    FitTau {
        /// Products table written by `metrics`.
        metrics_csv: PathBuf,
        /// Column holding the scores.
        #[arg(long, default_value = "tsi")]
        column: String,
        /// Largest tech count K [default: 221]
        #[arg(long = "K", value_name = "K")]
        max_techs: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    /// Any positive export counts.
    None,
    /// Revealed comparative advantage at or above the threshold.
    Rca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MetricArgs {
    /// How export values become a binary matrix [default: none]
    #[arg(long, value_enum)]
    pub filter: Option<Filter>,
    /// RCA cut-off for `--filter rca` [default: 1.0]
    #[arg(long)]
    pub rca_threshold: Option<f64>,
    /// Fitness stopping tolerance [default: 1e-10]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Fitness iteration cap [default: 10000]
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Coherence probability per tech [default: 0.07]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Largest tech count K [default: 221]
    #[arg(long = "K", value_name = "K")]
    pub max_techs: Option<usize>,
    /// RNG seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enumeration or Monte Carlo [default: exact if K <= 20, else mc]
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Monte Carlo sample count [default: 10000]
    #[arg(long)]
    pub samples: Option<usize>,
}

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub filter: Option<Filter>,
    pub rca_threshold: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub tau: Option<f64>,
    #[serde(rename = "K", alias = "max-techs")]
    pub max_techs: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub samples: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.span().map_or(0, |s| 1 + text[..s.start].matches('\n').count() as u64),
            message: e.message().to_string(),
        })
    }
}

/// Effective settings of a run, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub filter: Filter,
    pub rca_threshold: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub tau: f64,
    #[serde(rename = "K")]
    pub max_techs: usize,
    pub seed: u64,
    pub mode: Mode,
    pub samples: usize,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    pub config_file: Option<PathBuf>,
}

impl RunConfig {
    /// Merges flags over the config file over defaults and checks ranges.
    pub fn resolve(
        cli: &Cli,
        file: &FileConfig,
        metric: &MetricArgs,
        model: &ModelArgs,
        data_dir: Option<&Path>,
    ) -> Result<Self> {
        let max_techs = model.max_techs.or(file.max_techs).unwrap_or(221);
        let cfg = Self {
            filter: metric.filter.or(file.filter).unwrap_or(Filter::None),
            rca_threshold: metric.rca_threshold.or(file.rca_threshold).unwrap_or(1.0),
            tol: metric.tol.or(file.tol).unwrap_or(1e-10),
            max_iter: metric.max_iter.or(file.max_iter).unwrap_or(10_000),
            tau: model.tau.or(file.tau).unwrap_or(0.07),
            max_techs,
            seed: model.seed.or(file.seed).unwrap_or(0),
            mode: model.mode.or(file.mode).unwrap_or(if max_techs <= 20 { Mode::Exact } else { Mode::Mc }),
            samples: model.samples.or(file.samples).unwrap_or(10_000),
            out_dir: cli
                .out_dir
                .clone()
                .or_else(|| file.out_dir.clone())
                .or_else(|| data_dir.map(Path::to_path_buf))
                .unwrap_or_else(|| PathBuf::from(".")),
            format: cli.format.or(file.format).unwrap_or(OutputFormat::Csv),
            config_file: cli.config.clone(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        let fail = |m: &str| Err(CliError::Usage(m.to_string()));
        if !(self.rca_threshold.is_finite() && self.rca_threshold >= 0.0) {
            return fail("--rca-threshold must be a finite number >= 0");
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return fail("--tol must be a finite number > 0");
        }
        if self.max_iter == 0 {
            return fail("--max-iter must be at least 1");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail("--tau must lie in (0, 1]");
        }
        if self.max_techs == 0 || self.max_techs > u16::MAX as usize {
            return fail("--K must lie in 1..=65535");
        }
        if self.samples == 0 {
            return fail("--samples must be at least 1");
        }
        Ok(())
    }
}

/// Resolves a relative input path against the data directory when one is
/// set, and checks that it is a readable file.
pub fn input_path(path: &Path, data_dir: Option<&Path>) -> Result<PathBuf> {
    let resolved = match data_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    };
    std::fs::File::open(&resolved).map_err(|e| CliError::io(&resolved, e))?;
    Ok(resolved)
}
