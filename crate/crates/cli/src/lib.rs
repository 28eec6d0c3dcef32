//! File formats, configuration and commands behind the `ecomplexity` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;

use std::io::Write;
use std::path::PathBuf;

use config::{input_path, Cli, Command, FileConfig, MetricArgs, ModelArgs, RunConfig, DATA_DIR_ENV};
use error::Result;

/// Runs one parsed command line, writing progress lines to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let data_dir = std::env::var_os(DATA_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let data_dir = data_dir.as_deref();
    let file = match &cli.config {
        Some(path) => FileConfig::load(&input_path(path, None)?)?,
        None => FileConfig::default(),
    };
    let no_metric = MetricArgs::default();
    let no_model = ModelArgs::default();
    match &cli.command {
        Command::Ingest { trade_csv, output } => {
            let cfg = RunConfig::resolve(cli, &file, &no_metric, &no_model, data_dir)?;
            commands::ingest(&input_path(trade_csv, data_dir)?, output.as_deref(), &cfg, out).map(|_| ())
        }
        Command::Metrics { matrix, metric } => {
            let cfg = RunConfig::resolve(cli, &file, metric, &no_model, data_dir)?;
            commands::metrics(&input_path(matrix, data_dir)?, &cfg, out)
        }
        Command::Simulate(model) => {
            let cfg = RunConfig::resolve(cli, &file, &no_metric, model, data_dir)?;
            commands::simulate(&cfg, out)
        }
        Command::Validate { matrix, income_csv, metric } => {
            let cfg = RunConfig::resolve(cli, &file, metric, &no_model, data_dir)?;
            commands::validate(&input_path(matrix, data_dir)?, &input_path(income_csv, data_dir)?, &cfg, out)
        }
        Command::FitTau { metrics_csv, column, max_techs } => {
            let model = ModelArgs { max_techs: *max_techs, ..Default::default() };
            let cfg = RunConfig::resolve(cli, &file, &no_metric, &model, data_dir)?;
            commands::fit_tau(&input_path(metrics_csv, data_dir)?, column, &cfg, out)
        }
    }
}
