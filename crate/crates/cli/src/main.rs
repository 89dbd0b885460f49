//! `annuli`: command-line front end for the extremal-map library.
//!
//! Reports go to stdout (or `--out`) as JSON, CSV or text; diagnostics go to stderr
//! through `ANNULI_LOG`.

mod args;
mod commands;
mod config;
mod output;

use clap::Parser;
use std::process::ExitCode;

use args::{Cli, Command};
use config::RunConfig;
use output::Report;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] annuli::Error),
    #[error("output failed: {0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(annuli::Error::Config(_)) => 1,
            CliError::Core(e) if e.is_accuracy() => 3,
            CliError::Core(_) | CliError::Output(_) => 2,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (report, cfg): (Report, RunConfig) = match &cli.command {
        Command::Bound(c) => {
            let cfg = RunConfig::resolve(c)?;
            (commands::bound(&cfg)?, cfg)
        }
        Command::SolveC(c) => {
            let cfg = RunConfig::resolve(c)?;
            (commands::solve_c_cmd(&cfg)?, cfg)
        }
        Command::Regularity(c) => {
            let cfg = RunConfig::resolve(c)?;
            (commands::regularity(&cfg)?, cfg)
        }
        Command::MapEval(a) => (commands::map_eval(a)?, RunConfig::resolve(&a.common)?),
        Command::Distortion(a) => (
            commands::functional(a, annuli::Direction::Forward)?,
            RunConfig::resolve(&a.common)?,
        ),
        Command::Energy(a) => (
            commands::functional(a, annuli::Direction::Inverse)?,
            RunConfig::resolve(&a.common)?,
        ),
        Command::Report(a) => (commands::report(a)?, RunConfig::resolve(&a.common)?),
        Command::Minseq(a) => (commands::minseq(a)?, RunConfig::resolve(&a.common)?),
        Command::Verify(a) => (commands::verify(a)?, RunConfig::resolve(&a.common)?),
        Command::Curvature(a) => (commands::curvature(a)?, RunConfig::resolve(&a.common)?),
    };
    let text = report.render(cfg.format())?;
    output::emit(&text, cfg.out.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ANNULI_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
