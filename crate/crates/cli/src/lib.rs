//! Command-line front end: load a JSON run configuration, run one of the
//! subcommands, and write a CSV or JSON table.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 solver
//! failure, 3 verification threshold failure.

pub mod commands;
pub mod config;
pub mod table;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Validation(_) | CliError::Output(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "retspec",
    version,
    about = "Eigenvalues of a retarded Sturm-Liouville problem with transmission conditions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; overrides `output.path` in the config. Standard output otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; overrides `output.format` in the config.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues by index range or by scanning an s-range.
    Solve(Common),
    /// Samples of the characteristic function F(s²).
    Charfn(Common),
    /// Computed eigenfunction against its asymptotic forms.
    Eigfn {
        #[command(flatten)]
        common: Common,
        /// Eigenvalue index (defaults to range.n_min).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Convergence rates towards the asymptotic formulas.
    Verify(Common),
    /// Structural checks on the problem data.
    Validate(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Solve(c)
            | Command::Charfn(c)
            | Command::Verify(c)
            | Command::Validate(c)
            | Command::Eigfn { common: c, .. } => c,
        }
    }
}

/// Run a parsed command line. The summary, if any, goes to standard error.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let cfg = RunConfig::load(&common.config)?;
    let format = common.format.unwrap_or(cfg.output.format);
    let outcome = match &cli.command {
        Command::Solve(_) => commands::solve(&cfg, format)?,
        Command::Charfn(_) => commands::charfn(&cfg, format)?,
        Command::Eigfn { n, .. } => commands::eigfn(&cfg, *n, format)?,
        Command::Verify(_) => commands::verify(&cfg, format)?,
        Command::Validate(_) => commands::validate_cmd(&cfg, format)?,
    };
    let out = common.out.clone().or_else(|| cfg.output.path.clone());
    match out {
        Some(path) => std::fs::write(&path, &outcome.body)
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(outcome.body.as_bytes())
            .map_err(|e| CliError::Output(e.to_string()))?,
    }
    if let Some(summary) = &outcome.summary {
        eprint!("{summary}");
    }
    outcome.failure.map_or(Ok(()), Err)
}
