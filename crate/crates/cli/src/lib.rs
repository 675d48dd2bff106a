//! Command-line front end: `solve`, `inpaint`, `param-range` and `oracle`.
//!
//! Settings are layered as built-in defaults, then the `--config` file, then
//! explicit flags. Every command that writes to `--out` also writes
//! `manifest.txt`, a config file holding the fully resolved settings, so
//! `itos <command> --config DIR/manifest.txt --out OTHER` repeats the run.
//!
//! Exit codes: 0 success, 1 runtime or oracle failure, 2 missing or
//! unreadable input file, 3 invalid arguments, configuration or failed
//! strict validation.

pub mod inpaint;
pub mod kv;
pub mod oracle;
pub mod param_range;
pub mod solve;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Missing(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Missing(_) => 2,
            CliError::Invalid(_) => 3,
        }
    }
}

impl From<itos::Error> for CliError {
    fn from(e: itos::Error) -> Self {
        let msg = e.to_string();
        match e {
            itos::Error::Io(_) | itos::Error::Image { .. } => CliError::Missing(msg),
            itos::Error::InvalidInput(_) | itos::Error::InvalidParameter(_) => {
                CliError::Invalid(msg)
            }
            itos::Error::Divergence { .. } | itos::Error::OracleFailure(_) => CliError::Failed(msg),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "itos",
    version,
    about = "Inertial three-operator splitting toolkit"
)]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Key-value configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Master seed for masks, noise and instances.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Print progress to stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a single lasso or matrix-completion problem.
    #[command(allow_negative_numbers = true)]
    Solve(solve::SolveArgs),
    /// Run the inpainting comparison over masks, noise levels and methods.
    #[command(allow_negative_numbers = true)]
    Inpaint(inpaint::InpaintArgs),
    /// Tabulate the largest admissible relaxation over an inertia grid.
    #[command(allow_negative_numbers = true)]
    ParamRange(param_range::ParamRangeArgs),
    /// Run the closed-form and reference-solution checks.
    #[command(allow_negative_numbers = true)]
    Oracle(oracle::OracleArgs),
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve::run(&cli.common, a),
        Command::Inpaint(a) => inpaint::run(&cli.common, a),
        Command::ParamRange(a) => param_range::run(&cli.common, a),
        Command::Oracle(a) => oracle::run(&cli.common, a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub(crate) fn load_config(common: &Common) -> CliResult<kv::KvConfig> {
    match &common.config {
        Some(path) => kv::KvConfig::load(path),
        None => Ok(kv::KvConfig::default()),
    }
}

pub(crate) fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Failed(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes)
        .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_with(
    path: &Path,
    f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
) -> CliResult<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Failed(format!("cannot format {}: {e}", path.display())))?;
    write_file(path, &buf)
}

pub(crate) fn parse_flag_list<T: std::str::FromStr>(flag: &str, s: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    kv::parse_list(s).map_err(|e| CliError::Invalid(format!("--{flag}: {e}")))
}
