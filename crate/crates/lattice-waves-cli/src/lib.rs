//! Batch command-line front end of the lattice-waves toolkit.
//!
//! [`run_cli`] parses nothing itself: it takes the parsed [`config::Cli`],
//! resolves the configuration, runs the requested analysis, writes the
//! artifacts and a `manifest.json` (always last), and returns the exit
//! status: 0 when every embedded check passes, 2 for configuration errors,
//! 3 for numerical failures or failed checks.

pub mod config;
pub mod output;
pub mod pipelines;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use config::{Cli, Command, Config, RunConfig};
use output::{ArtifactWriter, Check};

/// Version string in `git describe` style.
pub const VERSION: &str = env!("LATTICE_WAVES_VERSION");

/// Exit status for configuration errors.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status for numerical failures and failed checks.
pub const EXIT_NUMERICAL: u8 = 3;

/// Failures of a run.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration violates a documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A numerical routine did not deliver the requested accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An artifact could not be written.
    #[error("cannot write {path}: {message}")]
    Io {
        /// Offending path.
        path: PathBuf,
        /// Underlying error.
        message: String,
    },
}

impl CliError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<lattice_waves::Error> for CliError {
    fn from(e: lattice_waves::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

/// Contents of `manifest.json`.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    /// Tool name.
    pub tool: &'static str,
    /// Tool version.
    pub version: &'static str,
    /// Command that was run.
    pub command: Command,
    /// Every knob, after merging files and flags.
    pub config: &'a Config,
    /// Resolved dimer parameters.
    pub params: &'a lattice_waves::DimerParams,
    /// Wall-clock time of the analysis.
    pub wall_time_seconds: f64,
    /// Artifacts relative to the output directory.
    pub artifacts: Vec<String>,
    /// Embedded checks.
    pub checks: &'a [Check],
    /// Whether every check passed and no error occurred.
    pub all_checks_pass: bool,
    /// Failures that stopped an analysis.
    pub errors: Vec<String>,
}

/// Outcome of [`execute`].
#[derive(Debug)]
pub struct RunOutcome {
    /// Embedded checks.
    pub checks: Vec<Check>,
    /// Failures that stopped an analysis.
    pub errors: Vec<String>,
    /// Exit status.
    pub exit_code: u8,
}

/// Run a validated configuration and write the manifest.
///
/// # Errors
/// Only when the output directory cannot be created or the manifest cannot
/// be written; all other failures are reported in the outcome.
pub fn execute(rc: &RunConfig) -> Result<RunOutcome, CliError> {
    let out_dir = rc.config.out.clone();
    let mut out = ArtifactWriter::new(&out_dir, rc.config.format)?;
    let start = Instant::now();
    let (checks, errors, mut code) = match rc.command {
        Command::FullReport => match pipelines::full_report(rc, &mut out) {
            Ok((r, failures)) => (r.checks, failures, 0),
            Err(e) => (Vec::new(), vec![e.to_string()], e.exit_code()),
        },
        command => match pipelines::run_analysis(command, rc, &mut out) {
            Ok(r) => (r.checks, Vec::new(), 0),
            Err(e) => (Vec::new(), vec![e.to_string()], e.exit_code()),
        },
    };
    let wall = start.elapsed().as_secs_f64();
    let all_pass = errors.is_empty() && checks.iter().all(|c| c.pass);
    if code == 0 && !all_pass {
        code = EXIT_NUMERICAL;
    }
    let artifacts = out
        .written()
        .iter()
        .map(|p| p.strip_prefix(&out_dir).unwrap_or(p).to_string_lossy().into_owned())
        .collect();
    let manifest = Manifest {
        tool: "lattice-waves",
        version: VERSION,
        command: rc.command,
        config: &rc.config,
        params: &rc.params,
        wall_time_seconds: wall,
        artifacts,
        checks: &checks,
        all_checks_pass: all_pass,
        errors: errors.clone(),
    };
    out.write_json_always(&out_dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { checks, errors, exit_code: code })
}

/// Resolve, run and report; returns the process exit status.
pub fn run_cli(cli: Cli) -> u8 {
    let rc = match config::parse_config(cli.command, &cli.flags) {
        Ok(rc) => rc,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match execute(&rc) {
        Ok(outcome) => {
            for e in &outcome.errors {
                eprintln!("error: {e}");
            }
            let failed: Vec<&Check> = outcome.checks.iter().filter(|c| !c.pass).collect();
            for c in &failed {
                eprintln!("check failed: {} = {} (required {} {})", c.name, c.value, c.relation, c.threshold);
            }
            println!(
                "{}: {}/{} checks passed; artifacts in {}",
                rc.command.name(),
                outcome.checks.len() - failed.len(),
                outcome.checks.len(),
                rc.config.out.display()
            );
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
