//! Configuration-driven experiment runner for `densman`.
//!
//! A JSON config names a space, a metric and an experiment; running it yields
//! a [`Report`] of named checks (value, threshold, pass) and numeric tables.
//! Reports are deterministic for a given config and seed.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use report::{Check, Report};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}", config_message(.field, *.line, *.column, .message))]
    Config {
        field: String,
        /// 1-based; zero for errors found after parsing.
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {message}", .path.display())]
    Io { path: PathBuf, message: String },
    #[error("check `{check}` could not run: {source}")]
    Check {
        check: String,
        #[source]
        source: densman::GeometryError,
    },
    #[error("{0}")]
    Usage(String),
}

fn config_message(field: &str, line: usize, column: usize, message: &str) -> String {
    let field = if field.is_empty() || field == "." { "<root>" } else { field };
    if line == 0 {
        format!("invalid config field `{field}`: {message}")
    } else {
        format!("invalid config field `{field}` at line {line}, column {column}: {message}")
    }
}

/// Runs the experiment named in the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, HarnessError> {
    match config.require_experiment()? {
        Experiment::Verify => experiments::verify::run(config),
        Experiment::TorsionScan => experiments::torsion_scan::run(config),
        Experiment::Convergence => experiments::convergence::run(config),
        Experiment::GeodesicCompare => experiments::geodesic::run(config),
    }
}

#[derive(Debug, Parser)]
#[command(name = "densman", version, about = "Run geometry experiments on discretized density manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariant suites on the configured space and metric.
    Verify(RunArgs),
    /// Torsion norms against α for both metrics.
    TorsionScan(RunArgs),
    /// Closed-form against definitional tensors at n, 2n, 4n.
    Convergence(RunArgs),
    /// α = 0 against Levi-Civita geodesics.
    GeodesicCompare(RunArgs),
    /// Whatever the config's `experiment` field names.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Report path; overrides `output`. Without either the report goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checks CSV path; tables are written beside it. Overrides `csv`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl Command {
    fn split(&self) -> (Option<Experiment>, &RunArgs) {
        match self {
            Command::Verify(a) => (Some(Experiment::Verify), a),
            Command::TorsionScan(a) => (Some(Experiment::TorsionScan), a),
            Command::Convergence(a) => (Some(Experiment::Convergence), a),
            Command::GeodesicCompare(a) => (Some(Experiment::GeodesicCompare), a),
            Command::Run(a) => (None, a),
        }
    }
}

/// Loads the config and applies command-line overrides.
pub fn resolve_config(command: &Command) -> Result<ExperimentConfig, HarnessError> {
    let (experiment, args) = command.split();
    let mut config = ExperimentConfig::from_path(&args.config)?;
    if let Some(e) = experiment {
        match config.experiment {
            Some(c) if c != e => {
                return Err(HarnessError::Config {
                    field: "experiment".into(),
                    line: 0,
                    column: 0,
                    message: format!("config names `{}` but the subcommand runs `{}`", c.name(), e.name()),
                })
            }
            _ => config.experiment = Some(e),
        }
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    if args.out.is_some() {
        config.output = args.out.clone();
    }
    if args.csv.is_some() {
        config.csv = args.csv.clone();
    }
    Ok(config)
}

/// Runs a parsed command line and returns the process exit code: 0 when every
/// check passes, 1 when some check fails, 2 on errors.
pub fn run_cli(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match execute(cli, stdout, stderr) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<bool, HarnessError> {
    let config = resolve_config(&cli.command)?;
    let report = run_experiment(&config)?;
    let io = |e: std::io::Error| HarnessError::Io {
        path: PathBuf::from("<stdout>"),
        message: e.to_string(),
    };

    // the summary goes wherever the report does not
    let summary: &mut dyn Write = match &config.output {
        Some(path) => {
            report.write_json(path)?;
            &mut *stdout
        }
        None => {
            stdout.write_all(report.to_json().as_bytes()).map_err(io)?;
            &mut *stderr
        }
    };
    if let Some(path) = &config.csv {
        report.write_csv(path)?;
    }
    for c in &report.checks {
        writeln!(
            summary,
            "{} {} = {:.3e} ({} {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.comparison.symbol(),
            c.threshold
        )
        .map_err(io)?;
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    writeln!(summary, "{}: {passed}/{} checks passed", report.experiment, report.checks.len()).map_err(io)?;
    Ok(report.passed)
}
