//! Command-line front end: reads system files, runs the solvers and writes
//! one self-describing report per run.
//!
//! Exit status:
//! - `0` solved or stabilized
//! - `1` a hypothesis of the relevant theorem is refuted by a machine check
//! - `2` inconclusive (budgets, stability windows, unreproduced verdicts)
//! - `3` input error

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub mod commands;
pub mod report;
pub mod schema;
pub mod verify;

pub const EXIT_SOLVED: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "compactness",
    version,
    about = "Finite-prefix solvers for infinite systems of equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Polynomial constraints over a finite ring.
    SolveRing { input: PathBuf },
    /// Linear rows in ℓ^p with solutions in ℓ^q.
    SolveLinear { input: PathBuf },
    /// Continuous functions on a product of intervals.
    SolveBox { input: PathBuf },
    /// Re-run a structured report and compare verdicts.
    Verify { report: PathBuf },
    /// Built-in examples.
    Demo { name: DemoName },
    /// Seeded property suites.
    Props,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoName {
    Helly,
    Abian,
    Planted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Structured,
}

#[derive(Debug, clap::Args)]
pub struct Options {
    /// `k:H,k:H,…` for linear systems, `L,L,…` for ring and box systems.
    #[arg(long, global = true)]
    pub schedule: Option<String>,
    #[arg(long, global = true, default_value_t = 2)]
    pub window: usize,
    /// Root tolerance (box) or norm tolerance (linear).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long = "coord-tol", global = true, default_value_t = 1e-6)]
    pub coord_tol: f64,
    /// One residual tolerance, or one per schedule step, comma separated.
    #[arg(long, global = true)]
    pub eps: Option<String>,
    /// Search nodes (ring) or point evaluations (box).
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Uniform box half-width `M`.
    #[arg(long = "box", global = true)]
    pub bx: Option<f64>,
    #[arg(long, global = true)]
    pub prefix: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

/// Everything that determines a run's report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<String>,
    pub demo: Option<DemoName>,
    pub schedule: Option<String>,
    pub window: usize,
    pub tol: Option<f64>,
    pub coord_tol: f64,
    pub eps: Option<String>,
    pub budget: Option<u64>,
    #[serde(rename = "box")]
    pub bx: Option<f64>,
    pub prefix: Option<usize>,
    pub seed: u64,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Self {
        let o = &cli.opts;
        let (command, input, demo) = match &cli.command {
            Command::SolveRing { input } => ("solve-ring", Some(input), None),
            Command::SolveLinear { input } => ("solve-linear", Some(input), None),
            Command::SolveBox { input } => ("solve-box", Some(input), None),
            Command::Verify { report } => ("verify", Some(report), None),
            Command::Demo { name } => ("demo", None, Some(*name)),
            Command::Props => ("props", None, None),
        };
        RunConfig {
            command: command.to_string(),
            input: input.map(|p| p.display().to_string()),
            demo,
            schedule: o.schedule.clone(),
            window: o.window,
            tol: o.tol,
            coord_tol: o.coord_tol,
            eps: o.eps.clone(),
            budget: o.budget,
            bx: o.bx,
            prefix: o.prefix,
            seed: o.seed,
        }
    }
}

/// Problems with the invocation or the input documents.
#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Field(String),
}

/// Reads a JSON document, reporting parse errors with line and column.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, InputError> {
    let text = fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_string(),
        source,
    })?;
    parse_json(path, &text)
}

pub fn parse_json<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses arguments, runs, writes the report and returns the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_SOLVED
            };
        }
    };
    let config = RunConfig::from_cli(&cli);
    let report = if config.command == "verify" {
        verify::run(&config)
    } else {
        commands::execute(&config, None)
    };
    let text = match cli.opts.format {
        Format::Structured => report::to_structured(&report),
        Format::Human => report::to_human(&report),
    };
    match &cli.opts.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("{}: {e}", path.display());
                return EXIT_INPUT;
            }
        }
        None => print!("{text}"),
    }
    report.outcome.exit_code
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book {}
