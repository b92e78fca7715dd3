//! `bayescomplex`: reproducible experiment runner. Each subcommand writes a
//! CSV report and exits 0 when every check passes, 1 on a failed check, 2 on
//! a configuration error and 3 on a numerical failure.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, Schema};
use report::CsvReport;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Assertion(String),
    Numerical(String),
}

impl From<bayescomplex_core::Error> for CliError {
    fn from(e: bayescomplex_core::Error) -> Self {
        use bayescomplex_core::Error as E;
        match e {
            E::Numerical(_) | E::InsufficientSamples(_) => CliError::Numerical(e.to_string()),
            E::AssumptionViolated(_) => CliError::Assertion(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Assertion(m) => write!(f, "check failed: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "bayescomplex", version, about = "Bayes complexity experiments")]
struct Cli {
    /// Flat `key = value` file applied over the defaults.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Overrides `seed` from every other source.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Linear-model sharp complexity and its slope in log(1/ε).
    LinearComplexity(Overrides),
    /// Limiting complexity of a shallow-network target.
    NnComplexity(Overrides),
    /// Codimension of the representation set.
    Codim(Overrides),
    /// Sharp complexity of a single slope change against its bounds.
    OneChange(Overrides),
    /// Deep versus shallow parameter counts for a periodic target.
    Periodic(Overrides),
    /// Temperature search and PAC-Bayes bounds for a conjugate model.
    Pacbayes(Overrides),
    /// SGLD against an exact Gaussian posterior.
    SgldCheck(Overrides),
    /// Projection movement bounds and decay exponents.
    ProjectionCheck(Overrides),
}

#[derive(clap::Args)]
struct Overrides {
    /// `key=value` settings applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

type Runner = fn(&mut Config) -> Result<CsvReport, CliError>;

impl Command {
    fn parts(&self) -> (&'static str, Schema, Runner, &Overrides) {
        use commands::*;
        match self {
            Command::LinearComplexity(o) => ("linear-complexity", LINEAR, cmd_linear_complexity, o),
            Command::NnComplexity(o) => ("nn-complexity", NN, cmd_nn_complexity, o),
            Command::Codim(o) => ("codim", CODIM, cmd_codim, o),
            Command::OneChange(o) => ("one-change", ONE_CHANGE, cmd_one_change, o),
            Command::Periodic(o) => ("periodic", PERIODIC, cmd_periodic, o),
            Command::Pacbayes(o) => ("pacbayes", PACBAYES, cmd_pacbayes, o),
            Command::SgldCheck(o) => ("sgld-check", SGLD, cmd_sgld_check, o),
            Command::ProjectionCheck(o) => ("projection-check", PROJECTION, cmd_projection_check, o),
        }
    }
}

fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let (name, schema, runner, overrides) = cli.command.parts();
    let mut cfg = Config::defaults(schema);
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
        cfg.apply_file(path, &text)?;
    }
    for arg in &overrides.set {
        cfg.apply_override(arg)?;
    }
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed)?;
    }
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--workers: {e}")))?;
    }
    let rep = runner(&mut cfg)?;
    let text = rep.render(name, &cfg);
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Config(format!("{path}: {e}")))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Config(format!("stdout: {e}")))?,
    }
    Ok(rep.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
