//! `levsim`: steady states, sweeps and trajectories of a cavity-levitated
//! nanosphere under continuous monitoring, written as CSV or JSON tables.
//!
//! Exit status: 0 on success, 2 on configuration or I/O errors, 3 on
//! numerical failures.

mod config;
mod output;
mod run;

use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use thiserror::Error;

use config::{Format, Sources, PRESETS};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "LEVSIM_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] levsim::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Model(levsim::Error::Domain(_)) => "domain",
            CliError::Model(levsim::Error::Units(_)) => "units",
            CliError::Model(levsim::Error::Stability(_)) => "stability",
            CliError::Model(levsim::Error::Numerical(_)) => "numerical",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(levsim::Error::Stability(_) | levsim::Error::Numerical(_)) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "levsim",
    version,
    about = "Gaussian dynamics of a levitated nanosphere in a cavity"
)]
struct Cli {
    /// Built-in configuration (see --list-presets).
    #[arg(long)]
    preset: Option<String>,
    /// TOML config, or a previous .csv/.json output to rerun.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override one config key, e.g. `--set system.g=0.5` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,
    /// Print the resolved config and exit without computing.
    #[arg(long)]
    print_config: bool,
}

fn diagnostic(level: &str, kind: &str, message: &str) {
    eprintln!("levsim: level={level} kind={kind} message={message:?}");
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{THREADS_VAR} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.list_presets {
        for (name, about) in PRESETS {
            println!("{name}\t{about}");
        }
        return Ok(());
    }
    let mut overrides = Vec::new();
    if let Some(out) = &cli.out {
        let path = toml::Value::String(out.to_string_lossy().into_owned());
        overrides.push(format!("output.path={path}"));
    }
    if let Some(format) = &cli.format {
        overrides.push(format!("output.format=\"{format}\""));
    }
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    overrides.extend(cli.overrides);
    let resolved = config::resolve(&Sources {
        preset: cli.preset,
        config: cli.config,
        overrides,
    })?;
    if cli.print_config {
        print!("{}", config::render(&resolved));
        return Ok(());
    }
    init_threads()?;

    let start = Instant::now();
    let table = run::execute(&resolved)?;
    match &resolved.output.path {
        Some(path) => {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut out = BufWriter::new(file);
            output::write(&mut out, &resolved, &table)?;
            out.flush()?;
        }
        None => {
            let mut out = BufWriter::new(std::io::stdout().lock());
            output::write(&mut out, &resolved, &table)?;
            out.flush()?;
        }
    }
    let format = match resolved.output.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    eprintln!(
        "levsim: level=info command={} rows={} format={format} elapsed_ms={}",
        resolved.command.name(),
        table.rows.len(),
        start.elapsed().as_millis()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            diagnostic("error", e.kind(), &e.to_string());
            ExitCode::from(e.exit_code())
        }
    }
}
