//! `sgu`: parameter sweeps for saturable global uncertainty.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::Parser;

use config::{Command, Format, RunConfig, UsageError};
use sgu_core::SguError;

/// Worker-count environment variable; defaults to all cores.
const WORKERS_ENV: &str = "SGU_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "sgu", version, about = "Saturable global uncertainty sweeps")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one field, e.g. `--set thermometry.t0_points=8` or
    /// `--set phase.deltas=[0.1,0.2]`. Repeatable; applied in order.
    #[arg(long = "set", value_name = "FIELD=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Dataset path; a `<path>.meta.json` sidecar is written next to it.
    /// Without it the dataset goes to stdout and the sidecar to stderr.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<SguError> for Failure {
    fn from(e: SguError) -> Self {
        match e {
            SguError::Domain { .. } | SguError::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Numerical(format!("{e:#}"))
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, UsageError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    cfg.subcommand = cli.command;
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(o) = &cli.output {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_workers() -> Result<(), UsageError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError::new(WORKERS_ENV, format!("expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| UsageError::new(WORKERS_ENV, e.to_string()))
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = build_config(cli)?;
    init_workers()?;
    let start = Instant::now();
    let data = run::run(&cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let text = output::render(&cfg, &data);
    let meta = output::sidecar(&cfg, wall, data.rows.len());
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            let side = sidecar_path(path);
            std::fs::write(&side, meta).with_context(|| format!("writing {}", side.display()))?;
        }
        None => {
            print!("{text}");
            eprint!("{meta}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
