//! `cbd`: config-driven experiment runner.
//!
//! Exit codes: 0 when every hard invariant holds, 1 when one fails (the
//! report names it), 2 for a malformed config or bad arguments.

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ConfigError;

/// Worker threads for trials and inner loops.
const THREADS_ENV: &str = "CBD_THREADS";

#[derive(Parser)]
#[command(name = "cbd", version, about = "Run convex-body domination experiments from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report and CSV table.
    Run {
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat an experiment over values of one config key and merge the tables.
    Sweep {
        config: PathBuf,
        /// Dotted config key, e.g. `params.theta`.
        #[arg(long)]
        axis: String,
        /// Comma-separated JSON values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config against the schema and print it resolved.
    Validate { config: PathBuf },
}

enum Failure {
    Config(ConfigError),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn init_threads() -> Result<(), ConfigError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| ConfigError(format!("{THREADS_ENV}={v} is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<bool, Failure> {
    init_threads()?;
    match cmd {
        Command::Validate { config } => {
            let resolved = config::resolve(config::parse(&report::read(&config)?)?)?;
            println!("{}", serde_json::to_string_pretty(&resolved.config).expect("config serializes"));
            Ok(true)
        }
        Command::Run { config, out } => {
            let mut resolved = config::resolve(config::parse(&report::read(&config)?)?)?;
            if let Some(out) = out {
                resolved.config.output = out;
            }
            let outcome = experiments::run(&resolved).map_err(|e| Failure::Runtime(e.to_string()))?;
            let ok = report::write_run(&resolved, &outcome).map_err(|e| Failure::Runtime(e.to_string()))?;
            report::print_invariants(&outcome.invariants);
            Ok(ok)
        }
        Command::Sweep { config, axis, values, out } => {
            let raw: serde_json::Value = serde_json::from_str(&report::read(&config)?)
                .map_err(|e| ConfigError(format!("schema violation: {e}")))?;
            let runs = report::plan_sweep(&raw, &axis, &values)?;
            let mut done = Vec::with_capacity(runs.len());
            for (value, resolved) in runs {
                let outcome = experiments::run(&resolved).map_err(|e| Failure::Runtime(e.to_string()))?;
                done.push((value, resolved, outcome));
            }
            let dir = out.unwrap_or_else(|| done[0].1.config.output.clone());
            report::write_sweep(&dir, &axis, &done).map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
