//! Command-line driver: reads a JSON run config, runs one experiment and
//! writes a content-addressed run directory with `manifest.json`,
//! `report.json` and CSV series.
//!
//! Exit codes: 0 on success, 2 when a solver did not converge or a sweep
//! point failed (results are still written), 1 on configuration and other
//! errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::Parser;
use wavefocus_boundary::Execution;

pub use commands::{run, Command, Outcome, RunContext};
pub use config::{RunConfig, ENV_JOBS, ENV_OUT};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "wavefocus",
    version,
    about = "Boundary-control wave focusing experiments"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run config; every field has a default except the focusing radii.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Parent directory for run directories [env: WAVEFOCUS_OUT].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially [env: WAVEFOCUS_JOBS].
    #[arg(long, value_name = "K")]
    pub jobs: Option<usize>,
    /// Rebuild the NtD kernel even when a cached copy verifies.
    #[arg(long)]
    pub force_rebuild: bool,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCOMPLETE: i32 = 2;

fn jobs(flag: Option<usize>) -> Result<Option<usize>> {
    if let Some(k) = flag {
        return Ok(Some(k));
    }
    match std::env::var(ENV_JOBS) {
        Ok(s) if !s.is_empty() => s.parse().map(Some).map_err(|_| {
            CliError::config(
                "/",
                format!("{ENV_JOBS} must be a positive integer, got `{s}`"),
            )
        }),
        _ => Ok(None),
    }
}

fn execution(jobs: Option<usize>) -> Result<Execution> {
    match jobs {
        Some(0) => Err(CliError::config("/", "--jobs must be at least 1")),
        Some(1) => Ok(Execution::Sequential),
        Some(_k) => {
            #[cfg(feature = "parallel")]
            {
                // fails only if a pool already exists, which keeps its size
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(_k)
                    .build_global();
            }
            Ok(Execution::Parallel)
        }
        None => Ok(Execution::Parallel),
    }
}

/// Resolves config, output location and parallelism, then runs the command.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let config = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let env_out = std::env::var(ENV_OUT).ok();
    let out = commands::resolve_out(cli.out.as_deref(), env_out.as_deref(), &config);
    let cache_dir = config
        .cache_dir
        .clone()
        .unwrap_or_else(|| out.join("cache"));
    let ctx = RunContext {
        out,
        cache_dir,
        execution: execution(jobs(cli.jobs)?)?,
        force_rebuild: cli.force_rebuild,
    };
    run(cli.command, &config, &ctx)
}

/// Runs the command line and maps the outcome to an exit code.
pub fn main_with(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(o) => {
            println!("{}", o.run_dir.display());
            if o.complete {
                EXIT_OK
            } else {
                eprintln!(
                    "warning: a solver did not converge or a sweep point failed; results written"
                );
                EXIT_INCOMPLETE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
