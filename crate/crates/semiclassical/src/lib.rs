//! Std companion to `semiclassical-core`: JSON configuration, CSV and JSON
//! output, a thread pool, and the `semiclassical` command-line driver.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;

pub use commands::{run, Artifacts, Command};
pub use config::{RunConfig, Validated};
pub use error::RunError;

/// Environment variable consulted for the worker count when neither the
/// command line nor the config sets one.
pub const THREADS_ENV: &str = "SEMICLASSICAL_THREADS";

/// Worker count: explicit value, then the config, then the environment,
/// else the rayon default.
pub fn resolve_threads(flag: Option<usize>, cfg: &RunConfig) -> Result<Option<usize>, RunError> {
    if let Some(n) = flag.or(cfg.threads) {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| RunError::validation(THREADS_ENV, "must be a positive integer")),
        Err(_) => Ok(None),
    }
}

/// Runs `command` on a dedicated pool of `threads` workers.
pub fn execute(command: Command, cfg: &Validated, threads: Option<usize>) -> Result<Artifacts, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(RunError::validation("threads", "must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| RunError::validation("threads", &e.to_string()))?;
    pool.install(|| run(command, cfg))
}

/// Writes the table and report to the configured paths. Without paths the
/// table goes to `stdout` and the report to `stderr`; a command without a
/// table prints its report to `stdout`.
pub fn emit<O: Write, E: Write>(art: &Artifacts, cfg: &RunConfig, stdout: &mut O, stderr: &mut E) -> Result<(), RunError> {
    let io = |source| RunError::Io { stage: "write", source };
    let json = output::to_json(&art.report);
    let paths = &cfg.output;
    match &art.table {
        Some(table) => {
            match &paths.csv {
                Some(p) => output::write_file(p, &table.to_csv_string())?,
                None => table.write_csv(&mut *stdout).map_err(io)?,
            }
            match (&paths.json, &paths.csv) {
                (Some(p), _) => output::write_file(p, &json)?,
                (None, Some(_)) => stdout.write_all(json.as_bytes()).map_err(io)?,
                (None, None) => stderr.write_all(json.as_bytes()).map_err(io)?,
            }
        }
        None => match &paths.json {
            Some(p) => output::write_file(p, &json)?,
            None => stdout.write_all(json.as_bytes()).map_err(io)?,
        },
    }
    Ok(())
}
