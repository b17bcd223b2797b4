use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiclassical::{emit, execute, resolve_threads, Command, RunConfig, RunError};

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration
    #[arg(short, long)]
    config: PathBuf,
    /// Worker threads (overrides the config and the environment)
    #[arg(long)]
    threads: Option<usize>,
    /// Replaces the config's hbar list
    #[arg(long = "hbar", num_args = 1..)]
    hbars: Vec<f64>,
    #[arg(long)]
    ode_tol: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    #[arg(long)]
    tail_tol: Option<f64>,
    /// CSV output path
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON report path
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Parser)]
#[command(name = "semiclassical", version, about = "Semiclassical coherent-state propagation and its exact oracle")]
struct Args {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Characteristic trajectories and caustic indicator
    Flow(Common),
    /// Phase value, gradient and diagnostics on the target grid
    Phase(Common),
    /// Transport amplitude and leading asymptotic value
    Transport(Common),
    /// Exact expectations from the truncated Fock space
    Oracle(Common),
    /// Asymptotics side by side with the oracle
    Compare(Common),
    /// ℏ-convergence study of the leading-order remainder
    Convergence(Common),
    /// Kerr closed forms against the numeric pipeline
    Kerr(Common),
    /// Consolidated invariant suite
    Invariants(Common),
}

fn split(sub: Sub) -> (Command, Common) {
    match sub {
        Sub::Flow(c) => (Command::Flow, c),
        Sub::Phase(c) => (Command::Phase, c),
        Sub::Transport(c) => (Command::Transport, c),
        Sub::Oracle(c) => (Command::Oracle, c),
        Sub::Compare(c) => (Command::Compare, c),
        Sub::Convergence(c) => (Command::Convergence, c),
        Sub::Kerr(c) => (Command::Kerr, c),
        Sub::Invariants(c) => (Command::Invariants, c),
    }
}

fn apply_flags(mut cfg: RunConfig, c: &Common) -> RunConfig {
    if !c.hbars.is_empty() {
        cfg.hbars = c.hbars.clone();
    }
    if let Some(v) = c.ode_tol {
        cfg.tolerances.ode = v;
    }
    if let Some(v) = c.newton_tol {
        cfg.tolerances.newton = v;
    }
    if let Some(v) = c.tail_tol {
        cfg.tolerances.tail = v;
    }
    if c.csv.is_some() {
        cfg.output.csv = c.csv.clone();
    }
    if c.json.is_some() {
        cfg.output.json = c.json.clone();
    }
    cfg
}

fn real_main() -> Result<Option<RunError>, RunError> {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            // clap uses 2 for usage errors and 0 for --help / --version.
            std::process::exit(code);
        }
    };
    let (command, common) = split(args.command);
    let cfg = apply_flags(RunConfig::load(&common.config)?, &common);
    let threads = resolve_threads(common.threads, &cfg)?;
    let validated = cfg.validate()?;
    let art = execute(command, &validated, threads)?;
    emit(&art, &validated.config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())?;
    Ok(art.failure)
}

fn main() -> ExitCode {
    let err = match real_main() {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => e,
    };
    eprintln!("error: {err}");
    ExitCode::from(err.exit_code() as u8)
}
