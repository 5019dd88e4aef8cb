mod commands;
mod config;
mod svg;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "gammalab", version, about = "Nonlocal isoperimetric energies on the flat torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment file with `key=value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for CSV, SVG and PGM artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the `seed` key of the experiment file.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Critical coupling of a kernel by both quadrature routes.
    GammaCrit {
        /// Kernel spec, e.g. `helmholtz` or `ring:a=-1,b=0.1`; defaults to the config's.
        kernel: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Energies along a decreasing sequence of eps, extrapolated to eps = 0.
    Sweep,
    /// Runs the invariant suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
        /// Perturbs the reference critical coupling by 1% (mutation test).
        #[arg(long, hide = true)]
        sabotage: bool,
    },
    /// Volume-conserving swap annealing.
    Anneal,
    /// Radial autocorrelation, slope perimeter and small-r polynomial of a shape.
    Autocorr,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

/// Raised when at least one verification check fails.
#[derive(Debug)]
pub struct VerificationFailed(pub Vec<String>);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "verification failed: {}", self.0.join(", "))
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return 3;
    }
    let inadmissible = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<gammalab::Error>(), Some(gammalab::Error::KernelInadmissible { .. })));
    if inadmissible {
        2
    } else {
        1
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed.to_string());
    }
    let out = cli.out.clone().or_else(|| cfg.out()).unwrap_or_else(|| PathBuf::from("gammalab_out"));
    match cli.command {
        Command::GammaCrit { kernel, dim } => commands::gamma_crit(&cfg, kernel.as_deref(), dim, cli.out.as_deref()),
        Command::Sweep => commands::sweep(&cfg, &out),
        Command::Verify { level, sabotage } => verify::run(level, sabotage, cli.out.as_deref()),
        Command::Anneal => commands::anneal(&cfg, &out),
        Command::Autocorr => commands::autocorr(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            if code == 1 {
                eprintln!("error: {e:#}");
                eprintln!("usage: gammalab <gamma-crit|sweep|verify|anneal|autocorr> [--config FILE] [--out DIR] [--seed U64]");
            } else if code == 2 {
                eprintln!("KernelInadmissible: {e:#}");
            } else {
                eprintln!("{e:#}");
            }
            ExitCode::from(code)
        }
    }
}
