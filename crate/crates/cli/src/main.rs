use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use impactres_cli::commands::{self, Failure};
use impactres_cli::RunConfig;

#[derive(Parser)]
#[command(
    name = "impactres",
    version,
    about = "Resonance analysis and simulation of a forced impact oscillator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration (an empty file selects the canonical parameters)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides output.dir from the config
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for scans (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Reserved; the computations are deterministic
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Record every N-th integrator step to samples.csv
    #[arg(long, global = true)]
    samples_stride: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Resonance points J_1n for n = 1..n_max
    Resonances,
    /// Equilibrium branches and their stability labels
    Equilibria,
    /// Cross-check closed forms against independent oracles
    Verify {
        /// Tighten every tolerance 1000-fold to exercise the failure path
        #[arg(long)]
        inject_fault: bool,
    },
    /// Event-driven simulation with a lock-in report
    Simulate,
    /// Analyse and simulate over a parameter grid
    Scan,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let path = cli
        .config
        .ok_or_else(|| Failure::Config("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(&path).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(stride) = cli.samples_stride {
        cfg.simulation.samples_stride = Some(stride);
        cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Some(seed) = cli.seed {
        log::debug!("--seed {seed} ignored: no stochastic components");
    }
    let out = cli.out.or_else(|| cfg.output.dir.clone());
    let out = out.as_deref();
    match cli.command {
        Command::Resonances => commands::cmd_resonances(&cfg, out),
        Command::Equilibria => commands::cmd_equilibria(&cfg, out),
        Command::Verify { inject_fault } => commands::cmd_verify(&cfg, inject_fault),
        Command::Simulate => commands::cmd_simulate(&cfg, out),
        Command::Scan => commands::cmd_scan(&cfg, out, cli.jobs),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("IMPACTRES_LOG", "warn"))
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
