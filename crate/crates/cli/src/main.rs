use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use wetsim::{commands, resolve_threads, with_threads, ExperimentConfig, THREADS_ENV};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// AHE and AEO against the number of devices
    Sweep,
    /// Independent versus synchronized multi-PB signals
    Correlation,
    /// AEO heatmap (CSV plus SVG)
    Heatmap,
    /// Precoder versus exhaustive grid on two-antenna instances
    Oracle,
}

/// Monte Carlo experiments for CSI-free wireless energy transfer.
#[derive(Debug, Parser)]
#[command(name = "wetsim", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Master seed, overrides [run] seed
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials, overrides [run] trials
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Worker threads, overrides the environment and [run] threads
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(t) = cli.trials {
        cfg.scenario.trials = t as usize;
    }
    let env = std::env::var(THREADS_ENV).ok();
    let threads = resolve_threads(cli.threads.map(|t| t as usize), env.as_deref(), cfg.threads)
        .map_err(anyhow::Error::msg)?;
    let out = cli.out;
    with_threads(threads, || match cli.command {
        Command::Sweep => commands::cmd_sweep(&cfg, &out),
        Command::Correlation => commands::cmd_correlation(&cfg, &out),
        Command::Heatmap => commands::cmd_heatmap(&cfg, &out),
        Command::Oracle => commands::cmd_oracle(&cfg, &out).map(|r| {
            println!(
                "{} instances, max relative gap {:.4}%",
                r.rows.len(),
                100.0 * r.max_gap
            );
        }),
    })?
    .with_context(|| format!("{:?} failed", cli.command).to_lowercase())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
