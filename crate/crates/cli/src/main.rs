use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wienerlab_cli::config::{ExperimentConfig, Operation};
use wienerlab_cli::runner;

#[derive(Parser)]
#[command(name = "wienerlab", version, about = "Gaussian-measure, extension and heat-semigroup experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON); the shipped preset is used otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo sample count (initial size when doubling).
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
    /// Gauss–Hermite points per axis; 0 doubles until convergence.
    #[arg(long, global = true)]
    quad_order: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// K(p), C(p), α(p) and absolute moments
    Constants,
    /// Wick sums against Monte Carlo
    Wick,
    /// Exponential and mixed moment identities
    Moments,
    /// Extension rates along subspace chains
    Extend,
    /// Heat semigroup residuals
    Heat,
    /// Small-time heat expansion
    Expand,
    /// Every acceptance check plus a determinism rerun
    VerifyAll,
}

impl Command {
    fn operation(self) -> Operation {
        match self {
            Command::Constants => Operation::Constants,
            Command::Wick => Operation::Wick,
            Command::Moments => Operation::Moments,
            Command::Extend => Operation::Extend,
            Command::Heat => Operation::Heat,
            Command::Expand => Operation::Expand,
            Command::VerifyAll => Operation::VerifyAll,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    wienerlab_cli::init_threads()?;
    let op = cli.command.operation();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::preset(op),
    };
    if cfg.operation != op {
        anyhow::bail!("config {} selects operation {}, not {}", cfg.id, cfg.operation.name(), op.name());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.mc_samples {
        cfg.method.mc_samples = n;
        cfg.method.mc_cap = cfg.method.mc_cap.max(n);
    }
    if let Some(q) = cli.quad_order {
        cfg.method.quad_order = q;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    let manifest = runner::run(&cfg, &cfg.output_dir.clone())?;
    for c in &manifest.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("manifest: {}", cfg.output_dir.join("manifest.json").display());
    Ok(manifest.pass)
}
