use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sqg_lab::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "sqg", version, about = "Spectral Galerkin SQG on the Dirichlet square: simulation and verification studies")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`key = value` lines, `#` comments).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Sub {
    /// Integrate the Galerkin system and write the trajectory.
    Simulate(Common),
    /// Assemble the coupling tensor both ways and check its structure.
    Gamma(Common),
    /// Commutator identity, bound ratios and the distance ladder.
    Commutators(Common),
    /// Heat kernel, subordination and spectral calculus checks.
    HeatOracle(Common),
    /// Projection decay, weak residuals and the m-ladder study.
    Converge(Common),
    /// Conservation and rk4 drift order.
    Invariants(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Simulate(c) => (Command::Simulate, c),
            Sub::Gamma(c) => (Command::Gamma, c),
            Sub::Commutators(c) => (Command::Commutators, c),
            Sub::HeatOracle(c) => (Command::HeatOracle, c),
            Sub::Converge(c) => (Command::Converge, c),
            Sub::Invariants(c) => (Command::Invariants, c),
        }
    }
}

fn main() -> ExitCode {
    let (command, cli) = Cli::parse().command.split();
    let mut config = match RunConfig::from_path(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out = out;
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(2);
    }
    match run(command, &config, &config.out) {
        Ok(summary) => {
            print!("{}", summary.render());
            if summary.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
