use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gradnet_cli::config::{self, RunConfig};
use gradnet_cli::{commands, CliError, CliResult};

#[derive(Parser)]
#[command(name = "gradnet", version, about = "Spring-network synthesis and convergence checks for gradient elasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check model admissibility.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build the spring network and export its netlist.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Integrate the lattice dynamics and export the trajectory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a convergence sweep against the continuum reference.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the randomized identity checks.
    Selftest,
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let load = |path: &PathBuf| -> CliResult<RunConfig> { config::load(path) };
    match &cli.command {
        Command::Validate { config } => {
            let report = commands::validate(&load(config)?)?;
            println!("{report}");
        }
        Command::Synthesize { config } => {
            let cfg = load(config)?;
            println!("{}", commands::synthesize(&cfg, &cfg.out_dir(cli.out.as_deref()))?);
        }
        Command::Simulate { config } => {
            let cfg = load(config)?;
            println!("{}", commands::simulate(&cfg, &cfg.out_dir(cli.out.as_deref()))?);
        }
        Command::Converge { config } => {
            let cfg = load(config)?;
            println!("{}", commands::converge(&cfg, &cfg.out_dir(cli.out.as_deref()))?);
        }
        Command::Selftest => {
            let suites = commands::run_selftest(cli.seed, cli.out.as_deref())?;
            for s in &suites {
                let tag = if s.passed { "pass" } else { "FAIL" };
                println!("[{tag}] {}: worst {:.3e} (tol {:.0e}) {}", s.name, s.worst, s.tolerance, s.detail);
            }
            let failed: Vec<&str> = suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect();
            if !failed.is_empty() {
                return Err(CliError::CheckFailed(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
