use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phaselitho::cli::{self, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "phaselitho", version, about = "Lithography forward model and phase-field mask inversion")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Recorded in the manifest; computations run on one thread.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the printed pattern of a mask (PGM, PNG, CSV or polygon JSON).
    Forward { mask: Option<PathBuf> },
    /// Optimize a mask for a target pattern.
    Invert { target: Option<PathBuf> },
    /// Distances between two patterns, as CSV.
    Metrics { a: Option<PathBuf>, b: Option<PathBuf> },
    /// Build and cache the smoothed point-spread function.
    KernelBuild {
        /// Target deviation from the Gaussian.
        #[arg(long)]
        delta: Option<f64>,
        /// Number of halvings of s0 to try.
        #[arg(long)]
        max_halvings: Option<u32>,
    },
}

fn run(args: Args) -> phaselitho::Result<cli::Outcome> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ov = Overrides { out: args.out, seed: args.seed, threads: args.threads };
    match args.command {
        Command::Forward { mask } => {
            cfg.paths.mask = mask.or(cfg.paths.mask);
            cli::cmd_forward(cfg, &ov)
        }
        Command::Invert { target } => {
            cfg.paths.target = target.or(cfg.paths.target);
            cli::cmd_invert(cfg, &ov)
        }
        Command::Metrics { a, b } => {
            cfg.paths.pattern_a = a.or(cfg.paths.pattern_a);
            cfg.paths.pattern_b = b.or(cfg.paths.pattern_b);
            cli::cmd_metrics(cfg, &ov)
        }
        Command::KernelBuild { delta, max_halvings } => {
            if let Some(d) = delta {
                cfg.kernel.delta = d;
            }
            if let Some(m) = max_halvings {
                cfg.kernel.search.max_halvings = m;
            }
            cli::cmd_kernel_build(cfg, &ov)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
