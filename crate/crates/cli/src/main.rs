use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use hadamard_cli::{parse_overrides, run, Command, RunConfig};

/// Convex analysis and equilibrium problems on Hadamard manifolds.
#[derive(Parser)]
#[command(name = "hadamard-eq", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Patch the input document, e.g. `--set solver.tol=1e-9`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run property suites (`all` or a comma-separated list).
    Verify {
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        /// Override each suite's default trial count.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Weighted Karcher mean of `{points, weights?}`.
    Barycenter { input: PathBuf },
    /// Pseudo or commutative combination of `{points, weights, mode, order?}`.
    Combine { input: PathBuf },
    /// Resolvent of a problem file at its `x0`.
    Resolvent {
        input: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Proximal point iteration from `x0`.
    Ppa {
        input: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 200)]
        iters: usize,
    },
    /// Randomized Helly check over seeded ball families.
    Helly {
        #[arg(long, default_value = "hyperboloid")]
        manifold: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 6)]
        bodies: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Also write per-family rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Equilibrium residual of a problem file at its `x0`.
    Residual { input: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let overrides = match parse_overrides(&cli.set) {
        Ok(o) => o,
        Err(m) => {
            eprintln!("hadamard-eq: error: {m}");
            return ExitCode::from(1);
        }
    };
    let (command, input_path) = match cli.command {
        Cmd::Verify { suite, trials } => (Command::Verify { suites: suite, trials }, None),
        Cmd::Barycenter { input } => (Command::Barycenter, Some(input)),
        Cmd::Combine { input } => (Command::Combine, Some(input)),
        Cmd::Resolvent { input, lambda } => (Command::Resolvent { lambda }, Some(input)),
        Cmd::Ppa { input, lambda, iters } => (Command::Ppa { lambda, iters }, Some(input)),
        Cmd::Helly {
            manifold,
            dim,
            bodies,
            trials,
            csv,
        } => (
            Command::Helly {
                manifold,
                dim,
                bodies,
                trials,
                csv,
            },
            None,
        ),
        Cmd::Residual { input } => (Command::Residual, Some(input)),
    };
    let cfg = RunConfig {
        command,
        input_path,
        output_path: cli.output,
        seed: cli.seed,
        overrides,
    };
    ExitCode::from(run(&cfg) as u8)
}
