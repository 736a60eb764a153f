//! `open-dgd`: reproducible experiments on decentralized gradient descent.
//!
//! Subcommands:
//!
//! * `simulate`  - run DGD on an instance, optionally under a function-change
//!   schedule; writes `trace.csv` and `summary.json`.
//! * `verify`    - check the analytic bounds, either on a randomized instance
//!   batch or on one instance file; writes `report.csv` and `report.json`;
//!   exits nonzero when a check fails.
//! * `worstcase` - derivative-free worst-case search over a condition-number
//!   grid; writes `scaling.csv`.
//! * `localize`  - print the localization radius, penalized condition
//!   number, and stability radius for given parameters.
//!
//! Every output is a deterministic function of the inputs and the seed.
//! Exit codes: 0 success / all checks pass, 1 check failure, 2 usage or
//! parse error. The default output directory is the current one, or
//! `OPEN_DGD_OUT` when set; an explicit `--out` wins over both.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(name = "open-dgd", version, about = "Decentralized gradient descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory (default: $OPEN_DGD_OUT or the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker-thread cap for parallel batches.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run DGD on an instance, optionally with a function-change schedule.
    Simulate {
        /// Instance descriptor (JSON).
        #[arg(long)]
        instance: PathBuf,
        /// Schedule descriptor (JSON).
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Iteration count.
        #[arg(long, default_value_t = 200)]
        iters: usize,
        /// Penalty override.
        #[arg(long)]
        rho: Option<f64>,
        /// Step-size override.
        #[arg(long)]
        eta: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify the analytic bounds and report margins.
    Verify {
        /// Check one instance file instead of a randomized batch.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Batch size for the randomized sweep.
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Worst-case swap-displacement search over a condition-number grid.
    Worstcase {
        /// Agent count (n - 1 common functions plus the swapped pair).
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Comma-separated condition numbers, e.g. `10,100,1000`.
        #[arg(long)]
        kappas: String,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        /// Objective evaluations per restart.
        #[arg(long, default_value_t = 600)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print localization and stability radii for given parameters.
    Localize {
        /// Derive the parameters from an instance descriptor.
        #[arg(long, conflicts_with_all = ["alpha", "beta", "rho", "lambda_n", "n"])]
        instance: Option<PathBuf>,
        #[arg(long, requires_all = ["beta", "rho", "lambda_n", "n"])]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        /// Largest Laplacian eigenvalue.
        #[arg(long)]
        lambda_n: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { instance, schedule, iters, rho, eta, output } => {
            commands::configure_jobs(output.jobs)
                .and_then(|()| commands::simulate(&instance, schedule.as_deref(), iters, rho, eta, &output))
        }
        Command::Verify { instance, instances, seed, output } => commands::configure_jobs(output.jobs)
            .and_then(|()| commands::verify(instance.as_deref(), instances, seed, &output)),
        Command::Worstcase { n, kappas, restarts, budget, seed, output } => {
            commands::configure_jobs(output.jobs)
                .and_then(|()| commands::worstcase(n, &kappas, restarts, budget, seed, &output))
        }
        Command::Localize { instance, alpha, beta, rho, lambda_n, n } => {
            commands::localize(instance.as_deref(), alpha, beta, rho, lambda_n, n)
        }
    };
    match outcome {
        Ok(commands::Outcome::Success) => ExitCode::SUCCESS,
        Ok(commands::Outcome::ChecksFailed) => ExitCode::from(1),
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(2)
        }
    }
}
