use std::path::PathBuf;
use std::process::ExitCode;

use bsvie::app::{run, AppError, Command, RunOptions};
use clap::{Parser, Subcommand};

/// Adapted M-solutions of backward stochastic Volterra equations and the
/// dynamic risk measures built on them.
#[derive(Parser)]
#[command(name = "bsvie", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; defaults to $BSVIE_OUT_DIR, then the working directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Exit with status 4 if any axiom check fails.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve the BSVIE and summarize Y per slice.
    Solve,
    /// Risk curve rho(t; psi) for the configured claim.
    Risk,
    /// Run the coherence axiom battery.
    Axioms,
    /// Solve the deterministic Volterra equation.
    Bvie,
    /// The sin W(s) counterexample.
    Counterexample,
    /// Refinement study over step and path ladders.
    Convergence,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("config error: --config: a config file is required");
        return ExitCode::from(2);
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("config error: --threads: must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Risk => Command::Risk,
        Cmd::Axioms => Command::Axioms,
        Cmd::Bvie => Command::Bvie,
        Cmd::Counterexample => Command::Counterexample,
        Cmd::Convergence => Command::Convergence,
    };
    let options = RunOptions {
        config,
        out_dir: cli.out,
        seed: cli.seed,
        strict: cli.strict,
    };
    match run(command, &options) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("wrote {} and {}", outcome.report_path.display(), outcome.csv_path.display());
            ExitCode::SUCCESS
        }
        Err(AppError::StrictFailure { failed, outcome }) => {
            println!("{}", outcome.summary);
            eprintln!("axioms violated: {}", failed.join(", "));
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
