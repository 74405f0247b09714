use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use clap::{Parser, Subcommand};
use krotov_oct::commands::{self, RunOptions, SharedWriter, EXIT_CONVERGED, EXIT_ERROR};

/// Quantum optimal control with Krotov's method.
#[derive(Debug, Parser)]
#[command(name = "krotov-oct", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize the pulses described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.out_dir`).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Maximum number of iterations (overrides `convergence.max_iterations`).
        #[arg(long)]
        max_iters: Option<usize>,
        /// Worker threads; results do not depend on this.
        #[arg(long, env = "KROTOV_OCT_THREADS")]
        threads: Option<usize>,
        /// Write the pulses of every iteration.
        #[arg(long)]
        store_all_pulses: bool,
    },
    /// Propagate under the guess (or optimized) pulses and write the dynamics.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        use_optimized: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Check a config file without running anything.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let out: SharedWriter = Arc::new(Mutex::new(std::io::stdout()));
    let result = match cli.command {
        Command::Run { config, out_dir, max_iters, threads, store_all_pulses } => {
            if threads == Some(0) {
                eprintln!("error: --threads must be at least 1");
                return ExitCode::from(EXIT_ERROR as u8);
            }
            let opts = RunOptions { out_dir, max_iters, threads, store_all_pulses };
            commands::run(&config, &opts, out).map(|s| s.exit_code)
        }
        Command::Simulate { config, use_optimized, out_dir } => {
            commands::simulate(&config, use_optimized, out_dir.as_deref(), out).map(|_| EXIT_CONVERGED)
        }
        Command::Validate { config } => commands::validate(&config, out).map(|_| EXIT_CONVERGED),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
