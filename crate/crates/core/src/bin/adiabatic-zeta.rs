use std::path::PathBuf;
use std::process::ExitCode;

use adiabatic_zeta::cli::{self, Overrides};
use clap::{Parser, Subcommand};

/// Batch runner for the stretched-collar determinant experiments.
#[derive(Parser)]
#[command(version, about, after_help = "Thread count: set ADIABATIC_ZETA_THREADS.")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Drop grid radii above this value.
        #[arg(long)]
        rmax: Option<f64>,
        /// Override the experiment tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List the available experiments.
    List,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match cli::threads_from_env() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    match args.command {
        Command::List => {
            print!("{}", cli::list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, rmax, tol } => {
            ExitCode::from(cli::run(&config, &Overrides { out, rmax, tol }) as u8)
        }
    }
}
