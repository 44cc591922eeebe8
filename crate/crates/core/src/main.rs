use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use difflab::cli::{run_with_workers, RunConfig};
use difflab::Error;

/// Runs one difflab experiment described by a flat `key = value` configuration file.
#[derive(Debug, Parser)]
#[command(name = "difflab", version)]
struct Args {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV files and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the number of available cores.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match RunConfig::from_file(&args.config, args.seed, args.out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_with_workers(&config, args.workers) {
        Ok(manifest) if manifest.succeeded() => ExitCode::SUCCESS,
        Ok(manifest) => {
            eprintln!("error: {} row(s) could not be computed; see manifest.txt", manifest.row_errors);
            ExitCode::from(1)
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
