//! facerx: batch experiments for face-to-prescription models.
//!
//! Subcommands cover the full pipeline: synthesize a planted-signal
//! dataset, train either architecture, evaluate checkpoints, sweep decision
//! thresholds, run the 5-fold protocol, predict for a single image, and
//! expand a dataset offline with affine augmentation.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or
//! checkpoint error, 3 runtime error.

mod commands;
mod config;

use clap::error::ErrorKind;
use clap::Parser;

use facerx_core::Error;

fn main() {
    let cli = match config::Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successful outputs, not usage errors.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    if let Err(err) = commands::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::Data(_) | Error::Checkpoint(_) | Error::Io(_) => 2,
        Error::InvalidShape(_) | Error::ShapeMismatch { .. } => 3,
    }
}
