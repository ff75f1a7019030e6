//! Command-line surface for the AM-FM explainability toolkit.
//!
//! Every subcommand merges defaults, an optional `--config` JSON file, and
//! flags (flags win), writes its artifacts, and finishes with a
//! `report.json` that echoes the full effective config; re-running with
//! that config reproduces the outputs byte for byte. `AMFMX_OUT_DIR`
//! redirects the physical output directory without touching the echoed
//! config.
//!
//! Exit codes: 0 on success, 1 for validation or I/O failures, 2 for
//! internal invariant violations.

mod cmd_actmax;
mod cmd_bank;
mod cmd_explain;
mod cmd_synth;
mod cmd_train;
mod common;

use amfmx_core::error::Error;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "amfmx",
    version,
    about = "Multiscale AM-FM image decomposition, prototype search, and local surrogate explanations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a raster into per-scale dominant AM-FM maps and reconstructions.
    Decompose(cmd_bank::DecomposeArgs),
    /// Select the dominant channels of a raster under the SSIM criterion.
    DominantFilters(cmd_bank::DominantArgs),
    /// Render a bank's frequency-coverage picture.
    Coverage(cmd_bank::CoverageArgs),
    /// Search for a class prototype by gradient ascent.
    Actmax(cmd_actmax::ActmaxArgs),
    /// Fit a sparse local surrogate around one instance.
    Explain(cmd_explain::ExplainArgs),
    /// Train the dense classifier or the RBM expert.
    Train(cmd_train::TrainArgs),
    /// Generate synthetic images or datasets.
    Synth(cmd_synth::SynthArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, not failures.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    let outcome = match &cli.command {
        Command::Decompose(args) => cmd_bank::run_decompose(args),
        Command::DominantFilters(args) => cmd_bank::run_dominant(args),
        Command::Coverage(args) => cmd_bank::run_coverage(args),
        Command::Actmax(args) => cmd_actmax::run(args),
        Command::Explain(args) => cmd_explain::run(args),
        Command::Train(args) => cmd_train::run(args),
        Command::Synth(args) => cmd_synth::run(args),
    };

    match outcome {
        Ok(()) => {}
        Err(Error::Internal(message)) => {
            eprintln!("internal invariant violation: {message}");
            std::process::exit(2);
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}
