//! `phasefuse`: spoof-speech-detection pipeline driver.

mod cmd;
mod runmeta;

use clap::{Parser, Subcommand};
use phasefuse_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "phasefuse",
    version,
    about = "Phase-aware spoof speech detection: synthesis, features, entropy analysis, training, evaluation and scoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic harmonic corpus with a manifest.
    Synth(cmd::synth::SynthArgs),
    /// Extract feature maps for a manifest into a cache directory.
    Extract(cmd::extract::ExtractArgs),
    /// Per-frame entropy analysis of magnitude, phase and noise maps.
    Entropy(cmd::entropy::EntropyArgs),
    /// Train a fusion model and write a checkpoint.
    Train(cmd::train::TrainArgs),
    /// Score a manifest with a trained checkpoint.
    Eval(cmd::eval::EvalArgs),
    /// Compute EER / min t-DCF (and per-attack breakdown) from a score file.
    Score(cmd::score::ScoreArgs),
    /// Train and evaluate a framework x pairing x seed experiment matrix.
    Matrix(cmd::matrix::MatrixArgs),
    /// Run built-in gradient checks and metric oracle comparisons.
    Selftest(cmd::selftest::SelftestArgs),
}

/// Exit codes: 0 success, 1 runtime failure, 2 configuration error.
fn exit_code_for(err: &anyhow::Error) -> i32 {
    let config_class = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<CoreError>(),
            Some(
                CoreError::Config(_)
                    | CoreError::Manifest(_)
                    | CoreError::SampleRate { .. }
                    | CoreError::Protocol { .. }
            )
        )
    });
    if config_class {
        2
    } else {
        1
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(args) => cmd::synth::run(args),
        Command::Extract(args) => cmd::extract::run(args),
        Command::Entropy(args) => cmd::entropy::run(args),
        Command::Train(args) => cmd::train::run(args),
        Command::Eval(args) => cmd::eval::run(args),
        Command::Score(args) => cmd::score::run(args),
        Command::Matrix(args) => cmd::matrix::run(args),
        Command::Selftest(args) => cmd::selftest::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code_for(&err));
    }
}
