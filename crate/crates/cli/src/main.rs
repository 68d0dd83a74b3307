use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod bench;
mod dump;
mod error;
mod eval;
mod params;
mod separate;

/// Phase-aware harmonic/percussive source separation.
///
/// Exit codes: 0 success, 1 invalid arguments or inputs, 2 I/O failure,
/// 3 solver divergence.
#[derive(Debug, Parser)]
#[command(name = "phase-hpss", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split a WAV file into harmonic and percussive WAV files.
    Separate(separate::Args),
    /// Score estimated stems against references (BSS-Eval SDR/SIR/SAR).
    Eval(eval::Args),
    /// Run all methods on a seeded synthetic corpus and tabulate the scores.
    Bench(bench::Args),
    /// Write the spectrogram and instantaneous-frequency map of a WAV file
    /// as binary dumps.
    DumpSpec(dump::Args),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are reported through the error path too.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Separate(args) => separate::run(args),
        Command::Eval(args) => eval::run(args),
        Command::Bench(args) => bench::run(args),
        Command::DumpSpec(args) => dump::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
