//! `dcs`: illuminant estimation, benchmarking and synthetic scenes from the
//! command line.

mod benchmark;
mod estimate;
mod format;
mod options;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "dcs", version, about = "Illuminant estimation from derivative colors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the illuminant of one image.
    Estimate(estimate::EstimateArgs),
    /// Run methods over a manifest and write error reports.
    Benchmark(benchmark::BenchmarkArgs),
    /// Render a dichromatic scene and its derivative ratio map.
    Synth(synth::SynthArgs),
}

/// 2 for anything that failed to read or write a file, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>().is_some()
            || matches!(e.downcast_ref::<dcs_core::Error>(), Some(dcs_core::Error::Io { .. }))
    });
    if io {
        2
    } else {
        1
    }
}

/// The error chain joined with ": ", skipping causes the outer message
/// already spells out.
fn message(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => estimate::run(a),
        Command::Benchmark(a) => benchmark::run(a),
        Command::Synth(a) => synth::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
