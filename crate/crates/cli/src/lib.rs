//! `ntd` command line: decompose tensor files, generate synthetic data, run
//! the sweep experiments, complete partially observed tensors, and print the
//! gradient flop model.
//!
//! Every subcommand is deterministic for a fixed `--seed`: report files are
//! byte-identical across runs. Wall-clock fields are written as `0` unless
//! `--benchmark` is passed (timings always print to stdout).

mod args;
mod commands;
mod config;
mod output;
mod runner;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};

/// Parses `argv` and runs the selected subcommand. Returns the process exit
/// code: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (help/version go to stdout).
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Decompose(a) => commands::decompose::run(a),
        Command::Synth(a) => commands::synth::run(a),
        Command::SparsitySweep(a) => commands::sparsity_sweep::run(a),
        Command::NoiseSweep(a) => commands::noise_sweep::run(a),
        Command::Complete(a) => commands::complete::run(a),
        Command::Flops(a) => commands::flops::run(a),
    }
}
