//! `colorsig`: reproduce the signaling-game experiments from the command
//! line. Subcommands cover survey analysis, frontier computation, agent
//! training, single-game inspection, and synthetic survey generation; every
//! run drops a manifest with input digests so outputs can be re-derived.

mod commands;
mod grid;
mod manifest;
mod output;
mod svg;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use colorsig::Error;

#[derive(Debug, Parser)]
#[command(name = "colorsig", version, about)]
struct Cli {
    /// Worker threads for per-language and per-seed fan-out (0 = all cores,
    /// 1 = run sequentially).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Base RNG seed.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,

    /// Directory for output files and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: std::path::PathBuf,

    /// Tabular output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Efficiency/well-formedness points for every survey language at the
    /// requested recursion depths.
    AnalyzeWcs(commands::analyze_wcs::AnalyzeArgs),
    /// Information-theoretic or well-formedness frontier over a chart.
    Frontier(commands::frontier::FrontierArgs),
    /// Train signaling agents with policy-gradient updates.
    Train(commands::train::TrainArgs),
    /// Run one structured signaling game and print the recursion output.
    Game(commands::game::GameArgs),
    /// Generate a synthetic naming survey over the standard chart.
    SynthWcs(commands::synth_wcs::SynthArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    configure_threads(cli.threads);
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn run(cli: &Cli) -> colorsig::Result<()> {
    match &cli.command {
        Command::AnalyzeWcs(args) => commands::analyze_wcs::run(cli, args),
        Command::Frontier(args) => commands::frontier::run(cli, args),
        Command::Train(args) => commands::train::run(cli, args),
        Command::Game(args) => commands::game::run(cli, args),
        Command::SynthWcs(args) => commands::synth_wcs::run(cli, args),
    }
}

fn configure_threads(threads: usize) {
    if threads == 1 {
        colorsig::exec::set_parallel(false);
        return;
    }
    #[cfg(feature = "parallel")]
    if threads > 1 {
        // ignore the error when a global pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    if threads > 1 {
        eprintln!("built without the parallel feature; running sequentially");
    }
}

/// 1 = bad input, 2 = numeric failure inside a computation.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFiniteGradient
        | Error::OutsideRange { .. }
        | Error::NotAJoint(_)
        | Error::AllZeroMeaningFunction
        | Error::NegativeDistortion { .. } => 2,
        _ => 1,
    }
}
