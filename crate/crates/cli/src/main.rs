//! `optpuf`: reproducible batch experiments on simulated optical PUFs.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ConfigError;

#[derive(Parser, Debug)]
#[command(name = "optpuf", version, about = "Modeling attacks on simulated optical PUFs")]
struct Cli {
    /// Worker threads for trial loops (default: all cores).
    #[arg(long, global = true, env = "OPTPUF_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump challenge-response pairs of a seeded PUF.
    Simulate(commands::SimulateArgs),
    /// Fit a model from CRPs and check it on fresh challenges.
    Attack(commands::AttackArgs),
    /// Re-run the PAC check of `attack` on a stored model.
    Evaluate(commands::EvaluateArgs),
    /// Learning curve over a grid of m, N or noise level.
    Sweep(commands::SweepArgs),
    /// Sample-complexity bound for given inputs.
    Bounds(commands::BoundsArgs),
    /// Monte Carlo check of the minimum-eigenvalue tail bound.
    Chernoff(commands::ChernoffArgs),
    /// Least squares against LWE samples with and without reduction mod p.
    LweDemo(commands::LweArgs),
    /// Count of distinguishable reader orientations against the analytic bound.
    Orientations(commands::OrientationArgs),
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<optpuf::Error>() {
            return if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_CONFIG };
        }
    }
    EXIT_FAILURE
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(ConfigError::new("threads must be >= 1").into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Attack(a) => commands::attack_cmd(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Chernoff(a) => commands::chernoff(a),
        Command::LweDemo(a) => commands::lwe_demo(a),
        Command::Orientations(a) => commands::orientations(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
