//! `mwlab` command-line front end.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod svg;

use clap::{Parser, Subcommand};
use config::Opts;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "mwlab", version, about = "Matrix weights and convex-set valued maximal operators on dyadic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a power, rotating or identity weight.
    GenWeight(Opts),
    /// Muckenhoupt constant of a weight.
    ApConstant(Opts),
    /// Dyadic maximal function of a set-valued function.
    Maximal(Opts),
    /// John ellipsoid of every cell of a set-valued function.
    John(Opts),
    /// Rubio de Francia iteration of `P_W` with property checks.
    Rdf(Opts),
    /// Factor a weight into `A_1` and `A_inf` parts.
    Factorize(Opts),
    /// Combine two weights through the geometric mean.
    ReverseFactorize(Opts),
    /// Rescaled weight and norm chain for one extrapolation case.
    Extrapolate(Opts),
    /// Hypothesis and conclusion ratios over the built-in weight suite.
    Demo(Opts),
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Solver(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Validation(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Solver(m) => m,
        }
    }
}

impl From<mwlab::Error> for CliError {
    fn from(e: mwlab::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    if let Ok(n) = std::env::var("MWLAB_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                mwlab::limit_threads(n);
            }
            _ => {
                eprintln!("error: MWLAB_THREADS must be a positive integer");
                return ExitCode::from(64);
            }
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::GenWeight(o) => commands::gen_weight(o.resolve()?),
        Command::ApConstant(o) => commands::ap_constant(o.resolve()?),
        Command::Maximal(o) => commands::maximal(o.resolve()?),
        Command::John(o) => commands::john(o.resolve()?),
        Command::Rdf(o) => commands::rdf(o.resolve()?),
        Command::Factorize(o) => commands::factorize(o.resolve()?),
        Command::ReverseFactorize(o) => commands::reverse_factorize(o.resolve()?),
        Command::Extrapolate(o) => commands::extrapolate(o.resolve()?),
        Command::Demo(o) => commands::demo(o.resolve()?),
    }
}
