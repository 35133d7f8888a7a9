mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;
use sketchbench::Error;

use crate::args::Cli;
use crate::report::{JsonReport, Timings};

const EXIT_INTERNAL: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_UNVERIFIED: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Singular | Error::NonFinite) => EXIT_INTERNAL,
        Some(_) => EXIT_INVALID,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_INVALID,
        None if err.downcast_ref::<serde_json::Error>().is_some() => EXIT_INVALID,
        None => EXIT_INTERNAL,
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::InvalidParameter("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let mut timings = Timings::default();
    let outcome = commands::dispatch(cli, &mut timings)?;
    let config = serde_json::to_value(cli)?;
    JsonReport::new(cli.command.name(), config, outcome.results, timings).emit(cli.report.as_deref())?;
    Ok(outcome.verified)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("sketchbench: verification failed, see report");
            ExitCode::from(EXIT_UNVERIFIED)
        }
        Err(err) => {
            eprintln!("sketchbench: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
