#![allow(clippy::needless_range_loop)]

mod args;
mod commands;
mod report;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, OutputArgs};
use commands::{CliError, Outcome};

const EXIT_INPUT: u8 = 1;
const EXIT_SOLVER: u8 = 2;

fn write_csv(path: &Path, rows: &[Vec<String>]) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    for r in rows {
        w.write_record(r).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    w.flush().map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(outcome: &Outcome, out: &OutputArgs) -> Result<(), String> {
    let json = serde_json::to_string_pretty(&outcome.report).map_err(|e| e.to_string())?;
    match &out.out {
        Some(path) => fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{json}").map_err(|e| e.to_string())?;
        }
    }
    if let Some(path) = &out.csv {
        write_csv(path, &outcome.csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let (result, out) = match &cli.command {
        Command::Spectrum(a) => (commands::spectrum(a), &a.output),
        Command::Evolve(a) => (commands::evolve(a), &a.output),
        Command::Convergence(a) => (commands::convergence(a), &a.output),
    };
    match result {
        Ok(mut outcome) => {
            if outcome.failed {
                outcome.report.status = "solver_failure";
            }
            if let Err(e) = emit(&outcome, out) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_INPUT);
            }
            for f in &outcome.report.failures {
                eprintln!("failure: {}", f.error);
            }
            if outcome.failed {
                ExitCode::from(EXIT_SOLVER)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
