//! `vpt`: batch driver for the strong-coupling pipeline.

mod args;
mod commands;
mod config;
mod error;
mod header;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

fn main() -> ExitCode {
    let raw: Vec<_> = std::env::args_os().collect();
    let args = match config::config_path(&raw) {
        Some(path) => {
            let path = std::path::PathBuf::from(path);
            let loaded = std::fs::read_to_string(&path)
                .map_err(|e| CliError::io(&path, e))
                .and_then(|text| config::parse_config(&text, &path));
            match loaded {
                Ok(extra) => config::splice(raw, extra),
                Err(e) => return fail(&e),
            }
        }
        None => raw,
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("vpt: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Validation("--jobs must be positive".into()));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Coefficients(a) => commands::coefficients(a),
        Command::Converge(a) => commands::converge(a),
        Command::Locate(a) => commands::locate(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Constants(a) => {
            let text = commands::constants(a)?;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))
        }
    })
}
