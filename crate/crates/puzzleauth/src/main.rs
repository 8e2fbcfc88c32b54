use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use puzzleauth::cli::{execute, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = execute(&cli.command, &mut out);
    let _ = out.flush();
    match result {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::EXIT_CODE)
        }
    }
}
