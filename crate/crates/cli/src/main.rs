mod cli;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use cli::Cli;
use commands::{exit_code, Session};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Session::new(cli.common).and_then(|s| s.run(&cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("igc: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
