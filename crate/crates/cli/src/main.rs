use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match mammo_cli::run(mammo_cli::Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
