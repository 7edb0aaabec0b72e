use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = chainboost_cli::Cli::parse();
    match chainboost_cli::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
