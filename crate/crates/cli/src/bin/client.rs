use std::process::ExitCode;

use clap::Parser;
use tuneblas_cli::client::{self, ClientArgs};

fn main() -> ExitCode {
    let args = ClientArgs::parse();
    match client::run(&args) {
        Ok(outcome) if outcome.all_correct() => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("error: some results disagree with the reference");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
