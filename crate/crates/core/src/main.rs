use std::process::ExitCode;

use clap::Parser;
use entropic::cli_report::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(outcome) => {
            match &outcome.artifact_path {
                Some(path) => println!("{} -> {}", outcome.summary, path.display()),
                None => eprintln!("{}", outcome.summary),
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
