use std::process::ExitCode;

use clap::Parser;
use levy_white_noise::cli::{execute, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
