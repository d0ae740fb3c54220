use std::process::ExitCode;

use anyhow::Context;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match trajpred::cli::run(std::env::args_os(), &mut stdout).context("trajpred") {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
