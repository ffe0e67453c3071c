use std::process::ExitCode;

use clap::Parser;
use srvar_cli::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match srvar_cli::run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("srvar: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
