use std::process::ExitCode;

use chebslide_cli::{configure_threads, error_json, execute, exit_code, Cli};
use clap::Parser;

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    configure_threads(cli.threads);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
