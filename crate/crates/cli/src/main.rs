use std::process::ExitCode;

use clap::Parser;

use charcoal_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match charcoal_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
