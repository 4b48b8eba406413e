use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cocache_cli::Cli::parse();
    ExitCode::from(cocache_cli::run(cli).code())
}
