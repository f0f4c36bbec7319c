use std::process::ExitCode;

use clap::Parser;
use nhssh_cli::config::{read_config_file, resolve, Cli, SEED_ENV};
use nhssh_cli::{commands, emit};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match cli.config.as_deref().map(read_config_file).transpose() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = match resolve(cli.command, &cli.settings, file.as_ref(), env_seed.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let table = match commands::run(&cfg) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = emit::emit(&table, &cfg) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
