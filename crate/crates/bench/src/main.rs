use std::process::ExitCode;

use clap::Parser;
use log::error;
use multistep_bench::{run, Cli, EXIT_FATAL};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with 2 on usage errors, which would read as a partial failure
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_FATAL as u8);
        }
    };
    let outcome = cli.resolve().and_then(|config| run(&config));
    match outcome {
        Ok(o) => ExitCode::from(o.exit_code() as u8),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FATAL as u8)
        }
    }
}
