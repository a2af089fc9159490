use std::process::ExitCode;

use afortiori_cli::cli::{execute, Cli};
use afortiori_cli::error::{error_line, exit_kind, ExitKind};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let err = afortiori_cli::error::fail(ExitKind::Usage, first);
            eprintln!("{}", error_line(&err));
            return ExitCode::from(ExitKind::Usage.code() as u8);
        }
    };
    match execute(cli) {
        Ok(out) => {
            if !out.is_empty() {
                println!("{}", out.trim_end());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", error_line(&err));
            ExitCode::from(exit_kind(&err).code() as u8)
        }
    }
}
