mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qus_core::ErrorKind;

use crate::args::{Cli, Command};

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Io => 3,
        ErrorKind::Data => 4,
        ErrorKind::Numeric => 5,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli.command) {
        Ok(report) => {
            // bench always reports JSON
            let body = if cli.json || matches!(cli.command, Command::Bench(_)) {
                serde_json::to_string_pretty(&report.json).expect("report serializes")
            } else {
                report.text
            };
            // a closed pipe is not a failure of the command itself
            let _ = writeln!(std::io::stdout().lock(), "{body}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
