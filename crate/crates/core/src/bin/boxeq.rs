use std::io::Write;
use std::process::ExitCode;

use boxeq::cli::{execute, write_atomically, Cli, EXIT_CONFIG};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, out) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("boxeq: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match out {
        Some(path) => write_atomically(&path, &text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("boxeq: cannot write output: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
