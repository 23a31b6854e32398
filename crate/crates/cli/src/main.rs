use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use prophet_cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command: Vec<String> = std::env::args().skip(1).collect();
    let outcome = match run(&cli, &command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    for (path, text) in &outcome.files {
        if let Err(source) = fs::write(path, text) {
            let e = CliError::Write {
                path: path.clone(),
                source,
            };
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    }
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(outcome.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(2);
    }
    ExitCode::from(outcome.exit_code as u8)
}
