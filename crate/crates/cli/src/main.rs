use std::process::ExitCode;

use beltrami_cli::{configure_threads, execute, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("{e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    match execute(&cli) {
        Ok(outcome) => {
            for c in outcome.summary.checks.iter().filter(|c| c.hard && !c.pass) {
                eprintln!(
                    "FAIL {}::{} = {} (threshold {:?})",
                    c.module, c.name, c.value, c.threshold
                );
            }
            if !outcome.summary.converged {
                eprintln!("a solve did not converge");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
