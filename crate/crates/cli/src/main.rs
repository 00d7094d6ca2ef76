use std::process::ExitCode;

use alfent_cli::args::Cli;
use alfent_cli::Status;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match alfent_cli::run(&cli) {
        Ok(status) => {
            match &status {
                Status::Success => {}
                Status::VerificationFailed(names) => eprintln!("verification failed: {}", names.join(", ")),
                Status::InvariantViolated(msgs) => {
                    for m in msgs {
                        eprintln!("invariant violated: {m}");
                    }
                }
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
