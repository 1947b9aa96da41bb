use std::io;
use std::process::ExitCode;

use cachecast::cli::{run_cli, CliError};

fn main() -> ExitCode {
    let stdout = io::stdout();
    match run_cli(std::env::args_os(), &mut stdout.lock()) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(CliError::Usage(msg)) => {
            eprintln!("{}", msg.trim_end());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
