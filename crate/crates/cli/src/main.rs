use std::process::ExitCode;

use clap::Parser;
use lips_cli::{execute, Cli, Env};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match execute(cli, Env::from_process(), &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lips: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
