use std::panic::AssertUnwindSafe;
use std::process::ExitCode;

use clap::Parser;

use labsim::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(AssertUnwindSafe(|| run(cli))) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(error)) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
        // A panic inside a run is a broken internal invariant, not a usage or
        // I/O problem; the panic hook has already printed the message.
        Err(_) => ExitCode::from(4),
    }
}
