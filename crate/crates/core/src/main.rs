use clap::Parser;
use std::process::ExitCode;

use pauli_zero_modes::cli::{run, write_outputs, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|(output, out)| {
        write_outputs(&output, out.as_ref())?;
        Ok(output.success)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
