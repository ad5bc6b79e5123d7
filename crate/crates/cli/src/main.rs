use std::process::ExitCode;

use quasiflow_cli::{dispatch, parse_config, CliError};

fn main() -> ExitCode {
    let result = parse_config(std::env::args_os(), None).and_then(|cfg| dispatch(&cfg));
    let code = match result {
        Ok(code) => code,
        Err(CliError::Help(text)) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("quasiflow: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
