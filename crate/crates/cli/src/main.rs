use std::process::ExitCode;

use adiabat_cli::{execute, Cli, RunConfig};
use clap::Parser;

fn main() -> ExitCode {
    let cfg = match RunConfig::from_cli(Cli::parse()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("adiabat: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let code = execute(&cfg, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}
