// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spraydirac::{run, CliError, Command};

#[derive(Parser, Debug)]
#[command(
    name = "spraydirac",
    version,
    about = "Constants of motion for semi-sprays via almost-Dirac structures"
)]
struct Args {
    /// analyze | verify | search | integrate | dirac-check
    command: Command,
    /// Problem file.
    file: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the seed taken from the problem file.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit JSON instead of indented text.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spraydirac: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.file)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.file.display())))?;
    let report = run(args.command, &text, args.seed)?;
    let body = if args.json {
        report.json(true)
    } else {
        report.text(true)
    };
    match &args.out {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| CliError::Internal(format!("{}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}
