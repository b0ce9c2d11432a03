//! `plap-curves` command-line front end.
//!
//! Exit codes: 0 success, 1 verification or output failure, 2 invalid
//! parameters or flags, 3 numerical failure.

mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(shared) => commands::analyze(&shared),
        Command::Solve(shared) => commands::solve(&shared),
        Command::Curve {
            shared,
            samples_per_decade,
        } => commands::curve(&shared, samples_per_decade),
        Command::Turns { shared, summary } => commands::turns(&shared, summary.as_deref()),
        Command::Profile {
            shared,
            at,
            points,
            r_min,
        } => commands::profile_cmd(&shared, at, points, r_min),
        Command::Verify {
            tol_scale,
            only,
            serial,
            output,
            format,
        } => commands::verify_cmd(
            tol_scale,
            only.map(Into::into),
            serial,
            output.as_deref(),
            format,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
