//! The `bt` command-line front end.
//!
//! Every subcommand writes one JSON document to stdout or `--out`. Errors
//! go to stderr as a one-line JSON object, with exit status 2 for usage
//! errors, 3 for data errors and 4 for numerical failures.

mod args;
mod commands;
mod error;
mod io;

use std::ffi::OsString;
use std::io::Write as _;

use clap::Parser;

pub use args::Cli;
pub use error::{CliError, EXIT_DATA, EXIT_NUMERICAL, EXIT_USAGE};

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                // a closed pipe (`bt --help | head`) is not an error
                let _ = write!(std::io::stdout(), "{e}");
                return 0;
            }
            let err = CliError::usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{}", err.to_json());
            err.exit_code()
        }
    }
}

fn execute(cli: Cli) -> error::CliResult<()> {
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(|| commands::dispatch(cli))
}
