//! The `symcap` command line: argument handling, config files, reports and
//! the acceptance suites.

pub mod args;
pub mod commands;
pub mod config;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Format};
use commands::{dispatch, CliError, Settings, EXIT_USAGE};

/// Runs one invocation and returns the exit code. `env_seed` is the value of
/// `$SYMCAP_SEED`, passed in so tests need not touch the process environment.
pub fn run<I, T>(argv: I, env_seed: Option<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match execute(cli, env_seed, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: Cli, env_seed: Option<String>, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let settings = Settings::resolve(&cli.common, env_seed)?;
    let start = Instant::now();
    let mut outcome = dispatch(cli.command, &settings)?;
    outcome.doc.timing_ms = start.elapsed().as_millis() as u64;
    let text = match settings.format {
        Format::Json => outcome.doc.to_json(),
        Format::Csv => report::to_csv(&outcome.rows),
    };
    match &settings.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::usage(format!("writing {}: {e}", path.display())))?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::usage(format!("writing output: {e}")))?,
    }
    Ok(outcome.code)
}
