//! Library half of the `pscatter` command-line tool.

pub mod commands;
pub mod config;

use clap::Parser;
use commands::{render, run, RunError};
use config::{parse_config, Cli};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Parse, run and write output; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match parse_config(&cli.opts) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("usage error: {e}");
            return EXIT_USAGE;
        }
    };
    let artifact = match run(&cli.command, &cfg) {
        Ok(a) => a,
        Err(RunError::Data(m)) => {
            eprintln!("data error: {m}");
            return EXIT_DATA;
        }
        Err(RunError::Failed(m)) => {
            eprintln!("error: {m}");
            return EXIT_CHECK_FAILED;
        }
    };
    let text = render(&artifact, &cfg);
    match &cli.opts.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                eprintln!("data error: writing {}: {e}", p.display());
                return EXIT_DATA;
            }
        }
        None => print!("{text}"),
    }
    if artifact.passed {
        EXIT_OK
    } else {
        eprintln!("{}: check failed", artifact.command);
        EXIT_CHECK_FAILED
    }
}
