//! `plate-tone` command-line runner.
//!
//! Every command runs a suite of checks, assembles a [`Report`] and writes it
//! as JSON (default) or CSV. Exit codes: 0 when every check passes, 2 when a
//! check fails (the failing records are also printed to stderr), 1 on usage
//! or IO errors.

pub mod config;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

pub use config::{Cli, CommandKind, Format, RunConfig};
pub use report::{emit, render, Report, Summary, Versions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

/// Parses `args`, runs the selected suite and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
        }
    };
    init_threads();
    match RunConfig::resolve(&cli) {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn init_threads() {
    if let Some(k) = plate_tone::worker_threads() {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }
}

/// Runs the suite, emits the report and maps the outcome to an exit code.
pub fn run(config: &RunConfig) -> i32 {
    let report = match suites::execute(config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = emit(&report, config.format, config.out.as_deref()) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    let failing = report.failing_records();
    if failing.is_empty() {
        EXIT_PASS
    } else {
        for (section, r) in failing {
            eprintln!("assertion failed [{section}]: {r}");
        }
        EXIT_ASSERTION
    }
}
