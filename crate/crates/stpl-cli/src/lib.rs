//! Command-line front end for the spatio-temporal monitoring engine.
//!
//! The `stpl` binary wraps [`stpl_core`] with three subcommands:
//!
//! * `run` — evaluate one formula against one stream and emit a JSON
//!   report (optionally a witness, a table trace, or per-prefix
//!   benchmark rows);
//! * `compare` — run the table engine and the reference evaluator on
//!   the same input (or on seeded fuzz pairs) and report agreement;
//! * `search` — anchor an existentially prefixed formula at every
//!   frame and list the frames (with capture times and identifier
//!   bindings) where it holds.
//!
//! Every subcommand prints one JSON report, to stdout or to `--out`.
//! The report layout is versioned and documented by the JSON Schema in
//! `schema/report.schema.json`. Exit codes depend on the verdict alone:
//! `0` satisfied (agreement, hits found), `1` falsified (disagreement,
//! no hits), `2` error.

pub mod args;
pub mod ops;
pub mod report;

use std::fs;
use std::io::Write;

use anyhow::Context;

use args::{Cli, Command};
use ops::Outcome;

/// Exit status for satisfied runs, agreeing engines, non-empty search.
pub const EXIT_SAT: i32 = 0;
/// Exit status for falsified runs, disagreements, empty search.
pub const EXIT_FALSIFIED: i32 = 1;
/// Exit status for any error: bad flags, unreadable files, parse
/// failures, non-searchable formulas, engine-internal faults.
pub const EXIT_ERROR: i32 = 2;

/// Run one parsed command line to completion: execute the subcommand,
/// emit its report, and return the exit code. Errors print a diagnostic
/// to stderr and map to [`EXIT_ERROR`].
pub fn execute(cli: Cli) -> i32 {
    let (outcome, out) = match cli.command {
        Command::Run(a) => {
            let out = a.out.clone();
            (ops::run(a), out)
        }
        Command::Compare(a) => {
            let out = a.out.clone();
            (ops::compare(a), out)
        }
        Command::Search(a) => {
            let out = a.out.clone();
            (ops::search(a), out)
        }
    };
    match outcome {
        Ok(Outcome { report, exit }) => match emit(&report, out.as_deref()) {
            Ok(()) => exit,
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_ERROR
            }
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn emit(report: &report::Report, out: Option<&std::path::Path>) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(report).context("serializing the report")?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing the report to {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes()).context("writing the report")?,
    }
    Ok(())
}
