//! The shipped requirement corpus against its recorded stream: every
//! formula parses, both engines agree with the verdict recorded in the
//! manifest, and the frame-search example reports the documented frames.

use serde::Deserialize;
use std::path::{Path, PathBuf};
use stpl_core::datastream::{load_csv, parse_universe, DataStream, MetaOverrides};
use stpl_core::formula::{parse, Formula, FormulaKind};
use stpl_core::{monitor, ref_eval, Env, MonitorError};

#[derive(Deserialize)]
struct Manifest {
    stream: String,
    runs: Vec<RunEntry>,
    searches: Vec<SearchEntry>,
}

#[derive(Deserialize)]
struct RunEntry {
    formula: String,
    expect: bool,
    universe: Option<String>,
    table_engine: Option<String>,
}

#[derive(Deserialize)]
struct SearchEntry {
    formula: String,
    stream: String,
    frames: Vec<usize>,
    #[serde(default)]
    optional: bool,
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn manifest() -> Manifest {
    let text = std::fs::read_to_string(corpus_dir().join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn load_formula(name: &str) -> Formula {
    let src = std::fs::read_to_string(corpus_dir().join(name)).unwrap();
    parse(&src).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn load_stream(name: &str, universe: Option<&str>) -> DataStream {
    let overrides = MetaOverrides {
        universe: universe.map(|u| parse_universe(u).unwrap()),
        ..MetaOverrides::default()
    };
    load_csv(&corpus_dir().join(name), overrides).unwrap()
}

/// Every manifest entry yields its recorded verdict on the reference
/// evaluator, and the table engine either agrees or — for the entries
/// marked as outside its fragment — reports the unsupported-formula
/// error so callers can fall back.
#[test]
fn manifest_verdicts_hold_on_both_engines() {
    let m = manifest();
    for entry in &m.runs {
        let f = load_formula(&entry.formula);
        let d = load_stream(&m.stream, entry.universe.as_deref());

        let reference = ref_eval::satisfies(&d, &f).value;
        assert_eq!(
            reference, entry.expect,
            "{}: reference verdict diverges from the manifest",
            entry.formula
        );

        match monitor(&d, &f) {
            Ok(outcome) => {
                assert_eq!(
                    entry.table_engine, None,
                    "{}: expected a fallback but the table engine ran",
                    entry.formula
                );
                assert_eq!(
                    outcome.verdict, entry.expect,
                    "{}: table verdict diverges from the manifest",
                    entry.formula
                );
            }
            Err(MonitorError::Unsupported { .. }) => {
                assert_eq!(
                    entry.table_engine.as_deref(),
                    Some("fallback"),
                    "{}: table engine unexpectedly rejected the formula",
                    entry.formula
                );
            }
            Err(e) => panic!("{}: {e}", entry.formula),
        }
    }
}

/// The per-frame search example: stripping the leading `eventually` and
/// evaluating the existential chain frame by frame finds exactly the
/// frames listed in the manifest.
#[test]
fn search_examples_report_the_documented_frames() {
    let m = manifest();
    for entry in &m.searches {
        if entry.optional && !corpus_dir().join(&entry.stream).exists() {
            continue;
        }
        let f = load_formula(&entry.formula);
        let body = match &f.kind {
            FormulaKind::Eventually { body, interval: None } => &**body,
            _ => &f,
        };
        let d = load_stream(&entry.stream, None);
        let hits: Vec<usize> = (0..d.len())
            .filter(|&i| ref_eval::eval(&d, body, i, &Env::new()))
            .collect();
        assert_eq!(hits, entry.frames, "{}: wrong search frames", entry.formula);
    }
}
