//! Subcommand implementations: load inputs, evaluate, build the report,
//! choose the exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use stpl_core::datastream::{
    load_csv, load_kitti_tracking, parse_universe, DataStream, MetaOverrides,
};
use stpl_core::formula::FormulaKind;
use stpl_core::ref_eval::{self, EvalConfig};
use stpl_core::synth::fuzz_pair;
use stpl_core::{
    bench_prefixes, compare_engines, monitor_traced, monitor_with, parse, pretty_print, stats,
    Formula, MonitorConfig, MonitorError, MonitorOutcome,
};

use crate::args::{CompareArgs, DataFormat, EngineChoice, EvalOpts, RunArgs, SearchArgs, StreamOpts};
use crate::report::{
    CountersInfo, FormulaInfo, FuzzDisagreement, FuzzInfo, Mode, Report, SearchHit, StreamInfo,
};
use crate::{EXIT_ERROR, EXIT_FALSIFIED, EXIT_SAT};

/// KITTI tracking sequences are captured at 10 Hz.
const KITTI_DEFAULT_FPS: f64 = 10.0;

/// How many disagreeing fuzz pairs the report lists in full.
const MAX_REPORTED_DISAGREEMENTS: usize = 10;

/// A finished subcommand: the report to emit and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub exit: i32,
}

fn verdict_exit(v: bool) -> i32 {
    if v {
        EXIT_SAT
    } else {
        EXIT_FALSIFIED
    }
}

fn load_formula(path: &Path) -> Result<Formula> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading formula {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing formula {}", path.display()))
}

fn load_stream(path: &Path, opts: &StreamOpts) -> Result<DataStream> {
    let overrides = MetaOverrides {
        universe: opts
            .universe
            .as_deref()
            .map(parse_universe)
            .transpose()
            .context("parsing --universe")?,
        coordinate_frame: opts.coord.map(Into::into),
        fps: opts.fps,
    };
    let mut d = match opts.format {
        DataFormat::Csv => load_csv(path, overrides),
        DataFormat::Kitti => {
            let fps = opts.fps.unwrap_or(KITTI_DEFAULT_FPS);
            load_kitti_tracking(path, fps, overrides)
        }
    }
    .with_context(|| format!("loading stream {}", path.display()))?;
    if let Some(level) = opts.occluded_empty {
        d.mark_occluded_empty(level);
    }
    Ok(d)
}

fn formula_info(path: &Path, f: &Formula) -> FormulaInfo {
    FormulaInfo { path: path.display().to_string(), source: pretty_print(f), stats: stats(f) }
}

fn stream_info(path: &Path, d: &DataStream) -> StreamInfo {
    StreamInfo {
        path: path.display().to_string(),
        frames: d.len(),
        objects: (0..d.len()).map(|i| d.ids(i).count()).sum(),
        duration_seconds: if d.is_empty() {
            0.0
        } else {
            d.timestamp(d.len() - 1) - d.timestamp(0)
        },
        fps: d.meta().fps,
        universe: d.universe(),
    }
}

fn eval_config(opts: &EvalOpts) -> EvalConfig {
    EvalConfig { bb_resolution: opts.bb_resolution.into() }
}

/// Table-engine run that distinguishes "declined the formula" from
/// genuine failures.
enum TableRun {
    Done(MonitorOutcome),
    Fallback(String),
}

fn run_table(
    d: &DataStream,
    f: &Formula,
    cfg: &MonitorConfig,
    trace: Option<&Path>,
) -> Result<TableRun> {
    let res = match trace {
        Some(path) => {
            let file = File::create(path)
                .with_context(|| format!("creating trace file {}", path.display()))?;
            let mut sink = BufWriter::new(file);
            let res = monitor_traced(d, f, cfg, &mut sink);
            sink.flush().context("flushing the trace file")?;
            res
        }
        None => monitor_with(d, f, cfg),
    };
    match res {
        Ok(out) => Ok(TableRun::Done(out)),
        Err(MonitorError::Unsupported { reason }) => Ok(TableRun::Fallback(reason)),
        Err(e) => Err(e.into()),
    }
}

pub fn run(a: RunArgs) -> Result<Outcome> {
    let f = load_formula(&a.formula)?;
    let d = load_stream(&a.data, &a.stream)?;
    let cfg = a.eval.monitor_config();

    if let Some(lens) = &a.bench {
        return bench(&a, &d, &f, &cfg, lens);
    }

    let started = Instant::now();
    let mut report = Report::new(Mode::Run);
    report.formula = Some(formula_info(&a.formula, &f));
    report.stream = Some(stream_info(&a.data, &d));

    let verdict = match a.engine {
        EngineChoice::Dp => match run_table(&d, &f, &cfg, a.trace.as_deref())? {
            TableRun::Done(out) => {
                report.engine = Some("dp".into());
                report.peak_region_boxes = Some(out.counters.peak_region_boxes);
                report.counters = Some(CountersInfo::from(&out.counters));
                out.verdict
            }
            TableRun::Fallback(reason) => {
                eprintln!(
                    "note: table engine declined the formula ({reason}); \
                     using the reference evaluator"
                );
                report.engine = Some("dp(fallback=ref)".into());
                ref_eval::satisfies_with(&d, &f, eval_config(&a.eval)).value
            }
        },
        EngineChoice::Ref => {
            if a.trace.is_some() {
                eprintln!("note: --trace applies to the table engine; ignored with --engine ref");
            }
            report.engine = Some("ref".into());
            ref_eval::satisfies_with(&d, &f, eval_config(&a.eval)).value
        }
        EngineChoice::Both => {
            if a.trace.is_some() {
                eprintln!("note: --trace applies to the table engine; ignored with --engine both");
            }
            report.engine = Some("both".into());
            let cmp = compare_engines(&d, &f, &cfg);
            let agree = cmp.agree;
            let verdict = cmp.reference_verdict;
            report.comparison = Some(cmp);
            if !agree {
                // An engine defect, not a property of the input: refuse
                // to pick a side.
                report.wall_seconds = started.elapsed().as_secs_f64();
                eprintln!("error: the engines disagree; see the report's comparison section");
                return Ok(Outcome { report, exit: EXIT_ERROR });
            }
            verdict
        }
    };

    if a.witness {
        // Witness extraction lives in the reference evaluator, whatever
        // engine produced the verdict.
        report.witness = ref_eval::satisfies_with(&d, &f, eval_config(&a.eval)).witness;
    }
    report.verdict = Some(verdict);
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok(Outcome { exit: verdict_exit(verdict), report })
}

fn bench(
    a: &RunArgs,
    d: &DataStream,
    f: &Formula,
    cfg: &MonitorConfig,
    lens: &[usize],
) -> Result<Outcome> {
    if a.engine == EngineChoice::Ref {
        bail!("--bench measures the table engine; drop --engine ref");
    }
    let started = Instant::now();
    let rows = match bench_prefixes(d, f, lens, cfg) {
        Ok(rows) => rows,
        Err(MonitorError::Unsupported { reason }) => {
            bail!("--bench needs a table-supported formula ({reason})")
        }
        Err(e) => return Err(e.into()),
    };
    let mut report = Report::new(Mode::Bench);
    report.formula = Some(formula_info(&a.formula, f));
    report.stream = Some(stream_info(&a.data, d));
    report.engine = Some("dp".into());
    report.verdict = rows.last().map(|r| r.verdict);
    report.peak_region_boxes = rows.iter().map(|r| r.peak_region_boxes).max();
    report.bench = Some(rows);
    report.wall_seconds = started.elapsed().as_secs_f64();
    // No prefixes means nothing to falsify.
    let exit = report.verdict.map_or(EXIT_SAT, verdict_exit);
    Ok(Outcome { report, exit })
}

pub fn compare(a: CompareArgs) -> Result<Outcome> {
    let cfg = a.eval.monitor_config();
    if let Some(cases) = a.fuzz {
        return fuzz_compare(&a, cases, &cfg);
    }
    // Clap enforces both paths unless --fuzz is given.
    let fpath = a.formula.as_deref().expect("clap requires --formula without --fuzz");
    let dpath = a.data.as_deref().expect("clap requires --data without --fuzz");
    let f = load_formula(fpath)?;
    let d = load_stream(dpath, &a.stream)?;

    let started = Instant::now();
    let cmp = compare_engines(&d, &f, &cfg);
    let mut report = Report::new(Mode::Compare);
    report.formula = Some(formula_info(fpath, &f));
    report.stream = Some(stream_info(dpath, &d));
    report.engine = Some("both".into());
    report.verdict = Some(cmp.agree);
    report.comparison = Some(cmp);
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok(Outcome { exit: verdict_exit(report.verdict.unwrap()), report })
}

fn fuzz_compare(a: &CompareArgs, cases: u64, cfg: &MonitorConfig) -> Result<Outcome> {
    let started = Instant::now();
    let mut agreements = 0u64;
    let mut disagreements = Vec::new();
    for k in 0..cases {
        let seed = a.seed.wrapping_add(k);
        let (d, f) = fuzz_pair(seed);
        let cmp = compare_engines(&d, &f, cfg);
        if cmp.agree {
            agreements += 1;
        } else if disagreements.len() < MAX_REPORTED_DISAGREEMENTS {
            disagreements.push(FuzzDisagreement {
                seed,
                formula: pretty_print(&f),
                comparison: cmp,
            });
        }
    }
    let mut report = Report::new(Mode::Compare);
    report.engine = Some("both".into());
    report.verdict = Some(agreements == cases);
    report.fuzz = Some(FuzzInfo { seed: a.seed, cases, agreements, disagreements });
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok(Outcome { exit: verdict_exit(report.verdict.unwrap()), report })
}

/// The formula body `search` anchors at every frame: the input stripped
/// of one optional unwindowed `eventually`, which must expose a leading
/// existential quantifier.
fn searchable_body(f: &Formula) -> Result<&Formula> {
    let inner = match &f.kind {
        FormulaKind::Eventually { interval: None, body } => body.as_ref(),
        _ => f,
    };
    if matches!(inner.kind, FormulaKind::Exists { .. }) {
        Ok(inner)
    } else {
        bail!(
            "search needs an existentially prefixed formula: after an optional \
             leading `eventually`, the formula must start with `exists`; got `{}`",
            pretty_print(f)
        )
    }
}

pub fn search(a: SearchArgs) -> Result<Outcome> {
    let f = load_formula(&a.formula)?;
    let d = load_stream(&a.data, &a.stream)?;
    let body = searchable_body(&f)?;
    let cfg = eval_config(&a.eval);

    let started = Instant::now();
    let mut hits = Vec::new();
    for i in 0..d.len() {
        let v = ref_eval::verdict_at(&d, body, i, cfg);
        if v.value {
            hits.push(SearchHit {
                frame: i,
                time: d.timestamp(i),
                bindings: v.witness.unwrap_or_default(),
            });
        }
    }

    let mut report = Report::new(Mode::Search);
    report.formula = Some(formula_info(&a.formula, &f));
    report.stream = Some(stream_info(&a.data, &d));
    report.engine = Some("ref".into());
    report.verdict = Some(!hits.is_empty());
    report.search = Some(hits);
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok(Outcome { exit: verdict_exit(report.verdict.unwrap()), report })
}
