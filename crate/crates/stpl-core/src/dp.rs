//! Table-based monitor: dynamic programming over frames and object-id
//! assignments.
//!
//! The reference evaluator ([`crate::ref_eval`]) recurses into the
//! formula at every frame and re-derives everything from scratch, which
//! is exponential for nested temporal operators. This engine instead
//! compiles the formula into clusters of nodes — one cluster per
//! clock-recording binder — and fills a table per node with one backward
//! sweep per anchor frame, reusing each subresult. Rows are keyed by
//! assignments of objects to the node's free id variables, so quantifiers
//! become reductions over a finished child row.
//!
//! Not every formula fits this scheme. Compilation rejects, with
//! [`MonitorError::Unsupported`]:
//!
//! - formulas whose nesting pattern would require re-anchoring sweeps
//!   inside sweeps (an outer variable used under a nested clock-recording
//!   binder — the same shapes the well-formedness check in
//!   [`crate::formula::validate_aan`] flags);
//! - past operators whose operand looks into the future (or records a
//!   clock), because past operands are re-evaluated frame-locally here.
//!
//! Callers that must handle every formula can fall back to the reference
//! evaluator when they see `Unsupported`; [`compare_engines`] does this
//! bookkeeping for differential testing.

mod compile;
mod engine;

use std::io::{self, Write};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::datastream::DataStream;
use crate::formula::{free_variables, Formula};
use crate::functions::BbResolution;
use crate::ref_eval::{self, EvalConfig};

use engine::Engine;

/// Tuning knobs for [`monitor_with`]. `Default` is the configuration the
/// command-line runner uses.
#[derive(Clone, Debug)]
pub struct MonitorConfig {
    /// Canonicalize region tables after union-like steps. Keeps
    /// representations near the canonical bound at the cost of the
    /// canonicalization sweeps; turning it off exposes raw box growth.
    pub canonicalize_regions: bool,
    /// How boxes of frozen variables resolve inside spatial terms.
    pub bb_resolution: BbResolution,
    /// Evaluate the per-anchor-frame sweeps of inner clusters on a
    /// thread pool. Output is identical to sequential evaluation.
    pub parallel_id_combinations: bool,
    /// Truncate sweeps at the cluster's lookahead horizon instead of the
    /// end of the stream.
    pub horizon_shortcuts: bool,
    /// Log the box count of every spatial-term cell into
    /// [`MonitorCounters::region_size_log`].
    pub record_region_sizes: bool,
    /// Abort with [`MonitorError::BoxBudgetExceeded`] when any produced
    /// region holds more boxes than this.
    pub max_region_boxes: Option<usize>,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            canonicalize_regions: true,
            bb_resolution: BbResolution::default(),
            parallel_id_combinations: false,
            horizon_shortcuts: true,
            record_region_sizes: false,
            max_region_boxes: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum MonitorError {
    /// The formula is outside the fragment this engine evaluates; the
    /// reason says which construct was rejected.
    #[error("formula not supported by the table engine: {reason}")]
    Unsupported { reason: String },
    /// A region grew past [`MonitorConfig::max_region_boxes`].
    #[error("region at frame {frame} holds {boxes} boxes, over the budget of {budget}")]
    BoxBudgetExceeded { frame: usize, boxes: usize, budget: usize },
    #[error("trace output failed: {0}")]
    Trace(#[from] io::Error),
}

/// One spatial-term cell's representation size, recorded when
/// [`MonitorConfig::record_region_sizes`] is on.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RegionSample {
    /// Compiled term index (stable for a given formula).
    pub term: usize,
    /// Sweep frame the cell was computed at.
    pub frame: usize,
    pub boxes: usize,
}

/// Work and memory accounting for one monitor run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct MonitorCounters {
    pub frames: usize,
    /// Table cells filled (one per node, sweep frame, and id assignment).
    pub node_evaluations: u64,
    /// Region-algebra operations performed.
    pub region_ops: u64,
    /// Largest box count of any region produced.
    pub peak_region_boxes: usize,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub region_size_log: Vec<RegionSample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonitorOutcome {
    pub verdict: bool,
    pub counters: MonitorCounters,
}

/// One measurement from [`bench_prefixes`].
#[derive(Clone, Debug, Serialize)]
pub struct BenchSample {
    pub frames: usize,
    pub verdict: bool,
    pub wall_seconds: f64,
    pub node_evaluations: u64,
    pub region_ops: u64,
    pub peak_region_boxes: usize,
}

/// Verdict of this engine against the reference evaluator on the same
/// input; produced by [`compare_engines`].
#[derive(Clone, Debug, Serialize)]
pub struct EngineComparison {
    /// `None` when the formula is outside this engine's fragment.
    pub table_verdict: Option<bool>,
    pub table_error: Option<String>,
    pub reference_verdict: bool,
    /// `true` when both engines agree or only the reference ran.
    pub agree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<Divergence>,
}

/// The smallest disagreeing closed subformula found after a mismatch.
#[derive(Clone, Debug, Serialize)]
pub struct Divergence {
    /// Preorder index of the subformula in the original formula (the
    /// same numbering trace cells use).
    pub subformula_id: usize,
    /// The subformula, pretty-printed.
    pub source: String,
    pub table_verdict: bool,
    pub reference_verdict: bool,
}

/// Evaluate `f` over the full stream with default settings.
pub fn monitor(d: &DataStream, f: &Formula) -> Result<MonitorOutcome, MonitorError> {
    monitor_with(d, f, &MonitorConfig::default())
}

pub fn monitor_with(
    d: &DataStream,
    f: &Formula,
    cfg: &MonitorConfig,
) -> Result<MonitorOutcome, MonitorError> {
    run(d, f, cfg, None)
}

/// Like [`monitor_with`], additionally writing every table cell to
/// `sink` as newline-delimited JSON objects with fields
/// `subformula_id` (preorder index in `f`), `t` (anchor frame), `u`
/// (evaluation frame), `combo` (variable → object id), and `value`.
/// Tracing forces sequential, full-length sweeps so every emitted cell
/// is exact.
pub fn monitor_traced(
    d: &DataStream,
    f: &Formula,
    cfg: &MonitorConfig,
    sink: &mut dyn Write,
) -> Result<MonitorOutcome, MonitorError> {
    run(d, f, cfg, Some(sink))
}

fn run(
    d: &DataStream,
    f: &Formula,
    cfg: &MonitorConfig,
    trace: Option<&mut dyn Write>,
) -> Result<MonitorOutcome, MonitorError> {
    let started = Instant::now();
    let ir = compile::compile(f)?;
    let engine = Engine { d, ir: &ir, cfg, all_ids: d.all_ids().into_iter().collect() };
    let (verdict, mut counters) = engine.run(trace)?;
    counters.wall_seconds = started.elapsed().as_secs_f64();
    Ok(MonitorOutcome { verdict, counters })
}

/// Monitor every listed stream prefix, longest last. Used by the
/// command-line benchmark mode and the scaling tests.
pub fn bench_prefixes(
    d: &DataStream,
    f: &Formula,
    prefix_lens: &[usize],
    cfg: &MonitorConfig,
) -> Result<Vec<BenchSample>, MonitorError> {
    prefix_lens
        .iter()
        .map(|&len| {
            let prefix = d.prefix(len);
            let out = monitor_with(&prefix, f, cfg)?;
            Ok(BenchSample {
                frames: prefix.len(),
                verdict: out.verdict,
                wall_seconds: out.counters.wall_seconds,
                node_evaluations: out.counters.node_evaluations,
                region_ops: out.counters.region_ops,
                peak_region_boxes: out.counters.peak_region_boxes,
            })
        })
        .collect()
}

/// Run both engines and report whether they agree. A formula outside
/// this engine's fragment counts as agreement (only the reference
/// verdict stands). On a mismatch the closed subformulas are re-checked
/// in postorder to pin down the smallest disagreeing one.
pub fn compare_engines(d: &DataStream, f: &Formula, cfg: &MonitorConfig) -> EngineComparison {
    let ref_cfg = EvalConfig { bb_resolution: cfg.bb_resolution };
    let reference_verdict = ref_eval::satisfies_with(d, f, ref_cfg).value;
    match monitor_with(d, f, cfg) {
        Err(e) => EngineComparison {
            table_verdict: None,
            table_error: Some(e.to_string()),
            reference_verdict,
            agree: true,
            divergence: None,
        },
        Ok(out) => {
            let agree = out.verdict == reference_verdict;
            let divergence = if agree { None } else { find_divergence(d, f, cfg, ref_cfg) };
            EngineComparison {
                table_verdict: Some(out.verdict),
                table_error: None,
                reference_verdict,
                agree,
                divergence,
            }
        }
    }
}

fn find_divergence(
    d: &DataStream,
    f: &Formula,
    cfg: &MonitorConfig,
    ref_cfg: EvalConfig,
) -> Option<Divergence> {
    for (id, sub) in compile::postorder_with_ids(f) {
        if !free_variables(sub).is_empty() {
            continue;
        }
        let Ok(out) = monitor_with(d, sub, cfg) else { continue };
        let reference_verdict = ref_eval::satisfies_with(d, sub, ref_cfg).value;
        if out.verdict != reference_verdict {
            return Some(Divergence {
                subformula_id: id,
                source: sub.to_string(),
                table_verdict: out.verdict,
                reference_verdict,
            });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastream::{load_csv_str, MetaOverrides};
    use crate::formula::parse;

    /// Six frames, five objects with churn: id 3 misses frame 4, ids 4–5
    /// appear at frame 3, id 4 changes class at frame 3.
    const FIXTURE: &str = "\
frame,time,id,class,prob,xmin,ymin,xmax,ymax
0,0.0,1,car,0.88,58,151,220,287
0,0.0,2,cyclist,0.75,479,124,690,382
0,0.0,3,pedestrian,0.63,522,130,632,377
0,0.0,4,pedestrian,0.64,861,133,954,329
1,0.04,1,car,0.90,61,152,223,289
1,0.04,2,cyclist,0.74,482,126,693,384
1,0.04,3,pedestrian,0.65,525,132,635,379
1,0.04,4,pedestrian,0.63,863,134,956,330
2,0.08,1,car,0.91,64,153,226,291
2,0.08,2,cyclist,0.76,485,128,696,386
2,0.08,3,pedestrian,0.64,528,134,638,381
2,0.08,4,pedestrian,0.65,865,135,958,331
3,0.12,1,car,0.92,67,154,229,293
3,0.12,2,cyclist,0.77,488,130,699,388
3,0.12,3,pedestrian,0.66,531,136,641,383
3,0.12,4,car,0.58,867,136,960,332
3,0.12,5,pedestrian,0.76,100,200,180,300
4,0.16,1,car,0.93,70,155,232,295
4,0.16,2,cyclist,0.78,491,132,702,390
4,0.16,4,car,0.59,869,137,962,333
4,0.16,5,pedestrian,0.77,104,202,184,302
5,0.2,1,car,0.94,73,156,235,297
5,0.2,2,cyclist,0.79,494,134,705,392
5,0.2,3,pedestrian,0.60,534,138,644,385
5,0.2,4,car,0.60,871,138,964,334
5,0.2,5,pedestrian,0.78,108,204,188,304
";

    fn stream() -> DataStream {
        load_csv_str(FIXTURE, MetaOverrides::default()).expect("fixture parses")
    }

    fn check(src: &str) {
        let d = stream();
        let f = parse(src).unwrap_or_else(|e| panic!("parse {src:?}: {e}"));
        let cmp = compare_engines(&d, &f, &MonitorConfig::default());
        assert_eq!(
            cmp.table_error, None,
            "{src}: expected the table engine to support this formula"
        );
        assert!(
            cmp.agree,
            "{src}: table={:?} reference={} divergence={:?}",
            cmp.table_verdict, cmp.reference_verdict, cmp.divergence
        );
    }

    #[test]
    fn matches_reference_on_propositional_and_temporal_operators() {
        for src in [
            "true",
            "not true",
            "exists id1 . CLASS(id1) == \"car\"",
            "forall id1 . PROB(id1) > 0.5",
            "exists id1 . (CLASS(id1) == \"car\" and PROB(id1) > 0.9)",
            "exists id1 . (CLASS(id1) == \"car\" or CLASS(id1) == \"bus\")",
            "(exists id1 . CLASS(id1) == \"pedestrian\") implies (exists id2 . CLASS(id2) == \"car\")",
            "next exists id1 . CLASS(id1) == \"car\"",
            "wnext false",
            "always next true",
            "eventually forall id1 . PROB(id1) > 0.58",
            "always exists id1 . CLASS(id1) == \"cyclist\"",
            "(exists id1 . CLASS(id1) == \"pedestrian\") until (exists id2 . PROB(id2) > 0.9)",
            "(exists id1 . true) release (exists id2 . PROB(id2) > 0.5)",
            "eventually[2,4]f exists id1 . (CLASS(id1) == \"car\" and PROB(id1) >= 0.93)",
            "always[0,2]f exists id1 . id1 == id1",
            "always[0,0.1]t exists id1 . CLASS(id1) == \"pedestrian\"",
            "eventually[0.1,0.2]t (not (exists id1 . PROB(id1) < 0.59))",
            "true until[1,3]f (exists id1 . PROB(id1) > 0.77)",
            "false release[0,2]f (exists id1 . CLASS(id1) == \"car\")",
            "false release[0,0.08]t (exists id1 . CLASS(id1) == \"cyclist\")",
        ] {
            check(src);
        }
    }

    #[test]
    fn matches_reference_on_freeze_clock_and_id_comparisons() {
        for src in [
            "exists id1 @ x1 . eventually (CTIME - x1 > 0.1 and PROB(id1) > 0.0)",
            "exists id1 @ x1 . always (CFRAME - x1 <= 3 implies PROB(id1) > 0.5)",
            "x1 . eventually ((CFRAME - x1) % 2 == 0 and CFRAME - x1 >= 3)",
            "x1 . always[0,0.3]t (CTIME - x1 < 0.15 or not (exists id1 . CLASS(id1) == \"pedestrian\"))",
            "exists id1 . exists id2 . (id1 != id2 and CLASS(id1) == \"car\" and CLASS(id2) == \"car\")",
            "exists id1 @ x1 . next next exists id2 . id1 == id2",
            "forall id1 . forall id2 . ((CLASS(id1) == \"car\" and CLASS(id2) == \"car\") implies id1 == id2)",
            "exists id1 @ x1 . eventually (CFRAME - x1 == 3 and CLASS(id1) == \"car\")",
        ] {
            check(src);
        }
    }

    #[test]
    fn matches_reference_on_spatial_operators() {
        for src in [
            "exists id1 . SE(BB(id1))",
            "exists id1 . SA(CMPL(BB(id1)) CUP BB(id1))",
            "exists id1 . exists id2 . (id1 != id2 and SE(BB(id1) CAP BB(id2)))",
            "exists id1 . SE(INT(BB(id1)))",
            "exists id1 . not SE(BB(id1) CAP EMPTYSET)",
            "SA(UNIVERSE)",
            "exists id1 . SE(CL(CMPL(BB(id1))))",
            "exists id1 . SE(NEXTS BB(id1))",
            "exists id1 . SE(ALWAYSS[0,2]f BB(id1))",
            "exists id1 . SE(EVENTUALLYS[0,0.1]t BB(id1))",
            "exists id1 . exists id2 . SE(BB(id1) UNTILS BB(id2))",
            "exists id1 . exists id2 . SE(BB(id1) RELEASES BB(id2))",
            "exists id1 . exists id2 . SE(BB(id1) UNTILS[0,3]f BB(id2))",
            "exists id1 . exists id2 . SE(BB(id1) RELEASES[0,2]f BB(id2))",
            "exists id1 . SA(ALWAYSS BB(id1) CUP CMPL(ALWAYSS BB(id1)))",
            "exists id1 . (SE(EVENTUALLYS BB(id1)) and SA(CMPL(BB(id1)) CUP BB(id1)))",
        ] {
            check(src);
        }
    }

    #[test]
    fn matches_reference_on_attribute_atoms() {
        for src in [
            "exists id1 . AREA(id1) > 20000",
            "exists id1 . AREA(BB(id1) CAP BB(id1)) > 20000",
            "exists id1 . exists id2 . RATIO(AREA(id1), AREA(id2)) >= 1.0",
            "exists id1 . (LAT(id1, CT) > 100 and LON(id1, CT) > 200)",
            "exists id1 . exists id2 . DIST(id1, LM, id2, RM) < 300",
            "exists id1 . DIST(id1, CT, EGO, CT) < 500",
            "exists id1 . not EMPTY(id1)",
            "exists id1 . exists id2 . VISIBLE(EGO, CT, id1, id2)",
            "exists id1 . MD(id1) == 0",
            "exists id1 . exists id2 . PROB(id1) >= 0.5 * PROB(id2)",
        ] {
            check(src);
        }
    }

    #[test]
    fn matches_reference_on_past_operators() {
        for src in [
            "eventually prev exists id1 . CLASS(id1) == \"car\"",
            "wprev true",
            "always wprev (exists id1 . PROB(id1) > 0.5)",
            "eventually ((exists id1 . CLASS(id1) == \"car\") since (exists id2 . PROB(id2) > 0.7))",
            "exists id1 @ x1 . eventually (prev (CFRAME - x1 >= 1) and PROB(id1) > 0.0)",
            "eventually (false since (exists id1 . PROB(id1) > 0.92))",
        ] {
            check(src);
        }
    }

    #[test]
    fn rejects_formulas_outside_the_fragment() {
        let d = stream();
        // Outer variable under an inner clock-recording binder.
        let f = parse("exists id1 @ x1 . eventually exists id2 @ x2 . id1 == id2").unwrap();
        let e = monitor(&d, &f).expect_err("nested re-anchoring is unsupported");
        assert!(matches!(e, MonitorError::Unsupported { .. }), "got {e:?}");

        // Future operator inside a past operand.
        let f = parse("eventually prev next true").unwrap();
        let e = monitor(&d, &f).expect_err("future-in-past is unsupported");
        let MonitorError::Unsupported { reason } = &e else {
            panic!("expected Unsupported, got {e:?}");
        };
        assert!(reason.contains("past"), "reason should mention past operands: {reason}");

        // compare_engines degrades to reference-only agreement.
        let cmp = compare_engines(&d, &f, &MonitorConfig::default());
        assert_eq!(cmp.table_verdict, None);
        assert!(cmp.agree);
        assert!(cmp.table_error.is_some());
    }

    #[test]
    fn quantifiers_on_objectless_frames_match_reference() {
        let src = "\
frame,time,id,class,prob,xmin,ymin,xmax,ymax
0,0.0,1,car,0.9,10,10,50,50
1,0.1,,,,,,,
2,0.2,1,car,0.9,12,12,52,52
";
        let d = load_csv_str(src, MetaOverrides::default()).expect("parses");
        assert_eq!(d.len(), 3, "frame 1 exists but holds no objects");
        for (f_src, expected) in [
            ("always exists id1 . true", false),
            ("always forall id1 . false", false),
            ("eventually not (exists id1 . true)", true),
            ("always forall id1 . CLASS(id1) == \"car\"", true),
        ] {
            let f = parse(f_src).unwrap();
            let out = monitor(&d, &f).expect("supported");
            assert_eq!(out.verdict, expected, "{f_src}");
            assert_eq!(
                out.verdict,
                ref_eval::satisfies(&d, &f).value,
                "{f_src}: engines disagree"
            );
        }
    }

    #[test]
    fn horizon_shortcut_does_not_change_verdicts() {
        let d = stream();
        let full = MonitorConfig { horizon_shortcuts: false, ..MonitorConfig::default() };
        let cut = MonitorConfig::default();
        for src in [
            "exists id1 @ x1 . always[0,2]f (CFRAME - x1 <= 2)",
            "x1 . eventually[0,0.1]t (CTIME - x1 >= 0.04)",
            "exists id1 @ x1 . next next (CFRAME - x1 == 2)",
            "exists id1 @ x1 . always[0,0.08]t eventually[0,0.04]t PROB(id1) > 0.5",
        ] {
            let f = parse(src).unwrap();
            let a = monitor_with(&d, &f, &cut).expect("supported").verdict;
            let b = monitor_with(&d, &f, &full).expect("supported").verdict;
            assert_eq!(a, b, "{src}");
            // The shortcut should actually do less work on anchored
            // clusters with finite lookahead.
            let wa = monitor_with(&d, &f, &cut).unwrap().counters.node_evaluations;
            let wb = monitor_with(&d, &f, &full).unwrap().counters.node_evaluations;
            assert!(wa <= wb, "{src}: shortcut did more work ({wa} > {wb})");
        }
    }

    #[test]
    fn raw_region_mode_matches_canonicalized_verdicts() {
        let d = stream();
        let raw = MonitorConfig { canonicalize_regions: false, ..MonitorConfig::default() };
        for src in [
            "exists id1 . exists id2 . SE(BB(id1) UNTILS BB(id2))",
            "exists id1 . SA(CMPL(BB(id1)) CUP BB(id1))",
            "exists id1 . exists id2 . AREA(BB(id1) CUP BB(id2)) > 30000",
        ] {
            let f = parse(src).unwrap();
            let a = monitor(&d, &f).expect("supported").verdict;
            let b = monitor_with(&d, &f, &raw).expect("supported").verdict;
            assert_eq!(a, b, "{src}");
        }
    }

    #[test]
    fn parallel_sweeps_match_sequential() {
        let d = stream();
        let par = MonitorConfig { parallel_id_combinations: true, ..MonitorConfig::default() };
        for src in [
            "exists id1 @ x1 . always (CFRAME - x1 <= 3 implies SE(BB(id1)))",
            "forall id1 @ x1 . eventually[0,0.2]t (PROB(id1) >= 0.58 or CTIME - x1 > 0.1)",
            "x1 . always ((CFRAME - x1) % 2 == 1 implies (exists id1 . SE(BB(id1))))",
        ] {
            let f = parse(src).unwrap();
            let a = monitor(&d, &f).expect("supported");
            let b = monitor_with(&d, &f, &par).expect("supported");
            assert_eq!(a.verdict, b.verdict, "{src}");
            assert_eq!(
                a.counters.node_evaluations, b.counters.node_evaluations,
                "{src}: parallel run did different work"
            );
        }
    }

    #[test]
    fn frozen_box_resolution_mode_changes_vanishing_object_answers() {
        let d = stream();
        // Object 3 is absent at frame 4. Under frozen resolution a
        // variable bound at frame 3 keeps its frame-3 box, so its region
        // never empties; re-resolving per frame it does.
        let f = parse("eventually (exists id1 @ x1 . next (not SE(BB(id1))))").unwrap();
        let frozen = monitor(&d, &f).expect("supported").verdict;
        let current = monitor_with(
            &d,
            &f,
            &MonitorConfig { bb_resolution: BbResolution::Current, ..MonitorConfig::default() },
        )
        .expect("supported")
        .verdict;
        assert!(!frozen, "frozen boxes persist through the gap");
        assert!(current, "re-resolved boxes vanish at frame 4");
        // Both modes still agree with the reference evaluator.
        for mode in [BbResolution::Frozen, BbResolution::Current] {
            let cfg = MonitorConfig { bb_resolution: mode, ..MonitorConfig::default() };
            let cmp = compare_engines(&d, &f, &cfg);
            assert!(cmp.agree, "mode {mode:?}: {cmp:?}");
        }
    }

    #[test]
    fn box_budget_aborts_on_oversized_regions() {
        let d = stream();
        let f = parse("exists id1 . exists id2 . SE(BB(id1) CUP BB(id2))").unwrap();
        let cfg = MonitorConfig {
            canonicalize_regions: false,
            max_region_boxes: Some(1),
            ..MonitorConfig::default()
        };
        let e = monitor_with(&d, &f, &cfg).expect_err("two-box union breaks a budget of one");
        assert!(matches!(e, MonitorError::BoxBudgetExceeded { boxes: 2, budget: 1, .. }), "{e:?}");
    }

    #[test]
    fn trace_emits_one_json_cell_per_table_entry() {
        let d = stream();
        let f = parse("always exists id1 . PROB(id1) > 0.5").unwrap();
        let mut sink = Vec::new();
        let out =
            monitor_traced(&d, &f, &MonitorConfig::default(), &mut sink).expect("supported");
        assert!(out.verdict);
        let text = String::from_utf8(sink).expect("trace is utf-8");
        let mut cells = 0u64;
        let mut saw_root = false;
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).expect("each line is JSON");
            let obj = v.as_object().expect("cell is an object");
            for key in ["subformula_id", "t", "u", "combo", "value"] {
                assert!(obj.contains_key(key), "missing {key} in {line}");
            }
            if obj["subformula_id"] == 0 {
                saw_root = true;
                assert_eq!(obj["t"], 0);
            }
            cells += 1;
        }
        assert!(saw_root, "the root subformula must appear in the trace");
        assert_eq!(cells, out.counters.node_evaluations, "one line per filled cell");
    }

    #[test]
    fn counters_report_work_and_sizes() {
        let d = stream();
        let f = parse("exists id1 . SE(BB(id1) CAP BB(id1))").unwrap();
        let cfg = MonitorConfig { record_region_sizes: true, ..MonitorConfig::default() };
        let out = monitor_with(&d, &f, &cfg).expect("supported");
        assert_eq!(out.counters.frames, 6);
        assert!(out.counters.node_evaluations > 0);
        assert!(out.counters.region_ops > 0);
        assert!(out.counters.peak_region_boxes >= 1);
        assert!(out.counters.wall_seconds >= 0.0);
        assert!(!out.counters.region_size_log.is_empty());
        assert!(out.counters.region_size_log.iter().all(|s| s.frame < 6));
    }

    #[test]
    fn empty_stream_is_falsifying() {
        let d = load_csv_str("frame,time,id,class,prob,xmin,ymin,xmax,ymax\n", MetaOverrides::default());
        // Headers only: no frames at all.
        let d = d.expect("parses");
        assert_eq!(d.len(), 0);
        let f = parse("true").unwrap();
        let out = monitor(&d, &f).expect("supported");
        assert!(!out.verdict, "no frame to anchor at");
    }

    #[test]
    fn prefix_benchmarks_grow_with_the_stream() {
        let d = stream();
        let f = parse("always exists id1 . SE(BB(id1))").unwrap();
        let samples =
            bench_prefixes(&d, &f, &[2, 4, 6], &MonitorConfig::default()).expect("supported");
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[0].frames, 2);
        assert_eq!(samples[2].frames, 6);
        assert!(samples[0].node_evaluations < samples[2].node_evaluations);
        assert!(samples.iter().all(|s| s.verdict));
    }

    #[test]
    fn divergence_search_pins_disagreements_to_a_subformula() {
        // No genuine divergence exists, so exercise the search directly:
        // on an agreeing pair it must find nothing.
        let d = stream();
        let f = parse("(always exists id1 . SE(BB(id1))) and eventually true").unwrap();
        let found = find_divergence(
            &d,
            &f,
            &MonitorConfig::default(),
            EvalConfig::default(),
        );
        assert!(found.is_none(), "{found:?}");
    }
}
