//! Differential checks between the table engine and the reference
//! evaluator over seeded random streams and formulas, plus semantic
//! preservation of the rewriting pass.

use proptest::prelude::*;
use std::collections::BTreeSet;
use stpl_core::formula::{
    desugar, parse, pretty_print, DistArg, FnExpr, FnRhs, Formula, FormulaKind, IntervalSpec,
    IntervalUnit, SpatialTerm, SpatialTermKind,
};
use stpl_core::{compare_engines, synth, MonitorConfig};

const ROUNDS: u64 = 1200;

/// Record which operator families a formula exercises, so the fuzz run
/// can prove it covered the whole grammar.
fn note_coverage(f: &Formula, seen: &mut BTreeSet<&'static str>) {
    match &f.kind {
        FormulaKind::True => {
            seen.insert("true");
        }
        FormulaKind::Not(p) => {
            seen.insert("not");
            note_coverage(p, seen);
        }
        FormulaKind::And(a, b) | FormulaKind::Or(a, b) | FormulaKind::Implies(a, b) => {
            seen.insert("connective");
            note_coverage(a, seen);
            note_coverage(b, seen);
        }
        FormulaKind::Next(p) => {
            seen.insert("next");
            note_coverage(p, seen);
        }
        FormulaKind::WeakNext(p) => {
            seen.insert("wnext");
            note_coverage(p, seen);
        }
        FormulaKind::Previous(p) => {
            seen.insert("prev");
            note_coverage(p, seen);
        }
        FormulaKind::WeakPrevious(p) => {
            seen.insert("wprev");
            note_coverage(p, seen);
        }
        FormulaKind::Always { body, interval } | FormulaKind::Eventually { body, interval } => {
            seen.insert("always/eventually");
            note_interval("always/eventually", interval.as_ref(), seen);
            note_coverage(body, seen);
        }
        FormulaKind::Until { lhs, rhs, interval } | FormulaKind::Release { lhs, rhs, interval } => {
            seen.insert("until/release");
            note_interval("until/release", interval.as_ref(), seen);
            note_coverage(lhs, seen);
            note_coverage(rhs, seen);
        }
        FormulaKind::Since { lhs, rhs } => {
            seen.insert("since");
            note_coverage(lhs, seen);
            note_coverage(rhs, seen);
        }
        FormulaKind::Exists { freeze, body, .. } | FormulaKind::Forall { freeze, body, .. } => {
            seen.insert(if freeze.is_some() { "freeze quantifier" } else { "plain quantifier" });
            note_coverage(body, seen);
        }
        FormulaKind::Freeze { body, .. } => {
            seen.insert("bare freeze");
            note_coverage(body, seen);
        }
        FormulaKind::TimeConstraint { .. } => {
            seen.insert("time constraint");
        }
        FormulaKind::FrameConstraint { .. } => {
            seen.insert("frame constraint");
        }
        FormulaKind::ModuloConstraint { .. } => {
            seen.insert("modulo constraint");
        }
        FormulaKind::IdEquality { .. } => {
            seen.insert("id equality");
        }
        FormulaKind::SpatialExists(t) | FormulaKind::SpatialForall(t) => {
            seen.insert("spatial quantifier");
            note_term(t, seen);
        }
        FormulaKind::FunctionAtom(a) => {
            note_fn(&a.lhs, seen);
            if let FnRhs::Expr { expr, .. } = &a.rhs {
                note_fn(expr, seen);
            }
        }
    }
}

fn note_interval(op: &str, iv: Option<&IntervalSpec>, seen: &mut BTreeSet<&'static str>) {
    let Some(iv) = iv else { return };
    match (op, iv.unit) {
        ("always/eventually", IntervalUnit::Time) => seen.insert("time-window unary"),
        ("always/eventually", IntervalUnit::Frame) => seen.insert("frame-window unary"),
        ("until/release", IntervalUnit::Time) => seen.insert("time-window binary"),
        ("until/release", IntervalUnit::Frame) => seen.insert("frame-window binary"),
        ("spatial until", IntervalUnit::Time) => seen.insert("time-window spatial until"),
        ("spatial until", IntervalUnit::Frame) => seen.insert("frame-window spatial until"),
        (_, IntervalUnit::Time) => seen.insert("time-window spatial"),
        (_, IntervalUnit::Frame) => seen.insert("frame-window spatial"),
    };
}

fn note_term(t: &SpatialTerm, seen: &mut BTreeSet<&'static str>) {
    match &t.kind {
        SpatialTermKind::BBoxOf(_) | SpatialTermKind::EmptySet | SpatialTermKind::Universe => {}
        SpatialTermKind::Complement(a)
        | SpatialTermKind::Interior(a)
        | SpatialTermKind::Closure(a) => {
            seen.insert("region operator");
            note_term(a, seen);
        }
        SpatialTermKind::SpatialNext { body, interval } => {
            seen.insert("spatial next");
            note_interval("spatial next", interval.as_ref(), seen);
            note_term(body, seen);
        }
        SpatialTermKind::SpatialAlways { body, interval }
        | SpatialTermKind::SpatialEventually { body, interval } => {
            seen.insert("spatial always/eventually");
            note_interval("spatial unary", interval.as_ref(), seen);
            note_term(body, seen);
        }
        SpatialTermKind::Intersect(a, b) | SpatialTermKind::Union(a, b) => {
            seen.insert("region operator");
            note_term(a, seen);
            note_term(b, seen);
        }
        SpatialTermKind::SpatialUntil { lhs, rhs, interval }
        | SpatialTermKind::SpatialRelease { lhs, rhs, interval } => {
            seen.insert("spatial until/release");
            note_interval("spatial until", interval.as_ref(), seen);
            note_term(lhs, seen);
            note_term(rhs, seen);
        }
    }
}

fn note_fn(e: &FnExpr, seen: &mut BTreeSet<&'static str>) {
    match e {
        FnExpr::Class(_) => {
            seen.insert("class atom");
        }
        FnExpr::Prob(_) => {
            seen.insert("prob atom");
        }
        FnExpr::Lat(..) | FnExpr::Lon(..) => {
            seen.insert("position atom");
        }
        FnExpr::AreaId(_) | FnExpr::AreaTerm(_) => {
            seen.insert("area atom");
        }
        FnExpr::Empty(_) => {
            seen.insert("empty atom");
        }
        FnExpr::Md(_) => {
            seen.insert("direction atom");
        }
        FnExpr::Dist(a, _, b, _) => {
            seen.insert("distance atom");
            for arg in [a, b] {
                if matches!(arg, DistArg::Universe) {
                    seen.insert("frame-reference distance");
                }
            }
        }
        FnExpr::Visible(..) => {
            seen.insert("visibility atom");
        }
        FnExpr::Ratio(a, b) => {
            seen.insert("ratio atom");
            note_fn(a, seen);
            note_fn(b, seen);
        }
    }
}

/// The two engines agree on every seeded (stream, formula) pair, and the
/// generator exercises every operator family across the run.
#[test]
fn engines_agree_on_seeded_fuzz_pairs() {
    let cfg = MonitorConfig::default();
    let mut seen = BTreeSet::new();
    let mut table_runs = 0usize;
    for seed in 0..ROUNDS {
        let (d, f) = synth::fuzz_pair(seed);
        note_coverage(&f, &mut seen);
        let cmp = compare_engines(&d, &f, &cfg);
        assert!(
            cmp.agree,
            "seed {seed}: engines disagree on `{}` ({:?})",
            pretty_print(&f),
            cmp.divergence,
        );
        if cmp.table_verdict.is_some() {
            table_runs += 1;
        }
    }

    for family in [
        "true",
        "not",
        "connective",
        "next",
        "wnext",
        "prev",
        "wprev",
        "since",
        "always/eventually",
        "until/release",
        "time-window unary",
        "frame-window unary",
        "time-window binary",
        "frame-window binary",
        "freeze quantifier",
        "plain quantifier",
        "bare freeze",
        "time constraint",
        "frame constraint",
        "modulo constraint",
        "id equality",
        "spatial quantifier",
        "region operator",
        "spatial next",
        "spatial always/eventually",
        "spatial until/release",
        "time-window spatial until",
        "frame-window spatial until",
        "class atom",
        "prob atom",
        "position atom",
        "area atom",
        "empty atom",
        "direction atom",
        "distance atom",
        "frame-reference distance",
        "visibility atom",
        "ratio atom",
    ] {
        assert!(seen.contains(family), "fuzz run never generated: {family}");
    }
    // The run must actually exercise the table engine, not fall back on
    // every formula.
    assert!(table_runs > ROUNDS as usize / 2, "table engine ran only {table_runs} times");
}

/// Rewriting a formula into the core fragment never changes its verdict:
/// the reference evaluator agrees with itself across the rewrite, and
/// each form in the table engine's fragment agrees too.
#[test]
fn desugaring_preserves_verdicts_on_both_engines() {
    let cfg = MonitorConfig::default();
    for seed in 0..ROUNDS {
        let (d, f) = synth::fuzz_pair(seed ^ 0x5eed);
        let lowered = desugar(&f);

        let original = compare_engines(&d, &f, &cfg);
        let rewritten = compare_engines(&d, &lowered, &cfg);
        assert!(original.agree, "seed {seed}: engines disagree before the rewrite");
        assert!(rewritten.agree, "seed {seed}: engines disagree after the rewrite");
        assert_eq!(
            original.reference_verdict,
            rewritten.reference_verdict,
            "seed {seed}: rewriting changed the verdict of `{}` (lowered: `{}`)",
            pretty_print(&f),
            pretty_print(&lowered),
        );
    }
}

proptest! {
    /// Printing and re-parsing a generated formula reproduces it node for
    /// node, for any seed.
    #[test]
    fn printed_formulas_parse_back_identically(seed in any::<u64>()) {
        let (_, f) = synth::fuzz_pair(seed);
        let printed = pretty_print(&f);
        let reparsed = parse(&printed)
            .unwrap_or_else(|e| panic!("`{printed}` no longer parses: {e}"));
        prop_assert_eq!(reparsed, f);
    }
}
