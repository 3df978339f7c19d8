//! The versioned JSON report every subcommand emits.
//!
//! One [`Report`] type covers all modes; mode-specific sections are
//! optional fields that serialize only when present. The layout is
//! documented by `schema/report.schema.json`, shipped next to this
//! crate, and the schema's `version` is [`REPORT_VERSION`].

use serde::Serialize;
use stpl_core::{
    BBox, BenchSample, EngineComparison, FormulaStats, MonitorCounters, WitnessBinding,
};

/// Current report layout version.
pub const REPORT_VERSION: u32 = 1;

/// Which subcommand (and sub-mode) produced the report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Run,
    Bench,
    Compare,
    Search,
}

/// The formula as evaluated: canonical text plus size statistics.
#[derive(Clone, Debug, Serialize)]
pub struct FormulaInfo {
    /// Path the formula was read from.
    pub path: String,
    /// Canonical (re-printed) formula text.
    pub source: String,
    pub stats: FormulaStats,
}

/// Summary of the loaded stream.
#[derive(Clone, Debug, Serialize)]
pub struct StreamInfo {
    /// Path the stream was read from.
    pub path: String,
    /// Number of frames.
    pub frames: usize,
    /// Total object records across all frames.
    pub objects: usize,
    /// τ(last) − τ(first); zero for empty streams.
    pub duration_seconds: f64,
    /// Frame rate, when the stream metadata records one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    /// Universe extent all regions are clamped to.
    pub universe: BBox,
}

/// Work counters of a table-engine run (absent for the reference
/// engine, which keeps no counters).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CountersInfo {
    pub frames: usize,
    pub node_evaluations: u64,
    pub region_ops: u64,
}

impl From<&MonitorCounters> for CountersInfo {
    fn from(c: &MonitorCounters) -> Self {
        CountersInfo {
            frames: c.frames,
            node_evaluations: c.node_evaluations,
            region_ops: c.region_ops,
        }
    }
}

/// One frame where a searched formula holds.
#[derive(Clone, Debug, Serialize)]
pub struct SearchHit {
    /// Frame index.
    pub frame: usize,
    /// Capture time τ(frame) in seconds.
    pub time: f64,
    /// Satisfying identifier assignment for the existential prefix.
    pub bindings: Vec<WitnessBinding>,
}

/// Aggregate outcome of fuzz-mode engine comparison.
#[derive(Clone, Debug, Serialize)]
pub struct FuzzInfo {
    /// Base seed; pair `k` used seed `seed + k`.
    pub seed: u64,
    /// Number of generated formula/stream pairs.
    pub cases: u64,
    /// Pairs on which the engines agreed.
    pub agreements: u64,
    /// Disagreeing pairs (at most the first ten), by seed.
    pub disagreements: Vec<FuzzDisagreement>,
}

/// One fuzz pair the engines disagreed on.
#[derive(Clone, Debug, Serialize)]
pub struct FuzzDisagreement {
    /// Seed that regenerates the pair.
    pub seed: u64,
    /// Canonical text of the generated formula.
    pub formula: String,
    pub comparison: EngineComparison,
}

/// The one JSON document every subcommand emits.
#[derive(Debug, Serialize)]
pub struct Report {
    /// Report layout version ([`REPORT_VERSION`]).
    pub version: u32,
    pub mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<FormulaInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream: Option<StreamInfo>,
    /// Engine that produced the verdict: `dp`, `ref`, `both`, or
    /// `dp(fallback=ref)` when the table engine handed off a formula
    /// outside its fragment.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<String>,
    /// The run verdict; agreement for `compare`, "some frame matched"
    /// for `search`, the full-stream verdict for `bench`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<bool>,
    /// Satisfying assignment for a leading existential chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<WitnessBinding>>,
    /// End-to-end wall time of the evaluation, in seconds.
    pub wall_seconds: f64,
    /// Largest region representation seen (table engine only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_region_boxes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counters: Option<CountersInfo>,
    /// Benchmark rows, one per `--bench` prefix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bench: Option<Vec<BenchSample>>,
    /// Engine comparison on a single input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<EngineComparison>,
    /// Fuzz-mode comparison summary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuzz: Option<FuzzInfo>,
    /// Search hits, ascending by frame.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<Vec<SearchHit>>,
}

impl Report {
    /// A report skeleton with every optional section absent.
    pub fn new(mode: Mode) -> Report {
        Report {
            version: REPORT_VERSION,
            mode,
            formula: None,
            stream: None,
            engine: None,
            verdict: None,
            witness: None,
            wall_seconds: 0.0,
            peak_region_boxes: None,
            counters: None,
            bench: None,
            comparison: None,
            fuzz: None,
            search: None,
        }
    }
}
