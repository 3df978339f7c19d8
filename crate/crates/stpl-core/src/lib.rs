//! Offline monitoring for spatio-temporal perception logic.
//!
//! This crate evaluates requirements written in a spatio-temporal logic
//! over recorded perception data streams: sequences of frames, each
//! holding the objects a perception system reported (identifier, class,
//! confidence, bounding box, and optional attributes). Formulas combine
//!
//! * metric/past temporal operators with freeze quantification over time
//!   variables and quantification over object identifiers, and
//! * a spatial term language over bounding-box regions with Boolean set
//!   operators, topological interior/closure, and spatio-temporal
//!   operators (spatial next/until and derived forms).
//!
//! Two engines produce verdicts: [`ref_eval`], a direct recursive
//! evaluator that follows the semantics definitionally, and [`dp`], a
//! dynamic-programming monitor that sweeps the stream backwards with
//! constant-size tables per subformula. The reference engine is the
//! oracle; the DP engine is the production path.
//!
//! The crate is organized bottom-up:
//!
//! * [`spatial`] — exact region algebra of flagged axis-aligned boxes;
//! * [`datastream`] — stream model plus CSV and KITTI tracking loaders;
//! * [`formula`] — AST, parser, printer, validation, rewrites, statistics;
//! * [`functions`] — object functions (class, probability, distance,
//!   area, ratio, visibility, …) with fail-closed identifier resolution;
//! * [`ref_eval`] — reference evaluator and verdict/witness types;
//! * [`dp`] — the table-based monitor, its configuration and counters;
//! * [`synth`] — seeded generators for streams and formulas, used by the
//!   differential test harness, scaling runs, and benchmarks.

pub mod datastream;
pub mod dp;
pub mod formula;
pub mod functions;
pub mod ref_eval;
pub mod spatial;
pub mod synth;

pub use datastream::{DataObject, DataStream, Frame, StreamMeta};
pub use dp::{
    bench_prefixes, compare_engines, monitor, monitor_traced, monitor_with, BenchSample,
    Divergence, EngineComparison, MonitorConfig, MonitorCounters, MonitorError, MonitorOutcome,
    RegionSample,
};
pub use formula::{
    parse, pretty_print, stats, validate_aan, AanViolation, Formula, FormulaStats, ParseError,
};
pub use functions::{BbResolution, Env};
pub use ref_eval::{satisfies, Verdict, WitnessBinding};
pub use spatial::{AnchorPoint, BBox, Crt, Region};
