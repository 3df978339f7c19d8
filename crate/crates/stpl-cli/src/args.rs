//! Command-line surface: subcommands, flags, and their mapping onto
//! core configuration types.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stpl_core::datastream::CoordFrame;
use stpl_core::{BbResolution, MonitorConfig};

/// Offline monitor for spatio-temporal perception requirements.
#[derive(Debug, Parser)]
#[command(name = "stpl", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a formula over a stream and report the verdict.
    Run(RunArgs),
    /// Evaluate with both engines and report whether they agree.
    Compare(CompareArgs),
    /// List every frame where an existentially prefixed formula holds.
    Search(SearchArgs),
}

/// Input layout of the `--data` file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    /// Frame-per-row CSV with object attributes.
    #[default]
    Csv,
    /// KITTI tracking label text (one file per sequence).
    Kitti,
}

/// Which evaluation engine answers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    /// The dynamic-programming table monitor; falls back to the
    /// reference evaluator on formulas outside its fragment.
    #[default]
    Dp,
    /// The recursive reference evaluator.
    Ref,
    /// Both engines, cross-checked.
    Both,
}

/// How a frozen variable's box resolves inside spatial terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum BbChoice {
    /// Keep the box recorded at the binding frame.
    #[default]
    Frozen,
    /// Re-resolve the object at every swept frame.
    Current,
}

/// Coordinate frame the stream's boxes live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CoordChoice {
    Image,
    Vehicle,
}

/// Flags shaping how the stream file is loaded.
#[derive(Clone, Debug, Default, Args)]
pub struct StreamOpts {
    /// Input format of --data.
    #[arg(long, value_enum, default_value_t)]
    pub format: DataFormat,

    /// Frame rate. Sets capture times τ(i) = i/fps for KITTI input
    /// (default 10) and overrides stream metadata for CSV input.
    #[arg(long)]
    pub fps: Option<f64>,

    /// Universe extent as WxH (origin-anchored) or x0,y0,x1,y1.
    #[arg(long, value_name = "WxH")]
    pub universe: Option<String>,

    /// Coordinate frame of the boxes.
    #[arg(long, value_enum)]
    pub coord: Option<CoordChoice>,

    /// Mark objects whose occlusion level is LEVEL or higher as sensing
    /// nothing; they stay in the stream but satisfy emptiness atoms.
    #[arg(long, value_name = "LEVEL")]
    pub occluded_empty: Option<i32>,
}

/// Flags shaping how formulas are evaluated.
#[derive(Clone, Debug, Default, Args)]
pub struct EvalOpts {
    /// Box resolution for frozen variables in spatial terms.
    #[arg(long, value_enum, default_value_t)]
    pub bb_resolution: BbChoice,

    /// Keep raw region representations instead of canonicalizing
    /// (diagnostic; representations may grow super-linearly).
    #[arg(long)]
    pub no_canonicalize: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Formula file.
    #[arg(long)]
    pub formula: PathBuf,

    /// Stream file.
    #[arg(long)]
    pub data: PathBuf,

    #[command(flatten)]
    pub stream: StreamOpts,

    #[command(flatten)]
    pub eval: EvalOpts,

    /// Evaluation engine.
    #[arg(long, value_enum, default_value_t)]
    pub engine: EngineChoice,

    /// Report a satisfying assignment for a leading existential chain.
    #[arg(long)]
    pub witness: bool,

    /// Dump every table cell of the run to PATH as JSON lines
    /// (table engine only).
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,

    /// Benchmark mode: monitor these stream prefixes instead of a
    /// single run, e.g. --bench 25,50,100,200.
    #[arg(long, value_delimiter = ',', value_name = "FRAMES")]
    pub bench: Option<Vec<usize>>,

    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Formula file (omit in fuzz mode).
    #[arg(long, required_unless_present = "fuzz")]
    pub formula: Option<PathBuf>,

    /// Stream file (omit in fuzz mode).
    #[arg(long, required_unless_present = "fuzz")]
    pub data: Option<PathBuf>,

    #[command(flatten)]
    pub stream: StreamOpts,

    #[command(flatten)]
    pub eval: EvalOpts,

    /// Fuzz mode: compare the engines on N generated formula/stream
    /// pairs instead of files.
    #[arg(long, value_name = "N", conflicts_with_all = ["formula", "data"])]
    pub fuzz: Option<u64>,

    /// Base seed for fuzz mode; pair k uses seed SEED+k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Formula file; must start with existential quantifiers, after an
    /// optional leading `eventually`.
    #[arg(long)]
    pub formula: PathBuf,

    /// Stream file.
    #[arg(long)]
    pub data: PathBuf,

    #[command(flatten)]
    pub stream: StreamOpts,

    #[command(flatten)]
    pub eval: EvalOpts,

    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EvalOpts {
    /// The table-engine configuration these flags describe.
    pub fn monitor_config(&self) -> MonitorConfig {
        MonitorConfig {
            canonicalize_regions: !self.no_canonicalize,
            bb_resolution: self.bb_resolution.into(),
            ..MonitorConfig::default()
        }
    }
}

impl From<BbChoice> for BbResolution {
    fn from(c: BbChoice) -> Self {
        match c {
            BbChoice::Frozen => BbResolution::Frozen,
            BbChoice::Current => BbResolution::Current,
        }
    }
}

impl From<CoordChoice> for CoordFrame {
    fn from(c: CoordChoice) -> Self {
        match c {
            CoordChoice::Image => CoordFrame::Image,
            CoordChoice::Vehicle => CoordFrame::Vehicle,
        }
    }
}
