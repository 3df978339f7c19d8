//! Perception data streams: frames of classified, tracked objects.
//!
//! A stream is an ordered sequence of frames. Each frame carries a capture
//! time `τ(i)` (strictly increasing) and a map from object identifier to
//! the perception system's report for that object: class label, detection
//! confidence, bounding box, and optional point-cloud/heading attributes.
//! Identifiers are unique within a frame and persist across frames while
//! the tracker keeps the object; evaluation semantics treat an identifier
//! that is absent from a frame as "unknown", failing closed.
//!
//! Class labels are interned case-insensitively into small integer codes;
//! code `0` is reserved for `"none"` (unclassified) so formulas can test
//! "has no class" numerically.
//!
//! Two loaders are provided:
//!
//! * [`load_csv`] — the canonical tabular format
//!   (`frame,time,id,class,prob,xmin,ymin,xmax,ymax[,empty,md,pc_count]`),
//!   with an optional `<file>.meta` sidecar (`key=value` lines) pinning
//!   the universe extent, coordinate frame, and fps;
//! * [`load_kitti_tracking`] — KITTI tracking label files, with `τ(i) =
//!   i / fps`, `DontCare` entries skipped, and the `occluded` field kept
//!   as an auxiliary attribute.
//!
//! When the metadata pins an explicit universe, bounding boxes are clamped
//! to it at load time (detections can overhang the image border by a few
//! pixels; the universe is the hard extent of the coordinate space). With
//! the default universe — the tight hull of all boxes expanded to the
//! origin — no clamping occurs.
//!
//! [`DataStream::to_csv_string`] exports the canonical form; reloading an
//! export (with its sidecar) reproduces the stream field-for-field.

use crate::spatial::BBox;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

/// Errors from loading or validating a stream.
#[derive(Debug, Error)]
pub enum StreamError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("invalid stream: {0}")]
    Validation(String),
    #[error("invalid metadata: {0}")]
    Meta(String),
}

impl StreamError {
    fn parse(line: u64, msg: impl Into<String>) -> Self {
        StreamError::Parse { line, msg: msg.into() }
    }
}

/// Which physical space the coordinates live in. Axes are the same either
/// way (`x` lateral, `y` longitudinal-or-down); the tag records provenance
/// for reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordFrame {
    Image,
    Vehicle,
}

impl fmt::Display for CoordFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordFrame::Image => f.write_str("image"),
            CoordFrame::Vehicle => f.write_str("vehicle"),
        }
    }
}

impl std::str::FromStr for CoordFrame {
    type Err = StreamError;
    fn from_str(s: &str) -> Result<Self, StreamError> {
        match s {
            "image" => Ok(CoordFrame::Image),
            "vehicle" => Ok(CoordFrame::Vehicle),
            other => Err(StreamError::Meta(format!(
                "unknown coordinate frame {other:?} (expected image|vehicle)"
            ))),
        }
    }
}

/// Stream-level metadata: the universe extent (the coordinate space the
/// region algebra complements against), coordinate frame, and frame rate.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamMeta {
    pub universe_extent: BBox,
    pub coordinate_frame: CoordFrame,
    pub fps: Option<f64>,
    /// True when the universe came from metadata rather than the default
    /// tight hull; exactly then boxes were clamped at load.
    pub explicit_universe: bool,
}

/// One tracked, classified object in one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct DataObject {
    /// Track identifier, unique within a frame, stable across frames.
    pub id: u64,
    /// Interned class code; `0` means "none". Resolve via
    /// [`DataStream::class_label`].
    pub class: u32,
    /// Detection confidence in `[0,1]`.
    pub prob: f64,
    /// Bounding box in stream coordinates.
    pub bbox: BBox,
    /// True when the object's bounding volume contains no sensed points.
    pub empty: bool,
    /// Optional signed heading code (moving direction).
    pub md: Option<i32>,
    /// Optional point-cloud size; when present, `empty ⇔ pc_count == 0`.
    pub pc_count: Option<u64>,
    /// Optional occlusion level (KITTI `occluded` column).
    pub occ: Option<i32>,
}

impl DataObject {
    /// A minimal object with just the perception-core fields; optional
    /// attributes start absent.
    pub fn new(id: u64, class: u32, prob: f64, bbox: BBox) -> Self {
        DataObject { id, class, prob, bbox, empty: false, md: None, pc_count: None, occ: None }
    }
}

/// One frame: capture time plus the objects reported in it, keyed by id.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub time: f64,
    pub objects: BTreeMap<u64, DataObject>,
}

/// Case-insensitive label interner with `"none"` pinned at code 0.
#[derive(Clone, Debug, Default)]
struct ClassTable {
    names: Vec<String>,
    by_name: HashMap<String, u32>,
}

impl ClassTable {
    fn new() -> Self {
        let mut t = ClassTable::default();
        t.intern("none");
        t
    }

    fn intern(&mut self, name: &str) -> u32 {
        let key = name.to_ascii_lowercase();
        if let Some(&code) = self.by_name.get(&key) {
            return code;
        }
        let code = self.names.len() as u32;
        self.names.push(key.clone());
        self.by_name.insert(key, code);
        code
    }

    fn code(&self, name: &str) -> Option<u32> {
        self.by_name.get(&name.to_ascii_lowercase()).copied()
    }

    fn label(&self, code: u32) -> Option<&str> {
        self.names.get(code as usize).map(String::as_str)
    }
}

/// A validated, immutable perception stream.
///
/// Frames are contiguous `0..n-1` with strictly increasing timestamps.
/// The stream is safe to share read-only across threads.
#[derive(Clone, Debug)]
pub struct DataStream {
    frames: Vec<Frame>,
    meta: StreamMeta,
    classes: ClassTable,
}

impl DataStream {
    /// Number of frames `|D|`.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    /// The frame at `i`. Panics when `i` is out of range.
    pub fn frame(&self, i: usize) -> &Frame {
        &self.frames[i]
    }

    pub fn meta(&self) -> &StreamMeta {
        &self.meta
    }

    /// The universe box complements are taken against.
    pub fn universe(&self) -> BBox {
        self.meta.universe_extent
    }

    /// The object with identifier `id` in frame `i`, if reported there.
    /// Panics when `i` is out of range.
    pub fn retrieve(&self, i: usize, id: u64) -> Option<&DataObject> {
        self.frames[i].objects.get(&id)
    }

    /// Identifiers reported in frame `i`, ascending. Panics when `i` is
    /// out of range.
    pub fn ids(&self, i: usize) -> impl Iterator<Item = u64> + '_ {
        self.frames[i].objects.keys().copied()
    }

    /// Capture time `τ(i)`. Panics when `i` is out of range.
    pub fn timestamp(&self, i: usize) -> f64 {
        self.frames[i].time
    }

    /// Every identifier seen anywhere in the stream, ascending.
    pub fn all_ids(&self) -> BTreeSet<u64> {
        self.frames.iter().flat_map(|f| f.objects.keys().copied()).collect()
    }

    /// A copy truncated to the first `len` frames (clamped to the stream
    /// length). Metadata and the class table carry over unchanged; useful
    /// for measuring how cost grows with stream length.
    pub fn prefix(&self, len: usize) -> DataStream {
        DataStream {
            frames: self.frames[..len.min(self.frames.len())].to_vec(),
            meta: self.meta.clone(),
            classes: self.classes.clone(),
        }
    }

    /// Mark every object whose occlusion level is `level` or higher as
    /// sensing nothing (`empty = true`). The objects stay in the stream
    /// and in quantifier domains; only the emptiness flag changes. This
    /// turns tracking labels into streams where "the box went blind" is
    /// expressible, e.g. for hunting mislabeled occlusions.
    pub fn mark_occluded_empty(&mut self, level: i32) {
        for frame in &mut self.frames {
            for obj in frame.objects.values_mut() {
                if obj.occ.is_some_and(|o| o >= level) {
                    obj.empty = true;
                }
            }
        }
    }

    /// The code for a class label, if any object carries it.
    pub fn class_code(&self, label: &str) -> Option<u32> {
        self.classes.code(label)
    }

    /// The label for a class code.
    pub fn class_label(&self, code: u32) -> Option<&str> {
        self.classes.label(code)
    }

    /// Canonical CSV export (always the full 12-column schema; absent
    /// optional attributes stay blank; objectless frames emit a marker
    /// row with a blank id so the frame survives a round trip).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("frame,time,id,class,prob,xmin,ymin,xmax,ymax,empty,md,pc_count\n");
        for f in &self.frames {
            if f.objects.is_empty() {
                let _ = writeln!(out, "{},{},,,,,,,,,,", f.index, f.time);
                continue;
            }
            for obj in f.objects.values() {
                let label = self.classes.label(obj.class).unwrap_or("none");
                let md = obj.md.map(|v| v.to_string()).unwrap_or_default();
                let pc = obj.pc_count.map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    f.index,
                    f.time,
                    obj.id,
                    label,
                    obj.prob,
                    obj.bbox.x_lo,
                    obj.bbox.y_lo,
                    obj.bbox.x_hi,
                    obj.bbox.y_hi,
                    if obj.empty { 1 } else { 0 },
                    md,
                    pc
                );
            }
        }
        out
    }

    /// Write the canonical CSV plus a `<path>.meta` sidecar pinning the
    /// resolved metadata, so a reload reproduces this stream exactly.
    pub fn save_csv(&self, path: &Path) -> Result<(), StreamError> {
        std::fs::write(path, self.to_csv_string())?;
        let u = self.meta.universe_extent;
        let mut meta = String::new();
        if u.x_lo == 0.0 && u.y_lo == 0.0 {
            let _ = writeln!(meta, "universe={}x{}", u.x_hi, u.y_hi);
        } else {
            let _ = writeln!(meta, "universe={},{},{},{}", u.x_lo, u.y_lo, u.x_hi, u.y_hi);
        }
        let _ = writeln!(meta, "frame={}", self.meta.coordinate_frame);
        if let Some(fps) = self.meta.fps {
            let _ = writeln!(meta, "fps={fps}");
        }
        std::fs::write(sidecar_path(path), meta)?;
        Ok(())
    }
}

/// Metadata overrides, merged (highest precedence first) from caller
/// flags, the sidecar file, and built-in defaults.
#[derive(Clone, Copy, Debug, Default)]
pub struct MetaOverrides {
    pub universe: Option<BBox>,
    pub coordinate_frame: Option<CoordFrame>,
    pub fps: Option<f64>,
}

impl MetaOverrides {
    /// `self` wins over `fallback` field-by-field.
    pub fn or(self, fallback: MetaOverrides) -> MetaOverrides {
        MetaOverrides {
            universe: self.universe.or(fallback.universe),
            coordinate_frame: self.coordinate_frame.or(fallback.coordinate_frame),
            fps: self.fps.or(fallback.fps),
        }
    }

    /// Parse sidecar text: `key=value` lines, `#` comments.
    /// Keys: `universe=WxH` or `universe=x0,y0,x1,y1`; `frame=image|vehicle`;
    /// `fps=R`.
    pub fn parse(text: &str) -> Result<MetaOverrides, StreamError> {
        let mut ov = MetaOverrides::default();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(StreamError::Meta(format!("expected key=value, got {line:?}")));
            };
            match key.trim() {
                "universe" => ov.universe = Some(parse_universe(value.trim())?),
                "frame" => ov.coordinate_frame = Some(value.trim().parse()?),
                "fps" => {
                    let fps: f64 = value
                        .trim()
                        .parse()
                        .map_err(|_| StreamError::Meta(format!("bad fps {value:?}")))?;
                    if !(fps > 0.0) {
                        return Err(StreamError::Meta(format!("fps must be positive, got {fps}")));
                    }
                    ov.fps = Some(fps);
                }
                other => return Err(StreamError::Meta(format!("unknown metadata key {other:?}"))),
            }
        }
        Ok(ov)
    }
}

/// Parse `WxH` (origin-anchored) or `x0,y0,x1,y1`.
pub fn parse_universe(s: &str) -> Result<BBox, StreamError> {
    let nums: Vec<&str> = if s.contains(',') {
        s.split(',').collect()
    } else {
        s.split(['x', 'X', '×']).collect()
    };
    let parse = |t: &str| -> Result<f64, StreamError> {
        t.trim().parse().map_err(|_| StreamError::Meta(format!("bad universe component {t:?}")))
    };
    let b = match nums.as_slice() {
        [w, h] => BBox::closed(0.0, 0.0, parse(w)?, parse(h)?),
        [x0, y0, x1, y1] => BBox::closed(parse(x0)?, parse(y0)?, parse(x1)?, parse(y1)?),
        _ => {
            return Err(StreamError::Meta(format!(
                "universe must be WxH or x0,y0,x1,y1, got {s:?}"
            )))
        }
    };
    if !(b.x_lo < b.x_hi && b.y_lo < b.y_hi) {
        return Err(StreamError::Meta(format!("universe must have positive extent, got {s:?}")));
    }
    Ok(b)
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta");
    std::path::PathBuf::from(os)
}

/// Incrementally assembles and validates a stream. Used by the loaders
/// and by the synthetic-stream generators.
pub struct StreamBuilder {
    frames: Vec<Frame>,
    classes: ClassTable,
    overrides: MetaOverrides,
}

impl Default for StreamBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl StreamBuilder {
    pub fn new() -> Self {
        StreamBuilder {
            frames: Vec::new(),
            classes: ClassTable::new(),
            overrides: MetaOverrides::default(),
        }
    }

    pub fn with_overrides(mut self, overrides: MetaOverrides) -> Self {
        self.overrides = overrides;
        self
    }

    /// Intern a class label (case-insensitive) and return its code.
    pub fn class(&mut self, label: &str) -> u32 {
        self.classes.intern(label)
    }

    /// Append the next frame. Frames must be pushed in index order with
    /// strictly increasing times; object ids must be unique per frame.
    pub fn push_frame(&mut self, time: f64, objects: Vec<DataObject>) -> Result<(), StreamError> {
        let index = self.frames.len();
        if let Some(prev) = self.frames.last() {
            if time <= prev.time {
                return Err(StreamError::Validation(format!(
                    "timestamps must strictly increase: τ({index}) = {time} after {}",
                    prev.time
                )));
            }
        }
        let mut map = BTreeMap::new();
        for obj in objects {
            validate_object(index, &obj)?;
            let id = obj.id;
            if map.insert(id, obj).is_some() {
                return Err(StreamError::Validation(format!(
                    "duplicate object id in frame {index} (id {id})"
                )));
            }
        }
        self.frames.push(Frame { index, time: time_checked(index, time)?, objects: map });
        Ok(())
    }

    /// Validate, resolve metadata, clamp boxes if the universe is
    /// explicit, and freeze into a [`DataStream`].
    pub fn finish(self) -> Result<DataStream, StreamError> {
        let StreamBuilder { mut frames, classes, overrides } = self;
        let explicit_universe = overrides.universe.is_some();
        let universe_extent = match overrides.universe {
            Some(u) => u.all_closed(),
            None => default_universe(&frames),
        };
        if explicit_universe {
            for frame in &mut frames {
                for obj in frame.objects.values_mut() {
                    let clamped = obj.bbox.clamp_to(&universe_extent);
                    obj.bbox = if clamped.is_empty() {
                        // A fully-outside detection degenerates to the
                        // nearest border point rather than vanishing.
                        let x = obj.bbox.x_lo.clamp(universe_extent.x_lo, universe_extent.x_hi);
                        let y = obj.bbox.y_lo.clamp(universe_extent.y_lo, universe_extent.y_hi);
                        BBox::closed(x, y, x, y)
                    } else {
                        clamped
                    };
                }
            }
        }
        let meta = StreamMeta {
            universe_extent,
            coordinate_frame: overrides.coordinate_frame.unwrap_or(CoordFrame::Image),
            fps: overrides.fps,
            explicit_universe,
        };
        Ok(DataStream { frames, meta, classes })
    }
}

fn time_checked(index: usize, time: f64) -> Result<f64, StreamError> {
    if !time.is_finite() || time < 0.0 {
        return Err(StreamError::Validation(format!(
            "frame {index} has invalid timestamp {time}"
        )));
    }
    Ok(time)
}

fn validate_object(frame: usize, obj: &DataObject) -> Result<(), StreamError> {
    if !(0.0..=1.0).contains(&obj.prob) {
        return Err(StreamError::Validation(format!(
            "frame {frame} id {}: prob {} outside [0,1]",
            obj.id, obj.prob
        )));
    }
    let b = &obj.bbox;
    if !(b.x_lo <= b.x_hi && b.y_lo <= b.y_hi)
        || !(b.x_lo.is_finite() && b.x_hi.is_finite() && b.y_lo.is_finite() && b.y_hi.is_finite())
    {
        return Err(StreamError::Validation(format!(
            "frame {frame} id {}: malformed bounding box {b:?}",
            obj.id
        )));
    }
    if let Some(pc) = obj.pc_count {
        if obj.empty != (pc == 0) {
            return Err(StreamError::Validation(format!(
                "frame {frame} id {}: empty={} contradicts pc_count={pc}",
                obj.id, obj.empty
            )));
        }
    }
    Ok(())
}

/// Tight hull of all boxes, expanded to include the origin; at least 1×1.
fn default_universe(frames: &[Frame]) -> BBox {
    let mut x_lo: f64 = 0.0;
    let mut y_lo: f64 = 0.0;
    let mut x_hi: f64 = 0.0;
    let mut y_hi: f64 = 0.0;
    for f in frames {
        for obj in f.objects.values() {
            x_lo = x_lo.min(obj.bbox.x_lo);
            y_lo = y_lo.min(obj.bbox.y_lo);
            x_hi = x_hi.max(obj.bbox.x_hi);
            y_hi = y_hi.max(obj.bbox.y_hi);
        }
    }
    if x_hi - x_lo < 1.0 {
        x_hi = x_lo + 1.0;
    }
    if y_hi - y_lo < 1.0 {
        y_hi = y_lo + 1.0;
    }
    BBox::closed(x_lo, y_lo, x_hi, y_hi)
}

/// Load the canonical CSV format from `path`, honouring a `<path>.meta`
/// sidecar if present; `overrides` (e.g. command-line flags) win over the
/// sidecar.
pub fn load_csv(path: &Path, overrides: MetaOverrides) -> Result<DataStream, StreamError> {
    let text = std::fs::read_to_string(path)?;
    let sidecar = sidecar_path(path);
    let from_sidecar = if sidecar.exists() {
        MetaOverrides::parse(&std::fs::read_to_string(sidecar)?)?
    } else {
        MetaOverrides::default()
    };
    load_csv_str(&text, overrides.or(from_sidecar))
}

/// Load the canonical CSV format from a string (no sidecar discovery).
pub fn load_csv_str(text: &str, overrides: MetaOverrides) -> Result<DataStream, StreamError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let Some((_, header)) = lines.next() else {
        return Err(StreamError::parse(1, "missing header"));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let required = ["frame", "time", "id", "class", "prob", "xmin", "ymin", "xmax", "ymax"];
    let optional = ["empty", "md", "pc_count"];
    if cols.len() < required.len()
        || cols[..required.len()] != required
        || cols.len() > required.len() + optional.len()
        || !cols[required.len()..].iter().zip(optional).all(|(c, o)| *c == o)
    {
        return Err(StreamError::parse(
            1,
            format!("header must be frame,time,id,class,prob,xmin,ymin,xmax,ymax[,empty,md,pc_count], got {header:?}"),
        ));
    }
    let ncols = cols.len();

    // Collect rows grouped by frame, then validate contiguity.
    struct Row {
        line: u64,
        time: f64,
        object: Option<(String, DataObject)>,
    }
    let mut by_frame: BTreeMap<usize, Vec<Row>> = BTreeMap::new();
    for (line, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != ncols && fields.len() != 12 {
            return Err(StreamError::parse(
                line,
                format!("expected {ncols} fields, got {}", fields.len()),
            ));
        }
        let field = |i: usize| fields.get(i).copied().unwrap_or("");
        let frame: usize = field(0)
            .parse()
            .map_err(|_| StreamError::parse(line, format!("bad frame index {:?}", field(0))))?;
        let time: f64 = field(1)
            .parse()
            .map_err(|_| StreamError::parse(line, format!("bad time {:?}", field(1))))?;
        let object = if field(2).is_empty() {
            None // objectless-frame marker row
        } else {
            let id: u64 = field(2)
                .parse()
                .map_err(|_| StreamError::parse(line, format!("bad id {:?}", field(2))))?;
            let class = field(3).to_string();
            let prob: f64 = field(4)
                .parse()
                .map_err(|_| StreamError::parse(line, format!("bad prob {:?}", field(4))))?;
            let coord = |i: usize| -> Result<f64, StreamError> {
                field(i)
                    .parse()
                    .map_err(|_| StreamError::parse(line, format!("bad coordinate {:?}", field(i))))
            };
            let bbox = BBox::closed(coord(5)?, coord(6)?, coord(7)?, coord(8)?);
            let empty = match field(9) {
                "" => false,
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(StreamError::parse(line, format!("bad empty flag {other:?}"))),
            };
            let md = match field(10) {
                "" => None,
                s => Some(
                    s.parse::<i32>()
                        .map_err(|_| StreamError::parse(line, format!("bad md {s:?}")))?,
                ),
            };
            let pc_count = match field(11) {
                "" => None,
                s => Some(
                    s.parse::<u64>()
                        .map_err(|_| StreamError::parse(line, format!("bad pc_count {s:?}")))?,
                ),
            };
            let mut obj = DataObject::new(id, 0, prob, bbox);
            obj.empty = empty;
            obj.md = md;
            obj.pc_count = pc_count;
            Some((class, obj))
        };
        by_frame.entry(frame).or_default().push(Row { line, time, object });
    }

    let mut builder = StreamBuilder::new().with_overrides(overrides);
    for (expected, (&frame, rows)) in by_frame.iter().enumerate() {
        if frame != expected {
            return Err(StreamError::Validation(format!(
                "frame indices must be contiguous from 0; missing frame {expected}"
            )));
        }
        let time = rows[0].time;
        let mut objects = Vec::with_capacity(rows.len());
        for row in rows {
            if row.time != time {
                return Err(StreamError::parse(
                    row.line,
                    format!("frame {frame} has conflicting times {time} and {}", row.time),
                ));
            }
            if let Some((class, mut obj)) = row.object.clone() {
                obj.class = builder.class(&class);
                objects.push(obj);
            }
        }
        builder.push_frame(time, objects)?;
    }
    builder.finish()
}

/// Load a KITTI tracking label file. `τ(i) = i / fps`; the frame count is
/// the highest frame index seen (including `DontCare` entries), and
/// frames without labels become objectless frames.
pub fn load_kitti_tracking(
    path: &Path,
    fps: f64,
    overrides: MetaOverrides,
) -> Result<DataStream, StreamError> {
    let text = std::fs::read_to_string(path)?;
    load_kitti_str(&text, fps, overrides)
}

/// [`load_kitti_tracking`] over in-memory text.
pub fn load_kitti_str(
    text: &str,
    fps: f64,
    overrides: MetaOverrides,
) -> Result<DataStream, StreamError> {
    if !(fps > 0.0) {
        return Err(StreamError::Meta(format!("fps must be positive, got {fps}")));
    }
    let mut max_frame: Option<usize> = None;
    let mut rows: BTreeMap<usize, Vec<(String, DataObject)>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !(17..=18).contains(&fields.len()) {
            return Err(StreamError::parse(
                line,
                format!("expected 17 or 18 whitespace-separated fields, got {}", fields.len()),
            ));
        }
        let frame: usize = fields[0]
            .parse()
            .map_err(|_| StreamError::parse(line, format!("bad frame {:?}", fields[0])))?;
        max_frame = Some(max_frame.map_or(frame, |m: usize| m.max(frame)));
        let kind = fields[2];
        if kind == "DontCare" {
            continue;
        }
        let track: i64 = fields[1]
            .parse()
            .map_err(|_| StreamError::parse(line, format!("bad track id {:?}", fields[1])))?;
        if track < 0 {
            return Err(StreamError::parse(line, format!("negative track id {track}")));
        }
        let num = |idx: usize| -> Result<f64, StreamError> {
            fields[idx]
                .parse()
                .map_err(|_| StreamError::parse(line, format!("bad number {:?}", fields[idx])))
        };
        let occ = num(4)? as i32;
        let bbox = BBox::closed(num(6)?, num(7)?, num(8)?, num(9)?);
        let prob = if fields.len() == 18 { num(17)? } else { 1.0 };
        let mut obj = DataObject::new(track as u64, 0, prob, bbox);
        obj.occ = Some(occ);
        rows.entry(frame).or_default().push((kind.to_string(), obj));
    }
    let mut builder = StreamBuilder::new().with_overrides(MetaOverrides {
        fps: Some(fps),
        ..Default::default()
    }
    .or(overrides));
    if let Some(max_frame) = max_frame {
        for frame in 0..=max_frame {
            let objects = rows
                .remove(&frame)
                .unwrap_or_default()
                .into_iter()
                .map(|(class, mut obj)| {
                    obj.class = builder.class(&class);
                    obj
                })
                .collect();
            builder.push_frame(frame as f64 / fps, objects)?;
        }
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
frame,time,id,class,prob,xmin,ymin,xmax,ymax
0,0,1,car,0.88,58,151,220,287
0,0,2,Cyclist,0.75,479,124,690,382
1,0.04,1,car,0.88,61,152,217,283
";

    #[test]
    fn loads_and_indexes_a_small_stream() {
        let d = load_csv_str(SMALL, MetaOverrides::default()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.ids(0).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(d.timestamp(1), 0.04);
        let cyc = d.retrieve(0, 2).unwrap();
        assert_eq!(d.class_label(cyc.class), Some("cyclist"));
        assert_eq!(cyc.prob, 0.75);
        assert!(d.retrieve(1, 2).is_none());
        assert_eq!(d.retrieve(0, 1).unwrap().bbox, BBox::closed(58.0, 151.0, 220.0, 287.0));
    }

    #[test]
    fn header_only_gives_empty_stream() {
        let d = load_csv_str("frame,time,id,class,prob,xmin,ymin,xmax,ymax\n", MetaOverrides::default())
            .unwrap();
        assert_eq!(d.len(), 0);
        // Degenerate default universe still has positive extent.
        assert!(d.universe().area() >= 1.0);
    }

    #[test]
    fn duplicate_id_in_frame_is_rejected() {
        let text = "frame,time,id,class,prob,xmin,ymin,xmax,ymax\n0,0,1,car,0.5,0,0,1,1\n0,0,1,car,0.6,2,2,3,3\n";
        let err = load_csv_str(text, MetaOverrides::default()).unwrap_err();
        assert!(matches!(err, StreamError::Validation(_)), "{err}");
    }

    #[test]
    fn non_monotone_time_is_rejected() {
        let text = "frame,time,id,class,prob,xmin,ymin,xmax,ymax\n0,0.1,1,car,0.5,0,0,1,1\n1,0.1,1,car,0.5,0,0,1,1\n";
        let err = load_csv_str(text, MetaOverrides::default()).unwrap_err();
        assert!(matches!(err, StreamError::Validation(_)), "{err}");
    }

    #[test]
    fn frame_gap_is_rejected() {
        let text = "frame,time,id,class,prob,xmin,ymin,xmax,ymax\n0,0,1,car,0.5,0,0,1,1\n2,0.2,1,car,0.5,0,0,1,1\n";
        let err = load_csv_str(text, MetaOverrides::default()).unwrap_err();
        assert!(matches!(err, StreamError::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let text = "frame,time,id,class,prob,xmin,ymin,xmax,ymax\n0,0,1,car,notanumber,0,0,1,1\n";
        match load_csv_str(text, MetaOverrides::default()).unwrap_err() {
            StreamError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn empty_contradicting_pc_count_is_rejected() {
        let text = "frame,time,id,class,prob,xmin,ymin,xmax,ymax,empty,md,pc_count\n0,0,1,car,0.5,0,0,1,1,1,,42\n";
        let err = load_csv_str(text, MetaOverrides::default()).unwrap_err();
        assert!(matches!(err, StreamError::Validation(_)), "{err}");
    }

    #[test]
    fn explicit_universe_clamps_boxes() {
        let ov = MetaOverrides {
            universe: Some(BBox::closed(0.0, 0.0, 100.0, 100.0)),
            ..Default::default()
        };
        let text = "frame,time,id,class,prob,xmin,ymin,xmax,ymax\n0,0,1,car,0.5,90,95,120,130\n";
        let d = load_csv_str(text, ov).unwrap();
        assert_eq!(d.retrieve(0, 1).unwrap().bbox, BBox::closed(90.0, 95.0, 100.0, 100.0));
        assert!(d.meta().explicit_universe);
    }

    #[test]
    fn default_universe_is_tight_hull_with_origin() {
        let d = load_csv_str(SMALL, MetaOverrides::default()).unwrap();
        assert_eq!(d.universe(), BBox::closed(0.0, 0.0, 690.0, 382.0));
        assert!(!d.meta().explicit_universe);
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let with_opts = "frame,time,id,class,prob,xmin,ymin,xmax,ymax,empty,md,pc_count\n\
                         0,0,1,car,0.5,0,0,10,10,0,,120\n\
                         0,0,2,cyclist,0.25,5,5,8,9,1,-1,0\n\
                         1,0.5,1,car,0.5,1,1,11,11,0,1,\n";
        let d = load_csv_str(with_opts, MetaOverrides::default()).unwrap();
        let exported = d.to_csv_string();
        let d2 = load_csv_str(&exported, MetaOverrides::default()).unwrap();
        assert_eq!(d.frames(), d2.frames());
        let triple = load_csv_str(&d2.to_csv_string(), MetaOverrides::default()).unwrap();
        assert_eq!(d2.to_csv_string(), triple.to_csv_string());
    }

    #[test]
    fn kitti_single_line() {
        let line = "0 0 Car 0 0 -1.57 100.0 120.0 300.0 340.0 1.5 1.6 3.7 1.0 1.5 20.0 -1.5\n";
        let d = load_kitti_str(line, 10.0, MetaOverrides::default()).unwrap();
        assert_eq!(d.len(), 1);
        let obj = d.retrieve(0, 0).unwrap();
        assert_eq!(d.class_label(obj.class), Some("car"));
        assert_eq!(obj.prob, 1.0);
        assert_eq!(obj.occ, Some(0));
        assert_eq!(d.timestamp(0), 0.0);
    }

    #[test]
    fn kitti_skips_dontcare_and_fills_gap_frames() {
        let text = "\
0 1 Pedestrian 0 0 0.0 10 10 20 20 1.7 0.6 0.9 0 0 10 0
2 -1 DontCare -1 -1 -10 5 5 9 9 -1 -1 -1 -1000 -1000 -1000 -10
3 1 Pedestrian 0 1 0.0 12 10 22 20 1.7 0.6 0.9 0 0 10 0
";
        let d = load_kitti_str(text, 25.0, MetaOverrides::default()).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.ids(1).count(), 0);
        assert_eq!(d.ids(2).count(), 0);
        assert_eq!(d.timestamp(3), 3.0 / 25.0);
        assert_eq!(d.meta().fps, Some(25.0));
        assert_eq!(d.retrieve(3, 1).unwrap().occ, Some(1));
    }

    #[test]
    fn kitti_field_count_mismatch_reports_line() {
        match load_kitti_str("0 0 Car 0 0\n", 10.0, MetaOverrides::default()).unwrap_err() {
            StreamError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn sidecar_parsing_accepts_both_universe_forms() {
        let ov = MetaOverrides::parse("universe=1242x375\nframe=image\nfps=25\n").unwrap();
        assert_eq!(ov.universe, Some(BBox::closed(0.0, 0.0, 1242.0, 375.0)));
        assert_eq!(ov.coordinate_frame, Some(CoordFrame::Image));
        assert_eq!(ov.fps, Some(25.0));
        let ov2 = MetaOverrides::parse("universe=-5,-5,5,5\n").unwrap();
        assert_eq!(ov2.universe, Some(BBox::closed(-5.0, -5.0, 5.0, 5.0)));
        assert!(MetaOverrides::parse("universe=0x0\n").is_err());
    }
}
