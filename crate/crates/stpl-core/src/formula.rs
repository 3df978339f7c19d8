//! Formula syntax: AST, parser, printer, validation, rewrites, statistics.
//!
//! Formulas quantify over object identifiers (`exists id1 .`,
//! `forall id2 @ x .`) and freeze time variables (`x .`, or the `@ x` form
//! which additionally freezes the bound identifier's attribute-lookup
//! frame), combine temporal operators (`next`, `until`, `always`, …,
//! optionally interval-decorated like `eventually[0,1]t`), past operators
//! (`prev`, `wprev`, `since`), clock constraints (`CTIME - x <= 1`,
//! `CFRAME - x >= 2`, `(CFRAME - x) % 2 == 0`), identifier equalities, and
//! atomic predicates over perception functions (`CLASS`, `PROB`, `LAT`,
//! `LON`, `DIST`, `AREA`, `RATIO`, `EMPTY`, `VISIBLE`, `MD`).
//!
//! Spatial subformulas `SE(term)` / `SA(term)` ("somewhere" /
//! "everywhere") wrap a term language over bounding-box regions:
//! `BB(id1)`, `EMPTYSET`, `UNIVERSE`, `CMPL`, `CAP`, `CUP`, `INT`, `CL`,
//! and the spatio-temporal operators `NEXTS`, `UNTILS`, `ALWAYSS`,
//! `EVENTUALLYS`, `RELEASES`, each with an optional `[a,b]t` (seconds) or
//! `[a,b]f` (frames) window.
//!
//! Structural equality (`==`) on formulas ignores source spans, so
//! `parse(pretty_print(f)) == f` is the round-trip contract.
//!
//! ```
//! use stpl_core::formula::parse;
//!
//! let f = parse(
//!     "eventually exists id1 . exists id2 . \
//!      (id1 != id2 and CLASS(id1) == CLASS(id2))",
//! )
//! .unwrap();
//! let printed = f.to_string();
//! assert_eq!(parse(&printed).unwrap(), f);
//! ```

mod aan;
mod desugar;
mod lexer;
mod parser;

pub use aan::{validate_aan, AanViolation};
pub use desugar::desugar;
pub use parser::{parse, ParseError};

use crate::spatial::Crt;
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

/// Byte range of a node in the source text (empty for generated nodes).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

/// Comparison operator in constraints and function atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Cmp {
    /// Apply to an exactly-representable pair (used for reals and codes).
    pub fn test_f64(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
        }
    }

    pub fn test_i64(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Cmp::Lt => lhs < rhs,
            Cmp::Le => lhs <= rhs,
            Cmp::Eq => lhs == rhs,
            Cmp::Ne => lhs != rhs,
            Cmp::Ge => lhs >= rhs,
            Cmp::Gt => lhs > rhs,
        }
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        };
        f.write_str(s)
    }
}

/// Whether an interval window counts seconds or frame indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IntervalUnit {
    Time,
    Frame,
}

/// A non-empty interval `[lo, hi]` (with per-endpoint closedness; `hi` may
/// be infinite) decorating temporal and spatial-temporal operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub unit: IntervalUnit,
}

impl IntervalSpec {
    /// Does a non-negative offset (seconds or frames, per `unit`) fall in
    /// the window?
    pub fn contains(&self, offset: f64) -> bool {
        (self.lo < offset || (self.lo == offset && self.lo_closed))
            && (offset < self.hi || (offset == self.hi && self.hi_closed))
    }

    /// True when no offset beyond `offset` can still fall in the window
    /// (used to stop widening scans).
    pub fn exceeded_by(&self, offset: f64) -> bool {
        offset > self.hi || (offset == self.hi && !self.hi_closed)
    }
}

impl fmt::Display for IntervalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        let close = if self.hi_closed { ']' } else { ')' };
        let unit = match self.unit {
            IntervalUnit::Time => 't',
            IntervalUnit::Frame => 'f',
        };
        write!(f, "{open}{},{}{close}{unit}", self.lo, self.hi)
    }
}

/// Object-id argument positions that also accept the whole universe
/// (written `UNIVERSE` or `EGO` in source).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DistArg {
    Id(String),
    Universe,
}

impl fmt::Display for DistArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistArg::Id(v) => f.write_str(v),
            DistArg::Universe => f.write_str("UNIVERSE"),
        }
    }
}

/// A perception-function expression (the left side of a function atom, or
/// a scaled right side).
#[derive(Clone, Debug, PartialEq)]
pub enum FnExpr {
    Class(String),
    Prob(String),
    Lat(String, Crt),
    Lon(String, Crt),
    Dist(DistArg, Crt, DistArg, Crt),
    AreaId(String),
    AreaTerm(Box<SpatialTerm>),
    Ratio(Box<FnExpr>, Box<FnExpr>),
    Empty(String),
    Visible(DistArg, Crt, String, String),
    Md(String),
}

impl fmt::Display for FnExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FnExpr::Class(v) => write!(f, "CLASS({v})"),
            FnExpr::Prob(v) => write!(f, "PROB({v})"),
            FnExpr::Lat(v, c) => write!(f, "LAT({v}, {c})"),
            FnExpr::Lon(v, c) => write!(f, "LON({v}, {c})"),
            FnExpr::Dist(a, ca, b, cb) => write!(f, "DIST({a}, {ca}, {b}, {cb})"),
            FnExpr::AreaId(v) => write!(f, "AREA({v})"),
            FnExpr::AreaTerm(t) => write!(f, "AREA({t})"),
            FnExpr::Ratio(a, b) => write!(f, "RATIO({a}, {b})"),
            FnExpr::Empty(v) => write!(f, "EMPTY({v})"),
            FnExpr::Visible(vp, c, a, b) => write!(f, "VISIBLE({vp}, {c}, {a}, {b})"),
            FnExpr::Md(v) => write!(f, "MD({v})"),
        }
    }
}

/// The right side of a function atom comparison.
#[derive(Clone, Debug, PartialEq)]
pub enum FnRhs {
    Number(f64),
    ClassLabel(String),
    Bool(bool),
    /// `scale * expr`; a scale of exactly 1 prints as the bare expression.
    Expr { scale: f64, expr: FnExpr },
}

/// An atomic predicate comparing a function expression to a constant or a
/// scaled function expression.
#[derive(Clone, Debug, PartialEq)]
pub struct FnAtom {
    pub lhs: FnExpr,
    pub cmp: Cmp,
    pub rhs: FnRhs,
}

impl fmt::Display for FnAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Boolean-valued atoms print in their bare form.
        if let (Cmp::Eq, FnRhs::Bool(true)) = (self.cmp, &self.rhs) {
            return write!(f, "{}", self.lhs);
        }
        write!(f, "{} {} ", self.lhs, self.cmp)?;
        match &self.rhs {
            FnRhs::Number(n) => write!(f, "{n}"),
            FnRhs::ClassLabel(s) => write!(f, "\"{s}\""),
            FnRhs::Bool(b) => write!(f, "{b}"),
            FnRhs::Expr { scale, expr } => {
                if *scale == 1.0 {
                    write!(f, "{expr}")
                } else {
                    write!(f, "{scale} * {expr}")
                }
            }
        }
    }
}

/// A spatial term: a region-valued expression.
#[derive(Clone, Debug)]
pub struct SpatialTerm {
    pub kind: SpatialTermKind,
    pub span: Span,
}

impl PartialEq for SpatialTerm {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl SpatialTerm {
    pub fn new(kind: SpatialTermKind) -> Self {
        SpatialTerm { kind, span: Span::default() }
    }

    /// All object-id variables mentioned in the term, in syntactic order
    /// (duplicates preserved).
    pub fn variables(&self) -> Vec<&str> {
        fn walk<'a>(t: &'a SpatialTerm, out: &mut Vec<&'a str>) {
            match &t.kind {
                SpatialTermKind::BBoxOf(v) => out.push(v),
                SpatialTermKind::EmptySet | SpatialTermKind::Universe => {}
                SpatialTermKind::Complement(a)
                | SpatialTermKind::Interior(a)
                | SpatialTermKind::Closure(a)
                | SpatialTermKind::SpatialNext { body: a, .. }
                | SpatialTermKind::SpatialAlways { body: a, .. }
                | SpatialTermKind::SpatialEventually { body: a, .. } => walk(a, out),
                SpatialTermKind::Intersect(a, b)
                | SpatialTermKind::Union(a, b)
                | SpatialTermKind::SpatialUntil { lhs: a, rhs: b, .. }
                | SpatialTermKind::SpatialRelease { lhs: a, rhs: b, .. } => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpatialTermKind {
    /// The bounding box of the object a variable denotes, `BB(id1)`.
    BBoxOf(String),
    EmptySet,
    Universe,
    Complement(Box<SpatialTerm>),
    Intersect(Box<SpatialTerm>, Box<SpatialTerm>),
    Union(Box<SpatialTerm>, Box<SpatialTerm>),
    Interior(Box<SpatialTerm>),
    Closure(Box<SpatialTerm>),
    SpatialUntil {
        interval: Option<IntervalSpec>,
        lhs: Box<SpatialTerm>,
        rhs: Box<SpatialTerm>,
    },
    SpatialRelease {
        interval: Option<IntervalSpec>,
        lhs: Box<SpatialTerm>,
        rhs: Box<SpatialTerm>,
    },
    SpatialNext {
        interval: Option<IntervalSpec>,
        body: Box<SpatialTerm>,
    },
    SpatialAlways {
        interval: Option<IntervalSpec>,
        body: Box<SpatialTerm>,
    },
    SpatialEventually {
        interval: Option<IntervalSpec>,
        body: Box<SpatialTerm>,
    },
}

fn write_interval(f: &mut fmt::Formatter<'_>, interval: &Option<IntervalSpec>) -> fmt::Result {
    if let Some(iv) = interval {
        write!(f, "{iv}")?;
    }
    Ok(())
}

impl SpatialTermKind {
    fn is_atom(&self) -> bool {
        matches!(
            self,
            SpatialTermKind::BBoxOf(_) | SpatialTermKind::EmptySet | SpatialTermKind::Universe
        )
    }
}

impl fmt::Display for SpatialTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atom_or_paren = |f: &mut fmt::Formatter<'_>, t: &SpatialTerm| -> fmt::Result {
            if t.kind.is_atom() {
                write!(f, "{t}")
            } else {
                write!(f, "({t})")
            }
        };
        match &self.kind {
            SpatialTermKind::BBoxOf(v) => write!(f, "BB({v})"),
            SpatialTermKind::EmptySet => f.write_str("EMPTYSET"),
            SpatialTermKind::Universe => f.write_str("UNIVERSE"),
            SpatialTermKind::Complement(t) => {
                f.write_str("CMPL ")?;
                atom_or_paren(f, t)
            }
            SpatialTermKind::Interior(t) => {
                f.write_str("INT ")?;
                atom_or_paren(f, t)
            }
            SpatialTermKind::Closure(t) => {
                f.write_str("CL ")?;
                atom_or_paren(f, t)
            }
            SpatialTermKind::Intersect(a, b) => {
                atom_or_paren(f, a)?;
                f.write_str(" CAP ")?;
                atom_or_paren(f, b)
            }
            SpatialTermKind::Union(a, b) => {
                atom_or_paren(f, a)?;
                f.write_str(" CUP ")?;
                atom_or_paren(f, b)
            }
            SpatialTermKind::SpatialUntil { interval, lhs, rhs } => {
                atom_or_paren(f, lhs)?;
                f.write_str(" UNTILS")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                atom_or_paren(f, rhs)
            }
            SpatialTermKind::SpatialRelease { interval, lhs, rhs } => {
                atom_or_paren(f, lhs)?;
                f.write_str(" RELEASES")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                atom_or_paren(f, rhs)
            }
            SpatialTermKind::SpatialNext { interval, body } => {
                f.write_str("NEXTS")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                atom_or_paren(f, body)
            }
            SpatialTermKind::SpatialAlways { interval, body } => {
                f.write_str("ALWAYSS")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                atom_or_paren(f, body)
            }
            SpatialTermKind::SpatialEventually { interval, body } => {
                f.write_str("EVENTUALLYS")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                atom_or_paren(f, body)
            }
        }
    }
}

/// A formula node. Equality is structural and ignores spans.
#[derive(Clone, Debug)]
pub struct Formula {
    pub kind: FormulaKind,
    pub span: Span,
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Formula {
    pub fn new(kind: FormulaKind) -> Self {
        Formula { kind, span: Span::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FormulaKind {
    True,
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    WeakNext(Box<Formula>),
    Until {
        interval: Option<IntervalSpec>,
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
    Release {
        interval: Option<IntervalSpec>,
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
    Always {
        interval: Option<IntervalSpec>,
        body: Box<Formula>,
    },
    Eventually {
        interval: Option<IntervalSpec>,
        body: Box<Formula>,
    },
    Previous(Box<Formula>),
    WeakPrevious(Box<Formula>),
    Since {
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
    /// `exists id1 . φ` (freeze: None) or `exists id1 @ x1 . φ`, which
    /// additionally freezes `id1`'s lookup frame and binds `x1`.
    Exists {
        id: String,
        freeze: Option<String>,
        body: Box<Formula>,
    },
    Forall {
        id: String,
        freeze: Option<String>,
        body: Box<Formula>,
    },
    /// Bare freeze `x1 . φ`: records the current frame into `x1`.
    Freeze {
        var: String,
        body: Box<Formula>,
    },
    /// `CTIME - var cmp bound` (seconds since the frozen frame).
    TimeConstraint {
        var: String,
        cmp: Cmp,
        bound: f64,
    },
    /// `CFRAME - var cmp bound` (frames since the frozen frame).
    FrameConstraint {
        var: String,
        cmp: Cmp,
        bound: i64,
    },
    /// `(CFRAME - var) % modulus cmp bound`.
    ModuloConstraint {
        var: String,
        modulus: i64,
        cmp: Cmp,
        bound: i64,
    },
    IdEquality {
        lhs: String,
        rhs: String,
        negated: bool,
    },
    /// `SE(term)`: the term's region is non-empty somewhere.
    SpatialExists(SpatialTerm),
    /// `SA(term)`: the term's region covers the whole universe.
    SpatialForall(SpatialTerm),
    FunctionAtom(FnAtom),
}

impl FormulaKind {
    /// Atoms print without parentheses and terminate recursion in the
    /// statistics and validation walks.
    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            FormulaKind::True
                | FormulaKind::TimeConstraint { .. }
                | FormulaKind::FrameConstraint { .. }
                | FormulaKind::ModuloConstraint { .. }
                | FormulaKind::IdEquality { .. }
                | FormulaKind::SpatialExists(_)
                | FormulaKind::SpatialForall(_)
                | FormulaKind::FunctionAtom(_)
        )
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, x: &Formula| -> fmt::Result {
            if x.kind.is_atom() {
                write!(f, "{x}")
            } else {
                write!(f, "({x})")
            }
        };
        match &self.kind {
            FormulaKind::True => f.write_str("true"),
            FormulaKind::Not(p) => {
                f.write_str("not ")?;
                sub(f, p)
            }
            FormulaKind::And(a, b) => {
                sub(f, a)?;
                f.write_str(" and ")?;
                sub(f, b)
            }
            FormulaKind::Or(a, b) => {
                sub(f, a)?;
                f.write_str(" or ")?;
                sub(f, b)
            }
            FormulaKind::Implies(a, b) => {
                sub(f, a)?;
                f.write_str(" implies ")?;
                sub(f, b)
            }
            FormulaKind::Next(p) => {
                f.write_str("next ")?;
                sub(f, p)
            }
            FormulaKind::WeakNext(p) => {
                f.write_str("wnext ")?;
                sub(f, p)
            }
            FormulaKind::Previous(p) => {
                f.write_str("prev ")?;
                sub(f, p)
            }
            FormulaKind::WeakPrevious(p) => {
                f.write_str("wprev ")?;
                sub(f, p)
            }
            FormulaKind::Until { interval, lhs, rhs } => {
                sub(f, lhs)?;
                f.write_str(" until")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                sub(f, rhs)
            }
            FormulaKind::Release { interval, lhs, rhs } => {
                sub(f, lhs)?;
                f.write_str(" release")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                sub(f, rhs)
            }
            FormulaKind::Since { lhs, rhs } => {
                sub(f, lhs)?;
                f.write_str(" since ")?;
                sub(f, rhs)
            }
            FormulaKind::Always { interval, body } => {
                f.write_str("always")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                sub(f, body)
            }
            FormulaKind::Eventually { interval, body } => {
                f.write_str("eventually")?;
                write_interval(f, interval)?;
                f.write_str(" ")?;
                sub(f, body)
            }
            FormulaKind::Exists { id, freeze, body } => {
                write!(f, "exists {id}")?;
                if let Some(x) = freeze {
                    write!(f, " @ {x}")?;
                }
                f.write_str(" . ")?;
                sub(f, body)
            }
            FormulaKind::Forall { id, freeze, body } => {
                write!(f, "forall {id}")?;
                if let Some(x) = freeze {
                    write!(f, " @ {x}")?;
                }
                f.write_str(" . ")?;
                sub(f, body)
            }
            FormulaKind::Freeze { var, body } => {
                write!(f, "{var} . ")?;
                sub(f, body)
            }
            FormulaKind::TimeConstraint { var, cmp, bound } => {
                write!(f, "CTIME - {var} {cmp} {bound}")
            }
            FormulaKind::FrameConstraint { var, cmp, bound } => {
                write!(f, "CFRAME - {var} {cmp} {bound}")
            }
            FormulaKind::ModuloConstraint { var, modulus, cmp, bound } => {
                write!(f, "(CFRAME - {var}) % {modulus} {cmp} {bound}")
            }
            FormulaKind::IdEquality { lhs, rhs, negated } => {
                write!(f, "{lhs} {} {rhs}", if *negated { "!=" } else { "==" })
            }
            FormulaKind::SpatialExists(t) => write!(f, "SE({t})"),
            FormulaKind::SpatialForall(t) => write!(f, "SA({t})"),
            FormulaKind::FunctionAtom(a) => write!(f, "{a}"),
        }
    }
}

/// Render a formula in canonical concrete syntax;
/// `parse(pretty_print(f))` structurally equals `f`.
pub fn pretty_print(f: &Formula) -> String {
    f.to_string()
}

fn fn_expr_variables(e: &FnExpr, out: &mut BTreeSet<String>) {
    let dist_arg = |a: &DistArg, out: &mut BTreeSet<String>| {
        if let DistArg::Id(v) = a {
            out.insert(v.clone());
        }
    };
    match e {
        FnExpr::Class(v)
        | FnExpr::Prob(v)
        | FnExpr::Lat(v, _)
        | FnExpr::Lon(v, _)
        | FnExpr::AreaId(v)
        | FnExpr::Empty(v)
        | FnExpr::Md(v) => {
            out.insert(v.clone());
        }
        FnExpr::Dist(a, _, b, _) => {
            dist_arg(a, out);
            dist_arg(b, out);
        }
        FnExpr::AreaTerm(t) => {
            out.extend(t.variables().into_iter().map(str::to_owned));
        }
        FnExpr::Ratio(a, b) => {
            fn_expr_variables(a, out);
            fn_expr_variables(b, out);
        }
        FnExpr::Visible(vp, _, a, b) => {
            dist_arg(vp, out);
            out.insert(a.clone());
            out.insert(b.clone());
        }
    }
}

/// The variables (object-id and time alike) a formula mentions without
/// binding. A formula with no free variables can be evaluated standalone.
pub fn free_variables(f: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(f, &mut out);
    out
}

fn collect_free(f: &Formula, out: &mut BTreeSet<String>) {
    let scoped = |body: &Formula, bound: &[&String], out: &mut BTreeSet<String>| {
        let mut inner = BTreeSet::new();
        collect_free(body, &mut inner);
        for v in bound {
            inner.remove(v.as_str());
        }
        out.extend(inner);
    };
    match &f.kind {
        FormulaKind::True => {}
        FormulaKind::Not(p)
        | FormulaKind::Next(p)
        | FormulaKind::WeakNext(p)
        | FormulaKind::Previous(p)
        | FormulaKind::WeakPrevious(p) => collect_free(p, out),
        FormulaKind::And(a, b)
        | FormulaKind::Or(a, b)
        | FormulaKind::Implies(a, b)
        | FormulaKind::Until { lhs: a, rhs: b, .. }
        | FormulaKind::Release { lhs: a, rhs: b, .. }
        | FormulaKind::Since { lhs: a, rhs: b } => {
            collect_free(a, out);
            collect_free(b, out);
        }
        FormulaKind::Always { body, .. } | FormulaKind::Eventually { body, .. } => {
            collect_free(body, out)
        }
        FormulaKind::Exists { id, freeze, body } | FormulaKind::Forall { id, freeze, body } => {
            let mut bound = vec![id];
            bound.extend(freeze.as_ref());
            scoped(body, &bound, out);
        }
        FormulaKind::Freeze { var, body } => scoped(body, &[var], out),
        FormulaKind::TimeConstraint { var, .. }
        | FormulaKind::FrameConstraint { var, .. }
        | FormulaKind::ModuloConstraint { var, .. } => {
            out.insert(var.clone());
        }
        FormulaKind::IdEquality { lhs, rhs, .. } => {
            out.insert(lhs.clone());
            out.insert(rhs.clone());
        }
        FormulaKind::SpatialExists(t) | FormulaKind::SpatialForall(t) => {
            out.extend(t.variables().into_iter().map(str::to_owned));
        }
        FormulaKind::FunctionAtom(a) => {
            fn_expr_variables(&a.lhs, out);
            if let FnRhs::Expr { expr, .. } = &a.rhs {
                fn_expr_variables(expr, out);
            }
        }
    }
}

/// Size and scope statistics used by performance reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FormulaStats {
    /// Number of formula nodes (atoms, connectives, quantifiers,
    /// temporal operators).
    pub n_temporal: usize,
    /// Number of spatial-term nodes, including terms nested inside
    /// function atoms.
    pub n_spatial: usize,
    /// Number of freeze time variables bound in the formula.
    pub n_time_vars: usize,
    /// Maximum number of ID variables simultaneously in scope at any atom.
    pub max_id_scope: usize,
}

/// Compute [`FormulaStats`] for a formula.
pub fn stats(f: &Formula) -> FormulaStats {
    let mut s = FormulaStats::default();
    walk_stats(f, 0, &mut s);
    s
}

fn term_size(t: &SpatialTerm) -> usize {
    1 + match &t.kind {
        SpatialTermKind::BBoxOf(_) | SpatialTermKind::EmptySet | SpatialTermKind::Universe => 0,
        SpatialTermKind::Complement(a)
        | SpatialTermKind::Interior(a)
        | SpatialTermKind::Closure(a)
        | SpatialTermKind::SpatialNext { body: a, .. }
        | SpatialTermKind::SpatialAlways { body: a, .. }
        | SpatialTermKind::SpatialEventually { body: a, .. } => term_size(a),
        SpatialTermKind::Intersect(a, b)
        | SpatialTermKind::Union(a, b)
        | SpatialTermKind::SpatialUntil { lhs: a, rhs: b, .. }
        | SpatialTermKind::SpatialRelease { lhs: a, rhs: b, .. } => term_size(a) + term_size(b),
    }
}

fn fn_expr_spatial_size(e: &FnExpr) -> usize {
    match e {
        FnExpr::AreaTerm(t) => term_size(t),
        FnExpr::Ratio(a, b) => fn_expr_spatial_size(a) + fn_expr_spatial_size(b),
        _ => 0,
    }
}

fn walk_stats(f: &Formula, ids_in_scope: usize, s: &mut FormulaStats) {
    s.n_temporal += 1;
    match &f.kind {
        FormulaKind::True
        | FormulaKind::TimeConstraint { .. }
        | FormulaKind::FrameConstraint { .. }
        | FormulaKind::ModuloConstraint { .. }
        | FormulaKind::IdEquality { .. } => {
            s.max_id_scope = s.max_id_scope.max(ids_in_scope);
        }
        FormulaKind::SpatialExists(t) | FormulaKind::SpatialForall(t) => {
            s.max_id_scope = s.max_id_scope.max(ids_in_scope);
            s.n_spatial += term_size(t);
        }
        FormulaKind::FunctionAtom(a) => {
            s.max_id_scope = s.max_id_scope.max(ids_in_scope);
            s.n_spatial += fn_expr_spatial_size(&a.lhs);
            if let FnRhs::Expr { expr, .. } = &a.rhs {
                s.n_spatial += fn_expr_spatial_size(expr);
            }
        }
        FormulaKind::Not(p)
        | FormulaKind::Next(p)
        | FormulaKind::WeakNext(p)
        | FormulaKind::Previous(p)
        | FormulaKind::WeakPrevious(p)
        | FormulaKind::Always { body: p, .. }
        | FormulaKind::Eventually { body: p, .. } => walk_stats(p, ids_in_scope, s),
        FormulaKind::And(a, b)
        | FormulaKind::Or(a, b)
        | FormulaKind::Implies(a, b)
        | FormulaKind::Until { lhs: a, rhs: b, .. }
        | FormulaKind::Release { lhs: a, rhs: b, .. }
        | FormulaKind::Since { lhs: a, rhs: b } => {
            walk_stats(a, ids_in_scope, s);
            walk_stats(b, ids_in_scope, s);
        }
        FormulaKind::Exists { freeze, body, .. } | FormulaKind::Forall { freeze, body, .. } => {
            if freeze.is_some() {
                s.n_time_vars += 1;
            }
            walk_stats(body, ids_in_scope + 1, s);
        }
        FormulaKind::Freeze { body, .. } => {
            s.n_time_vars += 1;
            walk_stats(body, ids_in_scope, s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_of_true_is_one_node() {
        let f = parse("true").unwrap();
        assert_eq!(
            stats(&f),
            FormulaStats { n_temporal: 1, n_spatial: 0, n_time_vars: 0, max_id_scope: 0 }
        );
    }

    #[test]
    fn stats_of_in_bounds_formula() {
        let f = parse(
            "always forall id1 . (LAT(id1, LM) >= 0 and LAT(id1, RM) <= 1242 \
             and LON(id1, TM) >= 0 and LON(id1, BM) <= 375)",
        )
        .unwrap();
        let s = stats(&f);
        assert_eq!(s.n_temporal, 9);
        assert_eq!(s.n_spatial, 0);
        assert_eq!(s.n_time_vars, 0);
        assert_eq!(s.max_id_scope, 1);
    }

    #[test]
    fn stats_of_relative_position_quantified_formula() {
        let f = parse(
            "always forall id1 @ x . always exists id2 . \
             (SA((CMPL BB(id1)) CUP BB(id2)) and SA((CMPL BB(id2)) CUP BB(id1)) \
             and id1 == id2)",
        )
        .unwrap();
        let s = stats(&f);
        assert_eq!(s.n_temporal, 9);
        assert_eq!(s.n_spatial, 8);
        assert_eq!(s.n_time_vars, 1);
        assert_eq!(s.max_id_scope, 2);
    }

    #[test]
    fn stats_of_ste_area_formula() {
        let f = parse(
            "always forall id1 . (AREA(ALWAYSS BB(id1)) == AREA(EVENTUALLYS BB(id1)))",
        )
        .unwrap();
        let s = stats(&f);
        assert_eq!(s.n_temporal, 3);
        assert_eq!(s.n_spatial, 4);
        assert_eq!(s.n_time_vars, 0);
        assert_eq!(s.max_id_scope, 1);
    }

    #[test]
    fn stats_of_right_shift_exists_formula() {
        let f = parse(
            "eventually exists id1 @ x . next exists id2 . \
             (id1 == id2 and LAT(id1, LM) < LAT(id2, LM))",
        )
        .unwrap();
        let s = stats(&f);
        assert_eq!(s.n_temporal, 7);
        assert_eq!(s.n_time_vars, 1);
        assert_eq!(s.max_id_scope, 2);
    }
}
