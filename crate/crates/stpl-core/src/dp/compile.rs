//! Lowering formulas into the table engine's intermediate representation.
//!
//! The formula is split into *clusters*: maximal regions evaluated by one
//! family of backward sweeps. A new cluster starts at every
//! clock-recording binder (`x .`, `exists id @ x .`, `forall id @ x .`).
//! The binder stays in the enclosing cluster as a [`NodeKind::Portal`]
//! leaf that reads the inner cluster's precomputed per-frame values. The
//! no-cross-binder-reference discipline (checked by
//! [`crate::formula::validate_aan`]) guarantees every inner cluster is
//! closed — its value at a frame is a single boolean — which is what makes
//! one table per cluster sound.
//!
//! Within a cluster, nodes are kept in dependency order (children before
//! parents) so one pass per sweep frame fills every table row. Past
//! operators are not swept: their operands are restricted to frame-local
//! shape here and re-evaluated directly by the reference semantics, which
//! keeps the backward sweep free of backward dependencies.

use std::collections::BTreeSet;

use crate::formula::{
    free_variables, Cmp, FnAtom, FnRhs, Formula, FormulaKind, IntervalSpec, IntervalUnit,
    SpatialTerm, SpatialTermKind,
};

use super::MonitorError;

pub(super) type NodeId = usize;
pub(super) type TermId = usize;

/// What anchors a cluster.
#[derive(Clone, Debug)]
pub(super) enum Binder {
    /// The outermost cluster; evaluated once, anchored at frame 0.
    Root,
    /// `x . body`: records the anchor frame into the clock.
    Freeze,
    /// `exists/forall id @ x . body`: additionally quantifies `id` over
    /// the objects of the anchor frame, with frozen attribute lookup.
    Quantified { universal: bool, id_var: String },
}

/// How far past the anchor frame a cluster's sweep must reach for its
/// anchored value to be exact. Frame and second contributions accumulate
/// separately; seconds are converted per stream when sweeping. Because
/// frame rate may be uneven, each nested time window is budgeted the
/// worst-case frame span of the *total* seconds anywhere in the stream —
/// hence the window count rides along (`count × span(total)` bounds the
/// sum of per-window spans at their individual positions).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(super) struct Horizon {
    pub frames: usize,
    pub seconds: f64,
    pub time_windows: usize,
    pub unbounded: bool,
}

impl Horizon {
    pub const ZERO: Horizon =
        Horizon { frames: 0, seconds: 0.0, time_windows: 0, unbounded: false };
    pub const UNBOUNDED: Horizon =
        Horizon { frames: 0, seconds: 0.0, time_windows: 0, unbounded: true };

    /// Componentwise maximum: an upper bound for either operand.
    pub fn join(self, o: Horizon) -> Horizon {
        Horizon {
            frames: self.frames.max(o.frames),
            seconds: self.seconds.max(o.seconds),
            time_windows: self.time_windows.max(o.time_windows),
            unbounded: self.unbounded || o.unbounded,
        }
    }

    fn add_frames(self, k: usize) -> Horizon {
        Horizon { frames: self.frames + k, ..self }
    }

    /// Extend by the lookahead of a windowed operator over `self` (the
    /// joined horizon of the operands).
    fn through_window(self, interval: &Option<IntervalSpec>) -> Horizon {
        match interval {
            None => Horizon::UNBOUNDED,
            Some(iv) if iv.hi.is_infinite() => Horizon::UNBOUNDED,
            Some(iv) => match iv.unit {
                IntervalUnit::Frame => self.add_frames(iv.hi as usize),
                IntervalUnit::Time => Horizon {
                    seconds: self.seconds + iv.hi,
                    time_windows: self.time_windows + 1,
                    ..self
                },
            },
        }
    }
}

#[derive(Clone, Debug)]
pub(super) struct Cluster {
    pub binder: Binder,
    /// The clock variable the binder records (`None` for the root).
    pub clock: Option<String>,
    /// The cluster's output node.
    pub root: NodeId,
    /// This cluster's formula nodes, children before parents.
    pub nodes: Vec<NodeId>,
    /// This cluster's spatial-term nodes, children before parents.
    pub terms: Vec<TermId>,
    pub horizon: Horizon,
}

#[derive(Clone, Debug)]
pub(super) struct NodeInfo {
    pub kind: NodeKind,
    /// Free object-id variables at this node (relative to the cluster),
    /// sorted; combo keys align with this order.
    pub free_vars: Vec<String>,
    /// Preorder index of the originating node in the whole formula.
    pub trace_id: usize,
    /// Keep the row for every sweep frame (a parent scans a window).
    pub retain_rows: bool,
}

#[derive(Clone, Debug)]
pub(super) enum NodeKind {
    True,
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Implies(NodeId, NodeId),
    Next(NodeId),
    WeakNext(NodeId),
    Until { interval: Option<IntervalSpec>, lhs: NodeId, rhs: NodeId },
    Release { interval: Option<IntervalSpec>, lhs: NodeId, rhs: NodeId },
    Always { interval: Option<IntervalSpec>, body: NodeId },
    Eventually { interval: Option<IntervalSpec>, body: NodeId },
    /// `prev`/`wprev` over a frame-local operand, re-evaluated by the
    /// reference semantics at the preceding frame.
    Previous { weak: bool, operand: Formula },
    /// `since` over frame-local operands, scanned backwards per cell.
    Since { lhs: Formula, rhs: Formula },
    /// A plain (non-freezing) quantifier; reduces over the objects of the
    /// sweep frame.
    Quantifier { universal: bool, var: String, body: NodeId },
    /// A clock-recording binder: reads the inner cluster's value vector.
    Portal { cluster: usize },
    TimeConstraint { cmp: Cmp, bound: f64 },
    FrameConstraint { cmp: Cmp, bound: i64 },
    ModuloConstraint { modulus: i64, cmp: Cmp, bound: i64 },
    IdEquality { lhs: String, rhs: String, negated: bool },
    SpatialExists(TermId),
    SpatialForall(TermId),
    /// A function atom; `terms` maps the addresses of the spatial terms
    /// embedded in `atom` (stable: they live in boxes) to their lowered
    /// ids, so area requests during evaluation find the swept regions.
    FnAtom { atom: FnAtom, terms: Vec<(usize, TermId)> },
}

#[derive(Clone, Debug)]
pub(super) struct TermInfo {
    pub kind: TermKind,
    pub free_vars: Vec<String>,
    pub retain_rows: bool,
}

#[derive(Clone, Debug)]
pub(super) enum TermKind {
    BBoxOf(String),
    EmptySet,
    Universe,
    Complement(TermId),
    Intersect(TermId, TermId),
    Union(TermId, TermId),
    Interior(TermId),
    Closure(TermId),
    Next { interval: Option<IntervalSpec>, body: TermId },
    Until { interval: Option<IntervalSpec>, lhs: TermId, rhs: TermId },
    Release { interval: Option<IntervalSpec>, lhs: TermId, rhs: TermId },
    Always { interval: Option<IntervalSpec>, body: TermId },
    Eventually { interval: Option<IntervalSpec>, body: TermId },
}

#[derive(Debug)]
pub(super) struct Ir {
    pub nodes: Vec<NodeInfo>,
    pub terms: Vec<TermInfo>,
    /// Cluster 0 is the root; a nested cluster always has a larger index
    /// than its parent, so reverse index order is innermost-first.
    pub clusters: Vec<Cluster>,
}

pub(super) fn compile(f: &Formula) -> Result<Ir, MonitorError> {
    if let Some(v) = crate::formula::validate_aan(f).into_iter().next() {
        return Err(MonitorError::Unsupported { reason: v.to_string() });
    }
    let mut c = Compiler {
        nodes: Vec::new(),
        terms: Vec::new(),
        clusters: vec![Cluster {
            binder: Binder::Root,
            clock: None,
            root: 0,
            nodes: Vec::new(),
            terms: Vec::new(),
            horizon: Horizon::ZERO,
        }],
        next_trace: 0,
    };
    let (root, free) = c.lower(f, 0)?;
    debug_assert!(free.is_empty(), "a well-scoped formula has no free variables");
    c.clusters[0].root = root;
    let horizons: Vec<Horizon> =
        c.clusters.iter().map(|cl| c.node_horizon(cl.root)).collect();
    for (cl, h) in c.clusters.iter_mut().zip(horizons) {
        cl.horizon = h;
    }
    Ok(Ir { nodes: c.nodes, terms: c.terms, clusters: c.clusters })
}

/// Number of formula nodes in a subtree (used to keep preorder ids
/// aligned when a subtree is stored whole instead of lowered).
fn node_count(f: &Formula) -> usize {
    1 + match &f.kind {
        FormulaKind::True
        | FormulaKind::TimeConstraint { .. }
        | FormulaKind::FrameConstraint { .. }
        | FormulaKind::ModuloConstraint { .. }
        | FormulaKind::IdEquality { .. }
        | FormulaKind::SpatialExists(_)
        | FormulaKind::SpatialForall(_)
        | FormulaKind::FunctionAtom(_) => 0,
        FormulaKind::Not(p)
        | FormulaKind::Next(p)
        | FormulaKind::WeakNext(p)
        | FormulaKind::Previous(p)
        | FormulaKind::WeakPrevious(p) => node_count(p),
        FormulaKind::And(a, b)
        | FormulaKind::Or(a, b)
        | FormulaKind::Implies(a, b)
        | FormulaKind::Until { lhs: a, rhs: b, .. }
        | FormulaKind::Release { lhs: a, rhs: b, .. }
        | FormulaKind::Since { lhs: a, rhs: b } => node_count(a) + node_count(b),
        FormulaKind::Always { body, .. }
        | FormulaKind::Eventually { body, .. }
        | FormulaKind::Exists { body, .. }
        | FormulaKind::Forall { body, .. }
        | FormulaKind::Freeze { body, .. } => node_count(body),
    }
}

/// Check that a past operator's operand is frame-local: no future
/// temporal operators, no clock-recording binders, no spatio-temporal
/// term operators. Nested past operators are fine (they also look only
/// backwards).
fn check_frame_local(f: &Formula) -> Result<(), MonitorError> {
    let fail = |what: &str| {
        Err(MonitorError::Unsupported {
            reason: format!(
                "a past operator's operand contains {what}; the table engine \
                 evaluates past operands frame-locally — use the reference \
                 engine for this formula"
            ),
        })
    };
    match &f.kind {
        FormulaKind::Next(_) | FormulaKind::WeakNext(_) => fail("a next operator"),
        FormulaKind::Until { .. } => fail("an until operator"),
        FormulaKind::Release { .. } => fail("a release operator"),
        FormulaKind::Always { .. } => fail("an always operator"),
        FormulaKind::Eventually { .. } => fail("an eventually operator"),
        FormulaKind::Freeze { .. } => fail("a clock-recording binder"),
        FormulaKind::Exists { freeze: Some(_), .. }
        | FormulaKind::Forall { freeze: Some(_), .. } => fail("a clock-recording binder"),
        FormulaKind::SpatialExists(t) | FormulaKind::SpatialForall(t) => {
            if term_is_static(t) {
                Ok(())
            } else {
                fail("a spatio-temporal term operator")
            }
        }
        FormulaKind::FunctionAtom(a) => {
            let mut ok = true;
            for_each_atom_term(a, &mut |t| ok &= term_is_static(t));
            if ok {
                Ok(())
            } else {
                fail("a spatio-temporal term operator")
            }
        }
        FormulaKind::True
        | FormulaKind::TimeConstraint { .. }
        | FormulaKind::FrameConstraint { .. }
        | FormulaKind::ModuloConstraint { .. }
        | FormulaKind::IdEquality { .. } => Ok(()),
        FormulaKind::Not(p)
        | FormulaKind::Previous(p)
        | FormulaKind::WeakPrevious(p) => check_frame_local(p),
        FormulaKind::And(a, b)
        | FormulaKind::Or(a, b)
        | FormulaKind::Implies(a, b)
        | FormulaKind::Since { lhs: a, rhs: b } => {
            check_frame_local(a)?;
            check_frame_local(b)
        }
        FormulaKind::Exists { body, .. } | FormulaKind::Forall { body, .. } => {
            check_frame_local(body)
        }
    }
}

fn term_is_static(t: &SpatialTerm) -> bool {
    match &t.kind {
        SpatialTermKind::BBoxOf(_)
        | SpatialTermKind::EmptySet
        | SpatialTermKind::Universe => true,
        SpatialTermKind::Complement(a)
        | SpatialTermKind::Interior(a)
        | SpatialTermKind::Closure(a) => term_is_static(a),
        SpatialTermKind::Intersect(a, b) | SpatialTermKind::Union(a, b) => {
            term_is_static(a) && term_is_static(b)
        }
        SpatialTermKind::SpatialUntil { .. }
        | SpatialTermKind::SpatialRelease { .. }
        | SpatialTermKind::SpatialNext { .. }
        | SpatialTermKind::SpatialAlways { .. }
        | SpatialTermKind::SpatialEventually { .. } => false,
    }
}

/// Visit every spatial term embedded in a function atom, in evaluation
/// order (left side first, then a scaled right side).
fn for_each_atom_term<'a>(a: &'a FnAtom, visit: &mut dyn FnMut(&'a SpatialTerm)) {
    fn walk_expr<'a>(
        e: &'a crate::formula::FnExpr,
        visit: &mut dyn FnMut(&'a SpatialTerm),
    ) {
        use crate::formula::FnExpr;
        match e {
            FnExpr::AreaTerm(t) => visit(t),
            FnExpr::Ratio(x, y) => {
                walk_expr(x, visit);
                walk_expr(y, visit);
            }
            _ => {}
        }
    }
    walk_expr(&a.lhs, visit);
    if let FnRhs::Expr { expr, .. } = &a.rhs {
        walk_expr(expr, visit);
    }
}

struct Compiler {
    nodes: Vec<NodeInfo>,
    terms: Vec<TermInfo>,
    clusters: Vec<Cluster>,
    next_trace: usize,
}

impl Compiler {
    fn push_node(
        &mut self,
        ci: usize,
        kind: NodeKind,
        free: BTreeSet<String>,
        trace_id: usize,
    ) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(NodeInfo {
            kind,
            free_vars: free.into_iter().collect(),
            trace_id,
            retain_rows: false,
        });
        self.clusters[ci].nodes.push(id);
        id
    }

    fn push_term(&mut self, ci: usize, kind: TermKind, free: BTreeSet<String>) -> TermId {
        let id = self.terms.len();
        self.terms.push(TermInfo {
            kind,
            free_vars: free.into_iter().collect(),
            retain_rows: false,
        });
        self.clusters[ci].terms.push(id);
        id
    }

    /// Lower `f` into cluster `ci`. Returns the node id and the object-id
    /// variables free in the lowered subtree.
    fn lower(
        &mut self,
        f: &Formula,
        ci: usize,
    ) -> Result<(NodeId, BTreeSet<String>), MonitorError> {
        let trace_id = self.next_trace;
        self.next_trace += 1;
        let (kind, free) = match &f.kind {
            FormulaKind::True => (NodeKind::True, BTreeSet::new()),
            FormulaKind::Not(p) => {
                let (p, free) = self.lower(p, ci)?;
                (NodeKind::Not(p), free)
            }
            FormulaKind::And(a, b) => {
                let (a, fa) = self.lower(a, ci)?;
                let (b, fb) = self.lower(b, ci)?;
                (NodeKind::And(a, b), union(fa, fb))
            }
            FormulaKind::Or(a, b) => {
                let (a, fa) = self.lower(a, ci)?;
                let (b, fb) = self.lower(b, ci)?;
                (NodeKind::Or(a, b), union(fa, fb))
            }
            FormulaKind::Implies(a, b) => {
                let (a, fa) = self.lower(a, ci)?;
                let (b, fb) = self.lower(b, ci)?;
                (NodeKind::Implies(a, b), union(fa, fb))
            }
            FormulaKind::Next(p) => {
                let (p, free) = self.lower(p, ci)?;
                (NodeKind::Next(p), free)
            }
            FormulaKind::WeakNext(p) => {
                let (p, free) = self.lower(p, ci)?;
                (NodeKind::WeakNext(p), free)
            }
            FormulaKind::Until { interval, lhs, rhs } => {
                let (l, fl) = self.lower(lhs, ci)?;
                let (r, fr) = self.lower(rhs, ci)?;
                if interval.is_some() {
                    self.nodes[l].retain_rows = true;
                    self.nodes[r].retain_rows = true;
                }
                (NodeKind::Until { interval: *interval, lhs: l, rhs: r }, union(fl, fr))
            }
            FormulaKind::Release { interval, lhs, rhs } => {
                let (l, fl) = self.lower(lhs, ci)?;
                let (r, fr) = self.lower(rhs, ci)?;
                if interval.is_some() {
                    self.nodes[l].retain_rows = true;
                    self.nodes[r].retain_rows = true;
                }
                (NodeKind::Release { interval: *interval, lhs: l, rhs: r }, union(fl, fr))
            }
            FormulaKind::Always { interval, body } => {
                let (b, free) = self.lower(body, ci)?;
                if interval.is_some() {
                    self.nodes[b].retain_rows = true;
                }
                (NodeKind::Always { interval: *interval, body: b }, free)
            }
            FormulaKind::Eventually { interval, body } => {
                let (b, free) = self.lower(body, ci)?;
                if interval.is_some() {
                    self.nodes[b].retain_rows = true;
                }
                (NodeKind::Eventually { interval: *interval, body: b }, free)
            }
            FormulaKind::Previous(p) | FormulaKind::WeakPrevious(p) => {
                check_frame_local(p)?;
                self.next_trace += node_count(p);
                let weak = matches!(&f.kind, FormulaKind::WeakPrevious(_));
                let free = self.local_free_ids(p, ci);
                (NodeKind::Previous { weak, operand: (**p).clone() }, free)
            }
            FormulaKind::Since { lhs, rhs } => {
                check_frame_local(lhs)?;
                check_frame_local(rhs)?;
                self.next_trace += node_count(lhs) + node_count(rhs);
                let free = union(self.local_free_ids(lhs, ci), self.local_free_ids(rhs, ci));
                (NodeKind::Since { lhs: (**lhs).clone(), rhs: (**rhs).clone() }, free)
            }
            FormulaKind::Exists { id, freeze: None, body }
            | FormulaKind::Forall { id, freeze: None, body } => {
                let universal = matches!(&f.kind, FormulaKind::Forall { .. });
                let (b, mut free) = self.lower(body, ci)?;
                free.remove(id);
                (NodeKind::Quantifier { universal, var: id.clone(), body: b }, free)
            }
            FormulaKind::Exists { id, freeze: Some(clock), body }
            | FormulaKind::Forall { id, freeze: Some(clock), body } => {
                let universal = matches!(&f.kind, FormulaKind::Forall { .. });
                let inner =
                    self.new_cluster(
                        Binder::Quantified { universal, id_var: id.clone() },
                        clock.clone(),
                    );
                let (root, mut free) = self.lower(body, inner)?;
                free.remove(id);
                debug_assert!(free.is_empty(), "inner cluster must be closed");
                self.clusters[inner].root = root;
                (NodeKind::Portal { cluster: inner }, BTreeSet::new())
            }
            FormulaKind::Freeze { var, body } => {
                let inner = self.new_cluster(Binder::Freeze, var.clone());
                let (root, free) = self.lower(body, inner)?;
                debug_assert!(free.is_empty(), "inner cluster must be closed");
                self.clusters[inner].root = root;
                (NodeKind::Portal { cluster: inner }, BTreeSet::new())
            }
            FormulaKind::TimeConstraint { var, cmp, bound } => {
                self.expect_cluster_clock(ci, var);
                (NodeKind::TimeConstraint { cmp: *cmp, bound: *bound }, BTreeSet::new())
            }
            FormulaKind::FrameConstraint { var, cmp, bound } => {
                self.expect_cluster_clock(ci, var);
                (NodeKind::FrameConstraint { cmp: *cmp, bound: *bound }, BTreeSet::new())
            }
            FormulaKind::ModuloConstraint { var, modulus, cmp, bound } => {
                self.expect_cluster_clock(ci, var);
                (
                    NodeKind::ModuloConstraint { modulus: *modulus, cmp: *cmp, bound: *bound },
                    BTreeSet::new(),
                )
            }
            FormulaKind::IdEquality { lhs, rhs, negated } => {
                let free: BTreeSet<String> = [lhs.clone(), rhs.clone()].into();
                (
                    NodeKind::IdEquality { lhs: lhs.clone(), rhs: rhs.clone(), negated: *negated },
                    free,
                )
            }
            FormulaKind::SpatialExists(t) => {
                let (tid, free) = self.lower_term(t, ci);
                (NodeKind::SpatialExists(tid), free)
            }
            FormulaKind::SpatialForall(t) => {
                let (tid, free) = self.lower_term(t, ci);
                (NodeKind::SpatialForall(tid), free)
            }
            FormulaKind::FunctionAtom(a) => {
                let atom = a.clone();
                let mut free = self.local_free_ids(f, ci);
                let mut terms = Vec::new();
                {
                    let mut refs: Vec<&SpatialTerm> = Vec::new();
                    for_each_atom_term(&atom, &mut |t| refs.push(t));
                    for t in refs {
                        let (tid, tfree) = self.lower_term(t, ci);
                        free.extend(tfree);
                        terms.push((t as *const SpatialTerm as usize, tid));
                    }
                }
                (NodeKind::FnAtom { atom, terms }, free)
            }
        };
        Ok((self.push_node(ci, kind, free.clone(), trace_id), free))
    }

    fn lower_term(&mut self, t: &SpatialTerm, ci: usize) -> (TermId, BTreeSet<String>) {
        let (kind, free) = match &t.kind {
            SpatialTermKind::BBoxOf(v) => {
                (TermKind::BBoxOf(v.clone()), BTreeSet::from([v.clone()]))
            }
            SpatialTermKind::EmptySet => (TermKind::EmptySet, BTreeSet::new()),
            SpatialTermKind::Universe => (TermKind::Universe, BTreeSet::new()),
            SpatialTermKind::Complement(a) => {
                let (a, free) = self.lower_term(a, ci);
                (TermKind::Complement(a), free)
            }
            SpatialTermKind::Interior(a) => {
                let (a, free) = self.lower_term(a, ci);
                (TermKind::Interior(a), free)
            }
            SpatialTermKind::Closure(a) => {
                let (a, free) = self.lower_term(a, ci);
                (TermKind::Closure(a), free)
            }
            SpatialTermKind::Intersect(a, b) => {
                let (a, fa) = self.lower_term(a, ci);
                let (b, fb) = self.lower_term(b, ci);
                (TermKind::Intersect(a, b), union(fa, fb))
            }
            SpatialTermKind::Union(a, b) => {
                let (a, fa) = self.lower_term(a, ci);
                let (b, fb) = self.lower_term(b, ci);
                (TermKind::Union(a, b), union(fa, fb))
            }
            SpatialTermKind::SpatialNext { interval, body } => {
                let (b, free) = self.lower_term(body, ci);
                (TermKind::Next { interval: *interval, body: b }, free)
            }
            SpatialTermKind::SpatialUntil { interval, lhs, rhs } => {
                let (l, fl) = self.lower_term(lhs, ci);
                let (r, fr) = self.lower_term(rhs, ci);
                if interval.is_some() {
                    self.terms[l].retain_rows = true;
                    self.terms[r].retain_rows = true;
                }
                (TermKind::Until { interval: *interval, lhs: l, rhs: r }, union(fl, fr))
            }
            SpatialTermKind::SpatialRelease { interval, lhs, rhs } => {
                let (l, fl) = self.lower_term(lhs, ci);
                let (r, fr) = self.lower_term(rhs, ci);
                if interval.is_some() {
                    self.terms[l].retain_rows = true;
                    self.terms[r].retain_rows = true;
                }
                (TermKind::Release { interval: *interval, lhs: l, rhs: r }, union(fl, fr))
            }
            SpatialTermKind::SpatialAlways { interval, body } => {
                let (b, free) = self.lower_term(body, ci);
                if interval.is_some() {
                    self.terms[b].retain_rows = true;
                }
                (TermKind::Always { interval: *interval, body: b }, free)
            }
            SpatialTermKind::SpatialEventually { interval, body } => {
                let (b, free) = self.lower_term(body, ci);
                if interval.is_some() {
                    self.terms[b].retain_rows = true;
                }
                (TermKind::Eventually { interval: *interval, body: b }, free)
            }
        };
        (self.push_term(ci, kind, free.clone()), free)
    }

    fn new_cluster(&mut self, binder: Binder, clock: String) -> usize {
        let id = self.clusters.len();
        self.clusters.push(Cluster {
            binder,
            clock: Some(clock),
            root: 0,
            nodes: Vec::new(),
            terms: Vec::new(),
            horizon: Horizon::ZERO,
        });
        id
    }

    /// Free object-id variables of a stored (non-lowered) subformula:
    /// everything free except the cluster's clock.
    fn local_free_ids(&self, f: &Formula, ci: usize) -> BTreeSet<String> {
        let mut free = free_variables(f);
        if let Some(clock) = &self.clusters[ci].clock {
            free.remove(clock);
        }
        free
    }

    /// A clock constraint can only reference the nearest enclosing
    /// recording binder's clock: anything else is either unbound (caught
    /// by the parser's scope check) or a cross-binder reference (caught
    /// by the nesting validation).
    fn expect_cluster_clock(&self, ci: usize, var: &str) {
        debug_assert_eq!(
            self.clusters[ci].clock.as_deref(),
            Some(var),
            "constraint clock must be the cluster's own binder"
        );
    }

    fn node_horizon(&self, id: NodeId) -> Horizon {
        match &self.nodes[id].kind {
            NodeKind::True
            | NodeKind::Previous { .. }
            | NodeKind::Since { .. }
            | NodeKind::Portal { .. }
            | NodeKind::TimeConstraint { .. }
            | NodeKind::FrameConstraint { .. }
            | NodeKind::ModuloConstraint { .. }
            | NodeKind::IdEquality { .. } => Horizon::ZERO,
            NodeKind::Not(p) => self.node_horizon(*p),
            NodeKind::And(a, b) | NodeKind::Or(a, b) | NodeKind::Implies(a, b) => {
                self.node_horizon(*a).join(self.node_horizon(*b))
            }
            NodeKind::Next(p) | NodeKind::WeakNext(p) => self.node_horizon(*p).add_frames(1),
            NodeKind::Until { interval, lhs, rhs }
            | NodeKind::Release { interval, lhs, rhs } => self
                .node_horizon(*lhs)
                .join(self.node_horizon(*rhs))
                .through_window(interval),
            NodeKind::Always { interval, body } | NodeKind::Eventually { interval, body } => {
                self.node_horizon(*body).through_window(interval)
            }
            NodeKind::Quantifier { body, .. } => self.node_horizon(*body),
            NodeKind::SpatialExists(t) | NodeKind::SpatialForall(t) => self.term_horizon(*t),
            NodeKind::FnAtom { terms, .. } => terms
                .iter()
                .map(|(_, t)| self.term_horizon(*t))
                .fold(Horizon::ZERO, Horizon::join),
        }
    }

    fn term_horizon(&self, id: TermId) -> Horizon {
        match &self.terms[id].kind {
            TermKind::BBoxOf(_) | TermKind::EmptySet | TermKind::Universe => Horizon::ZERO,
            TermKind::Complement(a) | TermKind::Interior(a) | TermKind::Closure(a) => {
                self.term_horizon(*a)
            }
            TermKind::Intersect(a, b) | TermKind::Union(a, b) => {
                self.term_horizon(*a).join(self.term_horizon(*b))
            }
            TermKind::Next { body, .. } => self.term_horizon(*body).add_frames(1),
            TermKind::Until { interval, lhs, rhs }
            | TermKind::Release { interval, lhs, rhs } => self
                .term_horizon(*lhs)
                .join(self.term_horizon(*rhs))
                .through_window(interval),
            TermKind::Always { interval, body } | TermKind::Eventually { interval, body } => {
                self.term_horizon(*body).through_window(interval)
            }
        }
    }
}

fn union(mut a: BTreeSet<String>, b: BTreeSet<String>) -> BTreeSet<String> {
    a.extend(b);
    a
}

/// Formula subtrees in postorder, each tagged with its preorder index —
/// the same numbering [`compile`] assigns to trace ids.
pub(super) fn postorder_with_ids(f: &Formula) -> Vec<(usize, &Formula)> {
    fn walk<'a>(f: &'a Formula, next: &mut usize, out: &mut Vec<(usize, &'a Formula)>) {
        let id = *next;
        *next += 1;
        match &f.kind {
            FormulaKind::True
            | FormulaKind::TimeConstraint { .. }
            | FormulaKind::FrameConstraint { .. }
            | FormulaKind::ModuloConstraint { .. }
            | FormulaKind::IdEquality { .. }
            | FormulaKind::SpatialExists(_)
            | FormulaKind::SpatialForall(_)
            | FormulaKind::FunctionAtom(_) => {}
            FormulaKind::Not(p)
            | FormulaKind::Next(p)
            | FormulaKind::WeakNext(p)
            | FormulaKind::Previous(p)
            | FormulaKind::WeakPrevious(p) => walk(p, next, out),
            FormulaKind::And(a, b)
            | FormulaKind::Or(a, b)
            | FormulaKind::Implies(a, b)
            | FormulaKind::Until { lhs: a, rhs: b, .. }
            | FormulaKind::Release { lhs: a, rhs: b, .. }
            | FormulaKind::Since { lhs: a, rhs: b } => {
                walk(a, next, out);
                walk(b, next, out);
            }
            FormulaKind::Always { body, .. }
            | FormulaKind::Eventually { body, .. }
            | FormulaKind::Exists { body, .. }
            | FormulaKind::Forall { body, .. }
            | FormulaKind::Freeze { body, .. } => walk(body, next, out),
        }
        out.push((id, f));
    }
    let mut out = Vec::new();
    let mut next = 0;
    walk(f, &mut next, &mut out);
    out
}
