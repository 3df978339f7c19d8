//! Backward-sweep evaluation of compiled clusters.
//!
//! A cluster anchored at frame `t` is evaluated by one sweep: `u` runs
//! from the sweep top down to `t`, and for every node a row of cells —
//! one per assignment ("combo") of the node's free object-id variables —
//! is filled from the children's rows. Future operators without windows
//! use the previous row (`u + 1`) as a recurrence; windowed ones scan
//! retained child rows; past operators re-evaluate their frame-local
//! operands against the stream directly, so the sweep never depends on
//! rows below `u`.
//!
//! When horizon shortcuts truncate a sweep, cells near the top whose own
//! lookahead crosses the sweep boundary may be partial, but the horizon
//! is the maximum lookahead of the whole cluster, so no such cell is ever
//! consumed by the anchored output value (inductively: every operator's
//! horizon covers its own lookahead plus its children's).

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::datastream::DataStream;
use crate::formula::{IntervalSpec, IntervalUnit, SpatialTerm};
use crate::functions::{eval_fn_atom, wrapped_frame_offset, BbResolution, Env};
use crate::ref_eval::{self, EvalConfig};
use crate::spatial::Region;

use super::compile::{Binder, Cluster, Ir, NodeId, NodeKind, TermId, TermKind};
use super::{MonitorConfig, MonitorCounters, MonitorError, RegionSample};

/// An assignment of objects to a node's free variables, aligned with the
/// node's sorted `free_vars`.
type Combo = Vec<u64>;
type BoolTable = HashMap<Combo, bool>;
type RegionTable = HashMap<Combo, Region>;

pub(super) struct Engine<'a> {
    pub d: &'a DataStream,
    pub ir: &'a Ir,
    pub cfg: &'a MonitorConfig,
    /// Every object id seen anywhere in the stream, ascending: the combo
    /// domain for plainly-quantified variables (their cells are carried
    /// across frames by the recurrences, so the domain cannot shrink to
    /// the per-frame population).
    pub all_ids: Vec<u64>,
}

/// Counters collected by one sweep; merged into [`MonitorCounters`].
#[derive(Clone, Debug, Default)]
pub(super) struct LocalStats {
    budget: Option<usize>,
    node_evaluations: u64,
    region_ops: u64,
    peak_region_boxes: usize,
    size_log: Vec<RegionSample>,
}

impl LocalStats {
    fn note_region(&mut self, r: &Region, frame: usize) -> Result<(), MonitorError> {
        self.region_ops += 1;
        let boxes = r.box_count();
        self.peak_region_boxes = self.peak_region_boxes.max(boxes);
        match self.budget {
            Some(budget) if boxes > budget => {
                Err(MonitorError::BoxBudgetExceeded { frame, boxes, budget })
            }
            _ => Ok(()),
        }
    }

    fn merge_into(self, c: &mut MonitorCounters) {
        c.node_evaluations += self.node_evaluations;
        c.region_ops += self.region_ops;
        c.peak_region_boxes = c.peak_region_boxes.max(self.peak_region_boxes);
        c.region_size_log.extend(self.size_log);
    }
}

/// Per-node sweep storage: the row being filled (`cur`), the previous
/// sweep frame's row (`prev`, i.e. `u + 1`), and — for children of
/// windowed operators — every row by frame.
#[derive(Default)]
struct BoolState {
    cur: BoolTable,
    prev: BoolTable,
    rows: Vec<Option<BoolTable>>,
}

#[derive(Default)]
struct RegionState {
    cur: RegionTable,
    prev: RegionTable,
    rows: Vec<Option<RegionTable>>,
}

#[derive(Serialize)]
struct TraceCell<'a> {
    subformula_id: usize,
    t: usize,
    u: usize,
    combo: BTreeMap<&'a str, u64>,
    value: bool,
}

impl<'a> Engine<'a> {
    pub(super) fn run(
        &self,
        mut trace: Option<&mut dyn Write>,
    ) -> Result<(bool, MonitorCounters), MonitorError> {
        let n = self.d.len();
        let mut counters = MonitorCounters { frames: n, ..Default::default() };
        if n == 0 {
            return Ok((false, counters));
        }
        // Inner clusters have larger indices than their parents, so
        // reverse index order evaluates innermost-first; portals then
        // only ever read finished value vectors.
        let nc = self.ir.clusters.len();
        let mut cluster_values: Vec<Vec<bool>> = vec![Vec::new(); nc];
        let mut verdict = false;
        for ci in (0..nc).rev() {
            if ci == 0 {
                let (v, st) = self.sweep(0, 0, &cluster_values, &mut trace)?;
                verdict = v;
                st.merge_into(&mut counters);
            } else if self.cfg.parallel_id_combinations && trace.is_none() {
                let results: Vec<(bool, LocalStats)> = (0..n)
                    .into_par_iter()
                    .map(|t| {
                        let mut no_trace: Option<&mut dyn Write> = None;
                        self.sweep(ci, t, &cluster_values, &mut no_trace)
                    })
                    .collect::<Result<_, _>>()?;
                let mut vals = Vec::with_capacity(n);
                for (v, st) in results {
                    vals.push(v);
                    st.merge_into(&mut counters);
                }
                cluster_values[ci] = vals;
            } else {
                let mut vals = Vec::with_capacity(n);
                for t in 0..n {
                    let (v, st) = self.sweep(ci, t, &cluster_values, &mut trace)?;
                    vals.push(v);
                    st.merge_into(&mut counters);
                }
                cluster_values[ci] = vals;
            }
        }
        Ok((verdict, counters))
    }

    /// Evaluate one cluster anchored at frame `t`.
    fn sweep(
        &self,
        ci: usize,
        t: usize,
        cluster_values: &[Vec<bool>],
        trace: &mut Option<&mut dyn Write>,
    ) -> Result<(bool, LocalStats), MonitorError> {
        let cluster = &self.ir.clusters[ci];
        let n = self.d.len();
        // Tracing wants every emitted cell exact, so it disables the
        // shortcut (partial cells only ever appear above the consumed
        // cone, but a trace reader should not have to know that).
        let top = if self.cfg.horizon_shortcuts && trace.is_none() {
            self.sweep_top(cluster, t)
        } else {
            n - 1
        };
        let frozen_var: Option<&str> = match &cluster.binder {
            Binder::Quantified { id_var, .. } => Some(id_var.as_str()),
            _ => None,
        };
        let frozen_domain: Vec<u64> = self.d.ids(t).collect();

        let mut node_combos: Vec<Vec<Combo>> = vec![Vec::new(); self.ir.nodes.len()];
        for &nid in &cluster.nodes {
            node_combos[nid] =
                self.combos(&self.ir.nodes[nid].free_vars, frozen_var, &frozen_domain);
        }
        let mut term_combos: Vec<Vec<Combo>> = vec![Vec::new(); self.ir.terms.len()];
        for &tid in &cluster.terms {
            term_combos[tid] =
                self.combos(&self.ir.terms[tid].free_vars, frozen_var, &frozen_domain);
        }

        // Environments for nodes that evaluate against the stream
        // directly. Bindings do not depend on the sweep frame (attribute
        // lookup frames are resolved at use), so one list per node serves
        // the whole sweep.
        let mut envs: Vec<Option<Vec<Env>>> = vec![None; self.ir.nodes.len()];
        for &nid in &cluster.nodes {
            let info = &self.ir.nodes[nid];
            let needs_env = matches!(
                info.kind,
                NodeKind::Previous { .. }
                    | NodeKind::Since { .. }
                    | NodeKind::SpatialExists(_)
                    | NodeKind::SpatialForall(_)
                    | NodeKind::FnAtom { .. }
            );
            if needs_env {
                envs[nid] = Some(
                    node_combos[nid]
                        .iter()
                        .map(|c| {
                            self.env_for(
                                &info.free_vars,
                                c,
                                frozen_var,
                                t,
                                cluster.clock.as_deref(),
                            )
                        })
                        .collect(),
                );
            }
        }

        let mut fstate: Vec<BoolState> = self
            .ir
            .nodes
            .iter()
            .map(|info| BoolState {
                rows: if info.retain_rows { vec![None; n] } else { Vec::new() },
                ..Default::default()
            })
            .collect();
        let mut tstate: Vec<RegionState> = self
            .ir
            .terms
            .iter()
            .map(|info| RegionState {
                rows: if info.retain_rows { vec![None; n] } else { Vec::new() },
                ..Default::default()
            })
            .collect();

        let mut stats = LocalStats { budget: self.cfg.max_region_boxes, ..Default::default() };

        for u in (t..=top).rev() {
            for &tid in &cluster.terms {
                let mut cur = RegionTable::with_capacity(term_combos[tid].len());
                for combo in &term_combos[tid] {
                    let r =
                        self.term_value(tid, combo, u, t, top, frozen_var, &tstate, &mut stats)?;
                    if self.cfg.record_region_sizes {
                        stats.size_log.push(RegionSample {
                            term: tid,
                            frame: u,
                            boxes: r.box_count(),
                        });
                    }
                    cur.insert(combo.clone(), r);
                }
                tstate[tid].cur = cur;
            }
            for &nid in &cluster.nodes {
                let mut cur = BoolTable::with_capacity(node_combos[nid].len());
                for (idx, combo) in node_combos[nid].iter().enumerate() {
                    let v = self.node_value(
                        nid,
                        combo,
                        idx,
                        u,
                        t,
                        top,
                        &fstate,
                        &tstate,
                        &envs,
                        cluster_values,
                        &mut stats,
                    )?;
                    stats.node_evaluations += 1;
                    if let Some(w) = trace.as_deref_mut() {
                        let info = &self.ir.nodes[nid];
                        let cell = TraceCell {
                            subformula_id: info.trace_id,
                            t,
                            u,
                            combo: info
                                .free_vars
                                .iter()
                                .map(String::as_str)
                                .zip(combo.iter().copied())
                                .collect(),
                            value: v,
                        };
                        serde_json::to_writer(&mut *w, &cell).map_err(io::Error::from)?;
                        w.write_all(b"\n")?;
                    }
                    cur.insert(combo.clone(), v);
                }
                fstate[nid].cur = cur;
            }
            for &tid in &cluster.terms {
                let st = &mut tstate[tid];
                let row = std::mem::take(&mut st.cur);
                if self.ir.terms[tid].retain_rows {
                    st.rows[u] = Some(row.clone());
                }
                st.prev = row;
            }
            for &nid in &cluster.nodes {
                let st = &mut fstate[nid];
                let row = std::mem::take(&mut st.cur);
                if self.ir.nodes[nid].retain_rows {
                    st.rows[u] = Some(row.clone());
                }
                st.prev = row;
            }
        }

        // After the final rotation `prev` holds the row at `u == t`.
        let root_row = &fstate[cluster.root].prev;
        let value = match &cluster.binder {
            Binder::Root | Binder::Freeze => {
                root_row.get(&Vec::new()).copied().unwrap_or(false)
            }
            Binder::Quantified { universal, id_var } => {
                let root_free = &self.ir.nodes[cluster.root].free_vars;
                let uses_var = root_free.iter().any(|v| v == id_var);
                let cell = |k: u64| {
                    let key = if uses_var { vec![k] } else { Vec::new() };
                    root_row.get(&key).copied()
                };
                if *universal {
                    frozen_domain.iter().all(|&k| cell(k).unwrap_or(true))
                } else {
                    frozen_domain.iter().any(|&k| cell(k).unwrap_or(false))
                }
            }
        };
        Ok((value, stats))
    }

    /// Sweep start for an anchored evaluation: the anchor plus the
    /// cluster's lookahead, where second-based lookahead is converted via
    /// the worst-case frame span of such a window anywhere in the stream.
    fn sweep_top(&self, cluster: &Cluster, t: usize) -> usize {
        let n = self.d.len();
        let h = cluster.horizon;
        if h.unbounded {
            return n - 1;
        }
        let mut top = t.saturating_add(h.frames);
        if h.time_windows > 0 {
            top = top
                .saturating_add(h.time_windows.saturating_mul(self.frames_covering(h.seconds)));
        }
        top.min(n - 1)
    }

    /// Max over start frames `w` of the least `Δ` with
    /// `τ(w+Δ) − τ(w) > s`; the whole stream length when some suffix
    /// never exceeds `s`.
    fn frames_covering(&self, s: f64) -> usize {
        let n = self.d.len();
        let mut best = 0;
        let mut e = 0;
        for w in 0..n {
            if e < w {
                e = w;
            }
            while e < n && self.d.timestamp(e) - self.d.timestamp(w) <= s {
                e += 1;
            }
            if e == n {
                return n;
            }
            best = best.max(e - w);
        }
        best
    }

    fn offset(&self, unit: IntervalUnit, from: usize, to: usize) -> f64 {
        match unit {
            IntervalUnit::Time => self.d.timestamp(to) - self.d.timestamp(from),
            IntervalUnit::Frame => (to - from) as f64,
        }
    }

    fn env_for(
        &self,
        free: &[String],
        combo: &[u64],
        frozen_var: Option<&str>,
        t: usize,
        clock: Option<&str>,
    ) -> Env {
        let mut env = Env::new();
        for (var, &obj) in free.iter().zip(combo) {
            let frozen = if Some(var.as_str()) == frozen_var { Some(t) } else { None };
            env = env.bind_id(var, obj, frozen);
        }
        if let Some(c) = clock {
            env = env.bind_clock(c, t);
        }
        env
    }

    fn combos(
        &self,
        free: &[String],
        frozen_var: Option<&str>,
        frozen_domain: &[u64],
    ) -> Vec<Combo> {
        let mut out = vec![Vec::new()];
        for v in free {
            let dom: &[u64] = if Some(v.as_str()) == frozen_var {
                frozen_domain
            } else {
                &self.all_ids
            };
            let mut next = Vec::with_capacity(out.len() * dom.len());
            for c in &out {
                for &k in dom {
                    let mut c2 = c.clone();
                    c2.push(k);
                    next.push(c2);
                }
            }
            out = next;
        }
        out
    }

    fn ref_cfg(&self) -> EvalConfig {
        EvalConfig { bb_resolution: self.cfg.bb_resolution }
    }

    fn term_vars_resolve(&self, tid: TermId, u: usize, env: &Env) -> bool {
        self.ir.terms[tid].free_vars.iter().all(|v| env.resolve(self.d, u, v).is_some())
    }

    /// A child's boolean cell in the current row.
    fn child_bool(
        &self,
        child: NodeId,
        parent_free: &[String],
        combo: &[u64],
        fstate: &[BoolState],
    ) -> bool {
        let key = project(&self.ir.nodes[child].free_vars, parent_free, combo);
        *fstate[child].cur.get(&key).expect("child cell computed earlier this frame")
    }

    /// A child's boolean cell at frame `w ≥ u` (current row or a retained
    /// one).
    fn row_bool(
        &self,
        child: NodeId,
        parent_free: &[String],
        combo: &[u64],
        u: usize,
        w: usize,
        fstate: &[BoolState],
    ) -> bool {
        let key = project(&self.ir.nodes[child].free_vars, parent_free, combo);
        let tbl = if w == u {
            &fstate[child].cur
        } else {
            fstate[child].rows[w].as_ref().expect("windowed child row retained")
        };
        *tbl.get(&key).expect("child cell computed")
    }

    fn child_region<'r>(
        &self,
        child: TermId,
        parent_free: &[String],
        combo: &[u64],
        tbl: &'r RegionTable,
    ) -> &'r Region {
        let key = project(&self.ir.terms[child].free_vars, parent_free, combo);
        tbl.get(&key).expect("term cell computed earlier this frame")
    }

    fn region_row<'r>(
        &self,
        child: TermId,
        parent_free: &[String],
        combo: &[u64],
        u: usize,
        w: usize,
        tstate: &'r [RegionState],
    ) -> &'r Region {
        let tbl = if w == u {
            &tstate[child].cur
        } else {
            tstate[child].rows[w].as_ref().expect("windowed term row retained")
        };
        self.child_region(child, parent_free, combo, tbl)
    }

    fn canon_if(
        &self,
        r: Region,
        u: usize,
        stats: &mut LocalStats,
    ) -> Result<Region, MonitorError> {
        if self.cfg.canonicalize_regions {
            let c = r.canonicalize();
            stats.note_region(&c, u)?;
            Ok(c)
        } else {
            Ok(r)
        }
    }

    /// Mirror of the reference until-family scan over table rows; the
    /// negation flags give `release`/`always` as duals.
    #[allow(clippy::too_many_arguments)]
    fn windowed_scan(
        &self,
        lhs: Option<(NodeId, bool)>,
        (rhs, neg_rhs): (NodeId, bool),
        iv: &IntervalSpec,
        parent_free: &[String],
        combo: &[u64],
        u: usize,
        top: usize,
        fstate: &[BoolState],
    ) -> bool {
        for w in u..=top {
            let off = self.offset(iv.unit, u, w);
            if iv.exceeded_by(off) {
                break;
            }
            if iv.contains(off)
                && self.row_bool(rhs, parent_free, combo, u, w, fstate) != neg_rhs
            {
                return true;
            }
            if let Some((l, neg_l)) = lhs {
                if self.row_bool(l, parent_free, combo, u, w, fstate) == neg_l {
                    return false;
                }
            }
        }
        false
    }

    #[allow(clippy::too_many_arguments)]
    fn node_value(
        &self,
        nid: NodeId,
        combo: &[u64],
        combo_idx: usize,
        u: usize,
        t: usize,
        top: usize,
        fstate: &[BoolState],
        tstate: &[RegionState],
        envs: &[Option<Vec<Env>>],
        cluster_values: &[Vec<bool>],
        stats: &mut LocalStats,
    ) -> Result<bool, MonitorError> {
        let info = &self.ir.nodes[nid];
        let free = &info.free_vars;
        let n = self.d.len();
        let cur = |child: NodeId| self.child_bool(child, free, combo, fstate);
        let own_prev = |default: bool| {
            fstate[nid].prev.get(combo).copied().unwrap_or(default)
        };
        let env = |idx: usize| -> &Env {
            &envs[nid].as_ref().expect("environment built for stream-evaluating node")[idx]
        };
        let value = match &info.kind {
            NodeKind::True => true,
            NodeKind::Not(p) => !cur(*p),
            NodeKind::And(a, b) => cur(*a) && cur(*b),
            NodeKind::Or(a, b) => cur(*a) || cur(*b),
            NodeKind::Implies(a, b) => !cur(*a) || cur(*b),
            NodeKind::Next(p) => {
                u + 1 < n
                    && {
                        let key = project(&self.ir.nodes[*p].free_vars, free, combo);
                        fstate[*p].prev.get(&key).copied().unwrap_or(false)
                    }
            }
            NodeKind::WeakNext(p) => {
                u + 1 >= n || {
                    let key = project(&self.ir.nodes[*p].free_vars, free, combo);
                    fstate[*p].prev.get(&key).copied().unwrap_or(true)
                }
            }
            NodeKind::Until { interval: None, lhs, rhs } => {
                cur(*rhs) || (cur(*lhs) && own_prev(false))
            }
            NodeKind::Release { interval: None, lhs, rhs } => {
                cur(*rhs) && (cur(*lhs) || own_prev(true))
            }
            NodeKind::Always { interval: None, body } => cur(*body) && own_prev(true),
            NodeKind::Eventually { interval: None, body } => cur(*body) || own_prev(false),
            NodeKind::Until { interval: Some(iv), lhs, rhs } => self.windowed_scan(
                Some((*lhs, false)),
                (*rhs, false),
                iv,
                free,
                combo,
                u,
                top,
                fstate,
            ),
            NodeKind::Release { interval: Some(iv), lhs, rhs } => !self.windowed_scan(
                Some((*lhs, true)),
                (*rhs, true),
                iv,
                free,
                combo,
                u,
                top,
                fstate,
            ),
            NodeKind::Eventually { interval: Some(iv), body } => {
                self.windowed_scan(None, (*body, false), iv, free, combo, u, top, fstate)
            }
            NodeKind::Always { interval: Some(iv), body } => {
                !self.windowed_scan(None, (*body, true), iv, free, combo, u, top, fstate)
            }
            NodeKind::Previous { weak, operand } => {
                if u == 0 {
                    *weak
                } else {
                    ref_eval::eval_with(self.d, operand, u - 1, env(combo_idx), self.ref_cfg())
                }
            }
            NodeKind::Since { lhs, rhs } => {
                let env = env(combo_idx);
                let cfg = self.ref_cfg();
                let mut value = false;
                for w in (0..=u).rev() {
                    if ref_eval::eval_with(self.d, rhs, w, env, cfg) {
                        value = true;
                        break;
                    }
                    if !ref_eval::eval_with(self.d, lhs, w, env, cfg) {
                        break;
                    }
                }
                value
            }
            NodeKind::Quantifier { universal, var, body } => {
                let child_free = &self.ir.nodes[*body].free_vars;
                let mut value = *universal;
                for k in self.d.ids(u) {
                    let key = project_with(child_free, free, combo, Some((var, k)));
                    let v = *fstate[*body].cur.get(&key).expect("quantifier child cell");
                    if *universal {
                        if !v {
                            value = false;
                            break;
                        }
                    } else if v {
                        value = true;
                        break;
                    }
                }
                value
            }
            NodeKind::Portal { cluster } => cluster_values[*cluster][u],
            NodeKind::TimeConstraint { cmp, bound } => {
                cmp.test_f64(self.d.timestamp(u) - self.d.timestamp(t), *bound)
            }
            NodeKind::FrameConstraint { cmp, bound } => {
                cmp.test_i64(u as i64 - t as i64, *bound)
            }
            NodeKind::ModuloConstraint { modulus, cmp, bound } => {
                cmp.test_i64(wrapped_frame_offset(u as i64 - t as i64, *modulus), *bound)
            }
            NodeKind::IdEquality { lhs, rhs, negated } => {
                let pos = |v: &String| {
                    free.iter().position(|f| f == v).expect("equality variables are free")
                };
                (combo[pos(lhs)] == combo[pos(rhs)]) != *negated
            }
            NodeKind::SpatialExists(tid) => {
                self.term_vars_resolve(*tid, u, env(combo_idx))
                    && !self.child_region(*tid, free, combo, &tstate[*tid].cur).is_empty()
            }
            NodeKind::SpatialForall(tid) => {
                self.term_vars_resolve(*tid, u, env(combo_idx))
                    && {
                        stats.region_ops += 1;
                        self.child_region(*tid, free, combo, &tstate[*tid].cur).is_universe()
                    }
            }
            NodeKind::FnAtom { atom, terms } => {
                let env = env(combo_idx);
                let mut area = |term: &SpatialTerm| -> Option<f64> {
                    let addr = term as *const SpatialTerm as usize;
                    let (_, tid) =
                        *terms.iter().find(|(a, _)| *a == addr).expect("registered atom term");
                    if !self.term_vars_resolve(tid, u, env) {
                        return None;
                    }
                    stats.region_ops += 1;
                    Some(self.child_region(tid, free, combo, &tstate[tid].cur).area())
                };
                eval_fn_atom(self.d, u, env, atom, &mut area)
            }
        };
        Ok(value)
    }

    #[allow(clippy::too_many_arguments)]
    fn term_value(
        &self,
        tid: TermId,
        combo: &[u64],
        u: usize,
        t: usize,
        top: usize,
        frozen_var: Option<&str>,
        tstate: &[RegionState],
        stats: &mut LocalStats,
    ) -> Result<Region, MonitorError> {
        let info = &self.ir.terms[tid];
        let free = &info.free_vars;
        let universe = self.d.universe();
        let n = self.d.len();
        let cur = |child: TermId| self.child_region(child, free, combo, &tstate[child].cur);
        let value = match &info.kind {
            TermKind::BBoxOf(var) => {
                let pos = free.iter().position(|v| v == var).expect("box variable is free");
                let object = combo[pos];
                let frame = if Some(var.as_str()) == frozen_var {
                    match self.cfg.bb_resolution {
                        BbResolution::Frozen => t,
                        BbResolution::Current => u,
                    }
                } else {
                    u
                };
                match self.d.retrieve(frame, object) {
                    Some(o) => {
                        let r = Region::from_box(o.bbox, universe);
                        stats.note_region(&r, u)?;
                        r
                    }
                    None => Region::empty(universe),
                }
            }
            TermKind::EmptySet => Region::empty(universe),
            TermKind::Universe => {
                let r = Region::full(universe);
                stats.note_region(&r, u)?;
                r
            }
            TermKind::Complement(a) => {
                let r = cur(*a).complement();
                stats.note_region(&r, u)?;
                r
            }
            TermKind::Interior(a) => {
                let r = cur(*a).interior();
                stats.note_region(&r, u)?;
                r
            }
            TermKind::Closure(a) => {
                let r = cur(*a).closure();
                stats.note_region(&r, u)?;
                r
            }
            TermKind::Intersect(a, b) => {
                let r = cur(*a).intersect(cur(*b));
                stats.note_region(&r, u)?;
                r
            }
            TermKind::Union(a, b) => {
                let r = cur(*a).union(cur(*b));
                stats.note_region(&r, u)?;
                self.canon_if(r, u, stats)?
            }
            TermKind::Next { interval, body } => {
                if u + 1 >= n {
                    Region::empty(universe)
                } else if interval
                    .as_ref()
                    .is_some_and(|iv| !iv.contains(self.offset(iv.unit, u, u + 1)))
                {
                    Region::empty(universe)
                } else {
                    let key = project(&self.ir.terms[*body].free_vars, free, combo);
                    tstate[*body]
                        .prev
                        .get(&key)
                        .cloned()
                        .unwrap_or_else(|| Region::empty(universe))
                }
            }
            TermKind::Until { interval: None, lhs, rhs } => {
                let hit = match tstate[tid].prev.get(combo) {
                    Some(p) => {
                        let x = cur(*lhs).intersect(p);
                        stats.note_region(&x, u)?;
                        x
                    }
                    None => Region::empty(universe),
                };
                let r = cur(*rhs).union(&hit);
                stats.note_region(&r, u)?;
                self.canon_if(r, u, stats)?
            }
            TermKind::Release { interval: None, lhs, rhs } => {
                let widened = match tstate[tid].prev.get(combo) {
                    Some(p) => {
                        let x = cur(*lhs).union(p);
                        stats.note_region(&x, u)?;
                        x
                    }
                    None => Region::full(universe),
                };
                let r = cur(*rhs).intersect(&widened);
                stats.note_region(&r, u)?;
                self.canon_if(r, u, stats)?
            }
            TermKind::Always { interval: None, body } => {
                let r = match tstate[tid].prev.get(combo) {
                    Some(p) => cur(*body).intersect(p),
                    None => cur(*body).clone(),
                };
                stats.note_region(&r, u)?;
                self.canon_if(r, u, stats)?
            }
            TermKind::Eventually { interval: None, body } => {
                let r = match tstate[tid].prev.get(combo) {
                    Some(p) => cur(*body).union(p),
                    None => cur(*body).clone(),
                };
                stats.note_region(&r, u)?;
                self.canon_if(r, u, stats)?
            }
            TermKind::Until { interval: Some(iv), lhs, rhs } => {
                let mut acc = Region::empty(universe);
                let mut prefix = Region::full(universe);
                for w in u..=top {
                    let off = self.offset(iv.unit, u, w);
                    if iv.exceeded_by(off) {
                        break;
                    }
                    if iv.contains(off) {
                        let hit =
                            self.region_row(*rhs, free, combo, u, w, tstate).intersect(&prefix);
                        stats.note_region(&hit, u)?;
                        acc = acc.union(&hit);
                        stats.note_region(&acc, u)?;
                        acc = self.canon_if(acc, u, stats)?;
                    }
                    prefix = prefix.intersect(self.region_row(*lhs, free, combo, u, w, tstate));
                    stats.note_region(&prefix, u)?;
                    if prefix.is_empty() {
                        break;
                    }
                }
                acc
            }
            // Windowed release as the complement of the windowed until of
            // the complements, inline over the same rows.
            TermKind::Release { interval: Some(iv), lhs, rhs } => {
                let mut acc = Region::empty(universe);
                let mut prefix = Region::full(universe);
                for w in u..=top {
                    let off = self.offset(iv.unit, u, w);
                    if iv.exceeded_by(off) {
                        break;
                    }
                    if iv.contains(off) {
                        let miss =
                            self.region_row(*rhs, free, combo, u, w, tstate).complement();
                        stats.note_region(&miss, u)?;
                        let hit = miss.intersect(&prefix);
                        stats.note_region(&hit, u)?;
                        acc = acc.union(&hit);
                        stats.note_region(&acc, u)?;
                        acc = self.canon_if(acc, u, stats)?;
                    }
                    let keep = self.region_row(*lhs, free, combo, u, w, tstate).complement();
                    stats.note_region(&keep, u)?;
                    prefix = prefix.intersect(&keep);
                    stats.note_region(&prefix, u)?;
                    if prefix.is_empty() {
                        break;
                    }
                }
                let r = acc.complement();
                stats.note_region(&r, u)?;
                r
            }
            TermKind::Always { interval: Some(iv), body } => {
                let mut out = Region::full(universe);
                for w in u..=top {
                    let off = self.offset(iv.unit, u, w);
                    if iv.exceeded_by(off) {
                        break;
                    }
                    if !iv.contains(off) {
                        continue;
                    }
                    out = out.intersect(self.region_row(*body, free, combo, u, w, tstate));
                    stats.note_region(&out, u)?;
                    if out.is_empty() {
                        break;
                    }
                }
                out
            }
            TermKind::Eventually { interval: Some(iv), body } => {
                let mut out = Region::empty(universe);
                for w in u..=top {
                    let off = self.offset(iv.unit, u, w);
                    if iv.exceeded_by(off) {
                        break;
                    }
                    if !iv.contains(off) {
                        continue;
                    }
                    out = out.union(self.region_row(*body, free, combo, u, w, tstate));
                    stats.note_region(&out, u)?;
                    out = self.canon_if(out, u, stats)?;
                }
                out
            }
        };
        Ok(value)
    }
}

/// Build a child's combo key from the parent's.
fn project(child_free: &[String], parent_free: &[String], combo: &[u64]) -> Combo {
    project_with(child_free, parent_free, combo, None)
}

/// Like [`project`], with one extra binding (a quantifier's own
/// variable) overriding the parent assignment.
fn project_with(
    child_free: &[String],
    parent_free: &[String],
    combo: &[u64],
    extra: Option<(&str, u64)>,
) -> Combo {
    child_free
        .iter()
        .map(|v| {
            if let Some((var, k)) = extra {
                if v == var {
                    return k;
                }
            }
            let i = parent_free
                .iter()
                .position(|p| p == v)
                .expect("child variable bound at parent");
            combo[i]
        })
        .collect()
}
