//! Reference evaluator: a direct recursive implementation of the
//! semantics, used as the oracle against which the dynamic-programming
//! monitor is checked.
//!
//! [`eval`] scores a formula at a frame under an environment; [`sval`]
//! computes the region a spatial term denotes. [`satisfies`] evaluates
//! at the first frame and, when the formula is a satisfied chain of
//! top-level existentials, reports a witness assignment.
//!
//! Semantics pinned here (both engines must agree):
//!
//! - `next`/`prev` are false past the stream ends; `wnext`/`wprev` are
//!   true there. `until` is non-strict (the right side may fire
//!   immediately); windows never extend past the recorded stream.
//! - Quantifiers range over the objects of the binding frame: an
//!   existential over an objectless frame is false, a universal true.
//! - Attribute atoms are fail-closed: an absent object, missing
//!   misdetection code, zero denominator, or undefined viewpoint makes
//!   the atom false, whatever the comparison. Identifier equality
//!   compares the bound identifiers themselves and needs no lookup.
//! - A spatial atom (`SE`/`SA`) is false outright when any variable it
//!   mentions fails to resolve at the atom's own frame; inside a
//!   spatial-temporal sweep, a box that is momentarily unresolvable
//!   contributes the empty region instead.

use crate::datastream::DataStream;
use crate::formula::{
    Formula, FormulaKind, IntervalSpec, IntervalUnit, SpatialTerm, SpatialTermKind,
};
use crate::functions::{
    eval_fn_atom, spatial_lookup_frame, BbResolution, Env,
};
use crate::spatial::Region;
use serde::Serialize;

/// Evaluation options for the reference engine.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalConfig {
    pub bb_resolution: BbResolution,
}

/// One variable of a satisfying assignment reported by [`satisfies`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessBinding {
    pub var: String,
    pub object: u64,
    pub frame: usize,
}

/// Overall verdict at the first frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub value: bool,
    /// A satisfying assignment for a leading existential chain, when the
    /// formula has one and the verdict is positive.
    pub witness: Option<Vec<WitnessBinding>>,
}

/// Evaluate `f` at frame `i` of `d` under `env` with default options.
pub fn eval(d: &DataStream, f: &Formula, i: usize, env: &Env) -> bool {
    Evaluator { d, cfg: EvalConfig::default() }.eval(f, i, env)
}

/// [`eval`] with explicit options.
pub fn eval_with(d: &DataStream, f: &Formula, i: usize, env: &Env, cfg: EvalConfig) -> bool {
    Evaluator { d, cfg }.eval(f, i, env)
}

/// The region denoted by a spatial term at frame `i`.
pub fn sval(d: &DataStream, t: &SpatialTerm, i: usize, env: &Env) -> Region {
    Evaluator { d, cfg: EvalConfig::default() }.sval(t, i, env)
}

/// Evaluate at the first frame and extract a witness for a leading
/// existential chain.
pub fn satisfies(d: &DataStream, f: &Formula) -> Verdict {
    satisfies_with(d, f, EvalConfig::default())
}

pub fn satisfies_with(d: &DataStream, f: &Formula, cfg: EvalConfig) -> Verdict {
    verdict_at(d, f, 0, cfg)
}

/// Evaluate at frame `i` and extract a witness for a leading
/// existential chain. Dataset search anchors this at every frame.
pub fn verdict_at(d: &DataStream, f: &Formula, i: usize, cfg: EvalConfig) -> Verdict {
    let ev = Evaluator { d, cfg };
    if i >= d.len() {
        // Past the stream: existentials cannot bind; nothing holds at a
        // frame that was never recorded. The callers all stay in range,
        // so this is defensive.
        return Verdict { value: false, witness: None };
    }
    let mut bindings = Vec::new();
    let value = ev.witness_search(f, i, &Env::new(), &mut bindings);
    let witness = if value && !bindings.is_empty() { Some(bindings) } else { None };
    Verdict { value, witness }
}

struct Evaluator<'a> {
    d: &'a DataStream,
    cfg: EvalConfig,
}

impl<'a> Evaluator<'a> {
    /// Like `eval`, but walks a leading existential chain at frame `i`
    /// recording the first satisfying assignment.
    fn witness_search(
        &self,
        f: &Formula,
        i: usize,
        env: &Env,
        out: &mut Vec<WitnessBinding>,
    ) -> bool {
        if let FormulaKind::Exists { id, freeze, body } = &f.kind {
            let mut ids: Vec<u64> = self.d.ids(i).collect();
            ids.sort_unstable();
            for k in ids {
                let mut env2 = env.bind_id(id, k, freeze.as_ref().map(|_| i));
                if let Some(x) = freeze {
                    env2 = env2.bind_clock(x, i);
                }
                let depth = out.len();
                out.push(WitnessBinding { var: id.clone(), object: k, frame: i });
                if self.witness_search(body, i, &env2, out) {
                    return true;
                }
                out.truncate(depth);
            }
            false
        } else {
            self.eval(f, i, env)
        }
    }

    fn offset(&self, unit: IntervalUnit, from: usize, to: usize) -> f64 {
        match unit {
            IntervalUnit::Time => self.d.timestamp(to) - self.d.timestamp(from),
            IntervalUnit::Frame => (to - from) as f64,
        }
    }

    /// Shared scan for the until family. `lhs`/`rhs` carry a negation
    /// flag so `release` can run as the dual without building formula
    /// nodes. A `None` left side always holds (for `eventually`/`always`).
    fn until_scan(
        &self,
        lhs: Option<(&Formula, bool)>,
        (rhs, neg_rhs): (&Formula, bool),
        interval: Option<IntervalSpec>,
        i: usize,
        env: &Env,
    ) -> bool {
        for u in i..self.d.len() {
            if let Some(iv) = interval {
                let off = self.offset(iv.unit, i, u);
                if iv.exceeded_by(off) {
                    break;
                }
                if iv.contains(off) && self.eval(rhs, u, env) != neg_rhs {
                    return true;
                }
            } else if self.eval(rhs, u, env) != neg_rhs {
                return true;
            }
            if let Some((lhs, neg_lhs)) = lhs {
                if self.eval(lhs, u, env) == neg_lhs {
                    return false;
                }
            }
        }
        false
    }

    fn eval(&self, f: &Formula, i: usize, env: &Env) -> bool {
        match &f.kind {
            FormulaKind::True => true,
            FormulaKind::Not(p) => !self.eval(p, i, env),
            FormulaKind::And(a, b) => self.eval(a, i, env) && self.eval(b, i, env),
            FormulaKind::Or(a, b) => self.eval(a, i, env) || self.eval(b, i, env),
            FormulaKind::Implies(a, b) => !self.eval(a, i, env) || self.eval(b, i, env),
            FormulaKind::Next(p) => i + 1 < self.d.len() && self.eval(p, i + 1, env),
            FormulaKind::WeakNext(p) => i + 1 >= self.d.len() || self.eval(p, i + 1, env),
            FormulaKind::Previous(p) => i > 0 && self.eval(p, i - 1, env),
            FormulaKind::WeakPrevious(p) => i == 0 || self.eval(p, i - 1, env),
            FormulaKind::Until { interval, lhs, rhs } => {
                self.until_scan(Some((lhs, false)), (rhs, false), *interval, i, env)
            }
            FormulaKind::Release { interval, lhs, rhs } => {
                !self.until_scan(Some((lhs, true)), (rhs, true), *interval, i, env)
            }
            FormulaKind::Eventually { interval, body } => {
                self.until_scan(None, (body, false), *interval, i, env)
            }
            FormulaKind::Always { interval, body } => {
                !self.until_scan(None, (body, true), *interval, i, env)
            }
            FormulaKind::Since { lhs, rhs } => {
                for u in (0..=i).rev() {
                    if self.eval(rhs, u, env) {
                        return true;
                    }
                    if !self.eval(lhs, u, env) {
                        return false;
                    }
                }
                false
            }
            FormulaKind::Exists { id, freeze, body } => {
                self.d.ids(i).collect::<Vec<_>>().into_iter().any(|k| {
                    let mut env2 = env.bind_id(id, k, freeze.as_ref().map(|_| i));
                    if let Some(x) = freeze {
                        env2 = env2.bind_clock(x, i);
                    }
                    self.eval(body, i, &env2)
                })
            }
            FormulaKind::Forall { id, freeze, body } => {
                self.d.ids(i).collect::<Vec<_>>().into_iter().all(|k| {
                    let mut env2 = env.bind_id(id, k, freeze.as_ref().map(|_| i));
                    if let Some(x) = freeze {
                        env2 = env2.bind_clock(x, i);
                    }
                    self.eval(body, i, &env2)
                })
            }
            FormulaKind::Freeze { var, body } => {
                let env2 = env.bind_clock(var, i);
                self.eval(body, i, &env2)
            }
            FormulaKind::TimeConstraint { var, cmp, bound } => {
                let Some(frozen) = env.clock(var) else { return false };
                let elapsed = self.d.timestamp(i) - self.d.timestamp(frozen);
                cmp.test_f64(elapsed, *bound)
            }
            FormulaKind::FrameConstraint { var, cmp, bound } => {
                let Some(frozen) = env.clock(var) else { return false };
                cmp.test_i64(i as i64 - frozen as i64, *bound)
            }
            FormulaKind::ModuloConstraint { var, modulus, cmp, bound } => {
                let Some(frozen) = env.clock(var) else { return false };
                let wrapped = crate::functions::wrapped_frame_offset(
                    i as i64 - frozen as i64,
                    *modulus,
                );
                cmp.test_i64(wrapped, *bound)
            }
            FormulaKind::IdEquality { lhs, rhs, negated } => {
                let (Some(a), Some(b)) = (env.id(lhs), env.id(rhs)) else {
                    return false;
                };
                (a.object == b.object) != *negated
            }
            FormulaKind::SpatialExists(t) => {
                self.term_vars_resolve(t, i, env) && !self.sval(t, i, env).is_empty()
            }
            FormulaKind::SpatialForall(t) => {
                self.term_vars_resolve(t, i, env) && self.sval(t, i, env).is_universe()
            }
            FormulaKind::FunctionAtom(atom) => {
                let mut area = |term: &SpatialTerm| -> Option<f64> {
                    if !self.term_vars_resolve(term, i, env) {
                        return None;
                    }
                    Some(self.sval(term, i, env).area())
                };
                eval_fn_atom(self.d, i, env, atom, &mut area)
            }
        }
    }

    /// Fail-closed precheck: every variable a spatial atom mentions must
    /// resolve at the atom's own frame.
    fn term_vars_resolve(&self, t: &SpatialTerm, i: usize, env: &Env) -> bool {
        term_vars_resolve(self.d, t, i, env)
    }

    fn sval(&self, t: &SpatialTerm, i: usize, env: &Env) -> Region {
        let universe = self.d.universe();
        match &t.kind {
            SpatialTermKind::BBoxOf(var) => {
                let object = env.id(var).map(|b| b.object);
                let frame = spatial_lookup_frame(env, var, i, self.cfg.bb_resolution);
                match (object, frame) {
                    (Some(object), Some(frame)) if frame < self.d.len() => {
                        match self.d.retrieve(frame, object) {
                            Some(obj) => Region::from_box(obj.bbox, universe),
                            None => Region::empty(universe),
                        }
                    }
                    _ => Region::empty(universe),
                }
            }
            SpatialTermKind::EmptySet => Region::empty(universe),
            SpatialTermKind::Universe => Region::full(universe),
            SpatialTermKind::Complement(a) => self.sval(a, i, env).complement(),
            SpatialTermKind::Intersect(a, b) => {
                self.sval(a, i, env).intersect(&self.sval(b, i, env))
            }
            SpatialTermKind::Union(a, b) => self
                .sval(a, i, env)
                .union(&self.sval(b, i, env))
                .canonicalize(),
            SpatialTermKind::Interior(a) => self.sval(a, i, env).interior(),
            SpatialTermKind::Closure(a) => self.sval(a, i, env).closure(),
            SpatialTermKind::SpatialNext { interval, body } => {
                if i + 1 >= self.d.len() {
                    return Region::empty(universe);
                }
                if let Some(iv) = interval {
                    let off = self.offset(iv.unit, i, i + 1);
                    if !iv.contains(off) {
                        return Region::empty(universe);
                    }
                }
                self.sval(body, i + 1, env)
            }
            SpatialTermKind::SpatialUntil { interval, lhs, rhs } => {
                let mut out = Region::empty(universe);
                let mut prefix = Region::full(universe);
                for u in i..self.d.len() {
                    if let Some(iv) = interval {
                        let off = self.offset(iv.unit, i, u);
                        if iv.exceeded_by(off) {
                            break;
                        }
                        if iv.contains(off) {
                            let hit = self.sval(rhs, u, env).intersect(&prefix);
                            out = out.union(&hit).canonicalize();
                        }
                    } else {
                        let hit = self.sval(rhs, u, env).intersect(&prefix);
                        out = out.union(&hit).canonicalize();
                    }
                    prefix = prefix.intersect(&self.sval(lhs, u, env));
                    if prefix.is_empty() {
                        break;
                    }
                }
                out
            }
            // a RELEASES b = CMPL (CMPL a UNTILS CMPL b), computed via
            // the exact region algebra.
            SpatialTermKind::SpatialRelease { interval, lhs, rhs } => {
                let dual = SpatialTerm::new(SpatialTermKind::SpatialUntil {
                    interval: *interval,
                    lhs: Box::new(SpatialTerm::new(SpatialTermKind::Complement(lhs.clone()))),
                    rhs: Box::new(SpatialTerm::new(SpatialTermKind::Complement(rhs.clone()))),
                });
                self.sval(&dual, i, env).complement()
            }
            SpatialTermKind::SpatialAlways { interval, body } => {
                let mut out = Region::full(universe);
                for u in i..self.d.len() {
                    if let Some(iv) = interval {
                        let off = self.offset(iv.unit, i, u);
                        if iv.exceeded_by(off) {
                            break;
                        }
                        if !iv.contains(off) {
                            continue;
                        }
                    }
                    out = out.intersect(&self.sval(body, u, env));
                    if out.is_empty() {
                        break;
                    }
                }
                out
            }
            SpatialTermKind::SpatialEventually { interval, body } => {
                let mut out = Region::empty(universe);
                for u in i..self.d.len() {
                    if let Some(iv) = interval {
                        let off = self.offset(iv.unit, i, u);
                        if iv.exceeded_by(off) {
                            break;
                        }
                        if !iv.contains(off) {
                            continue;
                        }
                    }
                    out = out.union(&self.sval(body, u, env)).canonicalize();
                }
                out
            }
        }
    }
}

fn term_vars_resolve(d: &DataStream, t: &SpatialTerm, i: usize, env: &Env) -> bool {
    t.variables()
        .iter()
        .all(|v| env.resolve(d, i, v).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastream::{load_csv, load_csv_str};
    use crate::formula::parse;
    use std::path::PathBuf;

    fn fixture() -> DataStream {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../corpus/table1.csv");
        load_csv(&path, Default::default()).unwrap()
    }

    fn check(d: &DataStream, src: &str, expected: bool) {
        let f = parse(src).unwrap();
        assert_eq!(
            satisfies(d, &f).value,
            expected,
            "verdict mismatch for `{src}`"
        );
    }

    /// 3 frames, 25 fps, universe 10×10; object 1 fixed, object 2 moves.
    fn tiny() -> DataStream {
        let csv = "\
frame,time,id,class,prob,xmin,ymin,xmax,ymax
0,0,1,car,0.9,0,0,4,4
0,0,2,pedestrian,0.8,6,6,8,8
1,0.04,1,car,0.9,0,0,4,4
1,0.04,2,pedestrian,0.8,3,3,7,7
2,0.08,1,car,0.9,0,0,4,4
2,0.08,2,pedestrian,0.8,1,1,2,2
";
        let overrides = crate::datastream::MetaOverrides {
            universe: Some(crate::spatial::BBox::closed(0.0, 0.0, 10.0, 10.0)),
            ..Default::default()
        };
        load_csv_str(csv, overrides).unwrap()
    }

    #[test]
    fn boolean_and_boundary_pins() {
        let d = fixture();
        check(&d, "true", true);
        check(&d, "eventually false", false);
        check(&d, "always wnext true", true);
        check(&d, "always next true", false); // fails at the last frame
        check(&d, "prev true", false);
        check(&d, "wprev true", true);
        check(&d, "eventually prev true", true);
    }

    #[test]
    fn until_is_non_strict_and_windows_clip_to_stream() {
        let d = fixture();
        check(&d, "false until true", true);
        // τ spans 0..0.2 s; nothing is 1.2 s in the future.
        check(&d, "x . eventually (CTIME - x >= 1.2 and CTIME - x <= 1.2)", false);
        check(&d, "x . eventually (CFRAME - x == 3 and CTIME - x <= 0.12)", true);
        check(&d, "eventually[0.2,0.2]t true", true);
        check(&d, "eventually[0.21,1]t true", false);
        check(&d, "always[0,2]f next true", true); // frames 0..2 all have successors
    }

    #[test]
    fn quantifiers_over_objectless_frames() {
        let csv = "\
frame,time,id,class,prob,xmin,ymin,xmax,ymax
0,0,,,,,,,
";
        let d = load_csv_str(csv, Default::default()).unwrap();
        check(&d, "exists id1 . true", false);
        check(&d, "forall id1 . false", true);
    }

    #[test]
    fn frozen_vs_current_class_lookup() {
        let d = fixture();
        // Object 2 flips cyclist → pedestrian at frame 2: with a frozen
        // binder the class lookup stays pinned to the binding frame.
        check(
            &d,
            "exists id1 @ x1 . always (CFRAME - x1 != 2 or CLASS(id1) == \"cyclist\")",
            true,
        );
        check(
            &d,
            "exists id1 . (CLASS(id1) == \"cyclist\" and always CLASS(id1) == \"cyclist\")",
            false,
        );
    }

    #[test]
    fn right_shift_witnessed_by_track_jump() {
        let d = fixture();
        // Object 3 jumps from x=522 to x=877 between frames 0 and 1.
        check(
            &d,
            "eventually exists id1 @ x1 . next exists id2 . \
             (id1 == id2 and LAT(id1, LM) < LAT(id2, LM))",
            true,
        );
        // No object ever shifts left by more than 400 in one frame.
        check(
            &d,
            "eventually exists id1 @ x1 . next exists id2 . \
             (id1 == id2 and LAT(id1, LM) >= 400 * PROB(id2) and \
              LAT(id2, LM) <= 100 * PROB(id2))",
            false,
        );
    }

    #[test]
    fn witness_reports_leading_existential_chain() {
        let d = fixture();
        let f = parse(
            "exists id1 . exists id2 . (id1 != id2 and CLASS(id1) == CLASS(id2))",
        )
        .unwrap();
        let v = satisfies(&d, &f);
        assert!(v.value);
        let w = v.witness.expect("witness expected");
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].var.as_str(), w[0].object, w[0].frame), ("id1", 3, 0));
        assert_eq!((w[1].var.as_str(), w[1].object, w[1].frame), ("id2", 4, 0));

        let f = parse("always true").unwrap();
        assert_eq!(satisfies(&d, &f).witness, None);

        let f = parse("exists id1 . PROB(id1) > 1.5").unwrap();
        let v = satisfies(&d, &f);
        assert!(!v.value);
        assert_eq!(v.witness, None);
    }

    #[test]
    fn spatial_until_matches_hand_computation() {
        // Universe 10×10. Object 1 sits at [0,4]² in every frame; object
        // 2 visits [6,8]², [3,7]², [1,2]². The until-region is
        //   B@0  ∪  (B@1 ∩ A@0)  ∪  (B@2 ∩ A@0 ∩ A@1)
        // = [6,8]² ∪ [3,4]² ∪ [1,2]², with area 4 + 1 + 1 = 6.
        let d = tiny();
        let f = parse("exists id1 . exists id2 . SE(BB(id1) UNTILS BB(id2))").unwrap();
        assert!(satisfies(&d, &f).value);

        let term = match &parse("exists id1 . exists id2 . SE(BB(id1) UNTILS BB(id2))")
            .unwrap()
            .kind
        {
            FormulaKind::Exists { body, .. } => match &body.kind {
                FormulaKind::Exists { body, .. } => match &body.kind {
                    FormulaKind::SpatialExists(t) => t.clone(),
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            },
            _ => unreachable!(),
        };
        let env = Env::new().bind_id("id1", 1, None).bind_id("id2", 2, None);
        let r = sval(&d, &term, 0, &env);
        assert_eq!(r.area(), 6.0);
        assert!(r.contains_point(7.0, 7.0));
        assert!(r.contains_point(3.5, 3.5));
        assert!(r.contains_point(1.5, 1.5));
        assert!(!r.contains_point(5.0, 5.0));
        assert!(!r.contains_point(0.5, 0.5));
    }

    #[test]
    fn spatial_always_and_eventually_regions() {
        let d = tiny();
        let env = Env::new().bind_id("id1", 1, None).bind_id("id2", 2, None);
        let term = |src: &str| -> SpatialTerm {
            let full = format!("exists id1 . exists id2 . SE({src})");
            match &parse(&full).unwrap().kind {
                FormulaKind::Exists { body, .. } => match &body.kind {
                    FormulaKind::Exists { body, .. } => match &body.kind {
                        FormulaKind::SpatialExists(t) => t.clone(),
                        _ => unreachable!(),
                    },
                    _ => unreachable!(),
                },
                _ => unreachable!(),
            }
        };
        // Intersection over [6,8]², [3,7]², [1,2]² is empty.
        assert!(sval(&d, &term("ALWAYSS BB(id2)"), 0, &env).is_empty());
        // Union: areas 4 + 16 + 1 minus the |[6,7]²| = 1 overlap → 20.
        let r = sval(&d, &term("EVENTUALLYS BB(id2)"), 0, &env);
        assert_eq!(r.area(), 20.0);
        // Release with an always-empty left side degenerates to ALWAYSS.
        let rel = sval(&d, &term("EMPTYSET RELEASES BB(id2)"), 0, &env);
        assert!(rel.is_empty());
        let rel = sval(&d, &term("EMPTYSET RELEASES BB(id1)"), 0, &env);
        assert_eq!(rel.area(), 16.0); // [0,4]² in every frame
    }

    #[test]
    fn spatial_atom_fails_closed_on_unresolvable_variables() {
        let d = fixture();
        // Surviving objects keep SE(BB(id1)) true one frame later.
        let g = parse("exists id1 . next SE(BB(id1))").unwrap();
        assert!(satisfies(&d, &g).value);

        // A stream where no object survives into the next frame: the
        // complement region would be trivially non-empty, but the atom
        // mentions an unresolvable variable and must fail closed.
        let csv = "\
frame,time,id,class,prob,xmin,ymin,xmax,ymax
0,0,7,car,0.9,0,0,4,4
1,0.04,8,car,0.9,0,0,4,4
";
        let d2 = load_csv_str(csv, Default::default()).unwrap();
        let g = parse("exists id1 . next SE(CMPL BB(id1))").unwrap();
        assert!(!satisfies(&d2, &g).value);
        let g = parse("exists id1 . next not SE(BB(id1))").unwrap();
        assert!(satisfies(&d2, &g).value);
    }

    #[test]
    fn since_scans_the_past() {
        let d = fixture();
        check(&d, "always (true since true)", true);
        // "there was an earlier frame" fails at frame 0 only.
        check(&d, "eventually (false since prev true)", true);
        check(&d, "false since prev true", false);
        // Object 2's class was cyclist until it became pedestrian.
        check(
            &d,
            "eventually exists id1 . (CLASS(id1) == \"pedestrian\" and \
             prev exists id2 . (id1 == id2 and CLASS(id2) == \"cyclist\"))",
            true,
        );
    }

    #[test]
    fn bb_resolution_mode_changes_sweep_lookup() {
        let d = tiny();
        // Frozen: BB(id2) inside the sweep stays the frame-0 box [6,8]²,
        // so EVENTUALLYS BB(id2) == BB(id2)@0 with area 4.
        let f = parse("exists id2 @ x . AREA(EVENTUALLYS BB(id2)) == 4").unwrap();
        assert!(satisfies_with(&d, &f, EvalConfig { bb_resolution: BbResolution::Frozen })
            .value);
        // Current: the union over the moving track has area 20.
        let f = parse("exists id2 @ x . AREA(EVENTUALLYS BB(id2)) == 20").unwrap();
        assert!(satisfies_with(&d, &f, EvalConfig { bb_resolution: BbResolution::Current })
            .value);
    }
}
