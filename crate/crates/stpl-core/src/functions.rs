//! Perception-function evaluation shared by both monitoring engines.
//!
//! A function atom compares a measurement of bound objects — class code,
//! confidence, anchor coordinates, distances, areas, area ratios, point
//! counts, misdetection codes, visibility — against a constant or a
//! scaled second measurement. All evaluation here is *fail-closed*: when
//! a measurement is undefined (the referenced object is absent from its
//! lookup frame, a misdetection code is not recorded, a denominator is
//! zero, a viewpoint sits inside a box), the atom evaluates to false
//! rather than erroring.
//!
//! An object-id variable resolves its attributes in its *lookup frame*:
//! the frame recorded at binding time for freeze-style binders
//! (`exists id1 @ x1 .`), or the current evaluation frame for plain
//! binders. [`Env`] carries both kinds of bindings plus frozen clock
//! variables.

use crate::datastream::{DataObject, DataStream};
use crate::formula::{Cmp, DistArg, FnAtom, FnExpr, FnRhs, SpatialTerm};
use crate::spatial::{AnchorPoint, BBox, Crt};
use std::collections::HashMap;

/// Binding of an object-id variable: the chosen object and, for
/// freeze-style binders, the frame its attribute lookups are pinned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdBinding {
    pub object: u64,
    pub frozen_frame: Option<usize>,
}

/// Variable environment threaded through formula evaluation.
#[derive(Clone, Debug, Default)]
pub struct Env {
    ids: HashMap<String, IdBinding>,
    clocks: HashMap<String, usize>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    /// Extend with an object binding (persistent: returns a new
    /// environment, leaving `self` untouched).
    pub fn bind_id(&self, var: &str, object: u64, frozen_frame: Option<usize>) -> Env {
        let mut next = self.clone();
        next.ids.insert(var.to_string(), IdBinding { object, frozen_frame });
        next
    }

    /// Extend with a frozen clock variable.
    pub fn bind_clock(&self, var: &str, frame: usize) -> Env {
        let mut next = self.clone();
        next.clocks.insert(var.to_string(), frame);
        next
    }

    pub fn id(&self, var: &str) -> Option<IdBinding> {
        self.ids.get(var).copied()
    }

    pub fn clock(&self, var: &str) -> Option<usize> {
        self.clocks.get(var).copied()
    }

    /// The frame in which `var`'s attributes resolve when evaluated at
    /// `current`.
    pub fn lookup_frame(&self, var: &str, current: usize) -> Option<usize> {
        self.ids.get(var).map(|b| b.frozen_frame.unwrap_or(current))
    }

    /// Resolve a variable to its object record, or `None` when the
    /// object is absent from its lookup frame (fail-closed).
    pub fn resolve<'a>(
        &self,
        d: &'a DataStream,
        current: usize,
        var: &str,
    ) -> Option<&'a DataObject> {
        let binding = self.ids.get(var)?;
        let frame = binding.frozen_frame.unwrap_or(current);
        d.retrieve(frame, binding.object)
    }
}

/// A resolved measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FnValue {
    Num(f64),
    Code(u32),
    MdCode(i64),
    Flag(bool),
}

/// Which frame a freeze-bound variable's box resolves in while a
/// spatial-temporal operator sweeps over frames.
///
/// `Frozen` (the default) pins the box to the binder's recorded frame,
/// matching the freeze-quantifier reading. `Current` re-resolves the
/// object per sweep frame, following it through the stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BbResolution {
    #[default]
    Frozen,
    Current,
}

/// The frame in which `var`'s box resolves at sweep frame `sweep`, or
/// `None` when the variable is unbound.
pub fn spatial_lookup_frame(
    env: &Env,
    var: &str,
    sweep: usize,
    mode: BbResolution,
) -> Option<usize> {
    let binding = env.id(var)?;
    Some(match mode {
        BbResolution::Current => sweep,
        BbResolution::Frozen => binding.frozen_frame.unwrap_or(sweep),
    })
}

pub fn euclidean(a: AnchorPoint, b: AnchorPoint) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// `num / den`, undefined when the denominator is zero or either side is
/// not finite.
pub fn ratio(num: f64, den: f64) -> Option<f64> {
    if den == 0.0 || !num.is_finite() || !den.is_finite() {
        None
    } else {
        Some(num / den)
    }
}

/// Frame offset folded into `[0, modulus)`; well-defined for negative
/// offsets, which arise under past operators.
pub fn wrapped_frame_offset(offset: i64, modulus: i64) -> i64 {
    offset.rem_euclid(modulus)
}

fn wrap_near(theta: f64, around: f64) -> f64 {
    use std::f64::consts::TAU;
    theta - ((theta - around) / TAU).round() * TAU
}

/// The angular interval a box subtends as seen from `p`, as
/// `(lo, hi)` radians around the box-centre direction. Undefined when
/// `p` lies in the box (the box would subtend the full circle).
fn angular_interval(p: AnchorPoint, b: &BBox) -> Option<(f64, f64)> {
    if b.contains_point(p.x, p.y) {
        return None;
    }
    let c = b.anchor(Crt::Ct);
    let base = (c.y - p.y).atan2(c.x - p.x);
    let corners = [
        (b.x_lo, b.y_lo),
        (b.x_hi, b.y_lo),
        (b.x_lo, b.y_hi),
        (b.x_hi, b.y_hi),
    ];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in corners {
        let theta = wrap_near((y - p.y).atan2(x - p.x), base);
        lo = lo.min(theta);
        hi = hi.max(theta);
    }
    Some((lo, hi))
}

/// Is `target` visible from viewpoint `p`, with `occluder` as the only
/// candidate blocker? The target counts as occluded when the occluder's
/// angular interval covers the target's entirely *and* the occluder's
/// centre is strictly nearer to the viewpoint. Undefined (`None`) when
/// the viewpoint lies inside either box.
pub fn visible_from(p: AnchorPoint, target: &BBox, occluder: &BBox) -> Option<bool> {
    let (t_lo, t_hi) = angular_interval(p, target)?;
    let (o_lo, o_hi) = angular_interval(p, occluder)?;
    // Shift the target interval by whole turns to sit nearest the
    // occluder's before comparing endpoints.
    let t_mid = (t_lo + t_hi) / 2.0;
    let o_mid = (o_lo + o_hi) / 2.0;
    let shift = wrap_near(t_mid, o_mid) - t_mid;
    let covered = o_lo <= t_lo + shift && t_hi + shift <= o_hi;
    let nearer = euclidean(p, occluder.anchor(Crt::Ct)) < euclidean(p, target.anchor(Crt::Ct));
    Some(!(covered && nearer))
}

fn dist_arg_box(d: &DataStream, t: usize, env: &Env, arg: &DistArg) -> Option<BBox> {
    match arg {
        DistArg::Universe => Some(d.universe()),
        DistArg::Id(var) => env.resolve(d, t, var).map(|o| o.bbox),
    }
}

/// Evaluate a function expression at frame `t`. `area_of_term` supplies
/// region areas for embedded spatial terms (the engines own region
/// evaluation). `None` means the measurement is undefined.
pub fn eval_fn_expr(
    d: &DataStream,
    t: usize,
    env: &Env,
    expr: &FnExpr,
    area_of_term: &mut dyn FnMut(&SpatialTerm) -> Option<f64>,
) -> Option<FnValue> {
    match expr {
        FnExpr::Class(v) => env.resolve(d, t, v).map(|o| FnValue::Code(o.class)),
        FnExpr::Prob(v) => env.resolve(d, t, v).map(|o| FnValue::Num(o.prob)),
        FnExpr::Lat(v, crt) => {
            let anchor = env.resolve(d, t, v)?.bbox.checked_anchor(*crt)?;
            Some(FnValue::Num(anchor.x))
        }
        FnExpr::Lon(v, crt) => {
            let anchor = env.resolve(d, t, v)?.bbox.checked_anchor(*crt)?;
            Some(FnValue::Num(anchor.y))
        }
        FnExpr::Dist(a, ca, b, cb) => {
            let pa = dist_arg_box(d, t, env, a)?.checked_anchor(*ca)?;
            let pb = dist_arg_box(d, t, env, b)?.checked_anchor(*cb)?;
            Some(FnValue::Num(euclidean(pa, pb)))
        }
        FnExpr::AreaId(v) => env.resolve(d, t, v).map(|o| FnValue::Num(o.bbox.area())),
        FnExpr::AreaTerm(term) => area_of_term(term).map(FnValue::Num),
        FnExpr::Ratio(num, den) => {
            let n = eval_fn_expr(d, t, env, num, area_of_term)?;
            let m = eval_fn_expr(d, t, env, den, area_of_term)?;
            match (n, m) {
                (FnValue::Num(a), FnValue::Num(b)) => ratio(a, b).map(FnValue::Num),
                _ => None,
            }
        }
        FnExpr::Empty(v) => env.resolve(d, t, v).map(|o| FnValue::Flag(o.empty)),
        FnExpr::Visible(vp, crt, target, occluder) => {
            let p = dist_arg_box(d, t, env, vp)?.checked_anchor(*crt)?;
            let target = env.resolve(d, t, target)?.bbox;
            let occluder = env.resolve(d, t, occluder)?.bbox;
            visible_from(p, &target, &occluder).map(FnValue::Flag)
        }
        FnExpr::Md(v) => {
            let o = env.resolve(d, t, v)?;
            o.md.map(|m| FnValue::MdCode(i64::from(m)))
        }
    }
}

/// Evaluate a function atom, fail-closed: any undefined measurement
/// makes the atom false.
pub fn eval_fn_atom(
    d: &DataStream,
    t: usize,
    env: &Env,
    atom: &FnAtom,
    area_of_term: &mut dyn FnMut(&SpatialTerm) -> Option<f64>,
) -> bool {
    let Some(lhs) = eval_fn_expr(d, t, env, &atom.lhs, area_of_term) else {
        return false;
    };
    match &atom.rhs {
        FnRhs::Number(r) => match lhs {
            FnValue::Num(a) => a.is_finite() && atom.cmp.test_f64(a, *r),
            FnValue::Code(c) => atom.cmp.test_f64(f64::from(c), *r),
            FnValue::MdCode(m) => atom.cmp.test_i64(m, *r as i64),
            FnValue::Flag(_) => false,
        },
        FnRhs::ClassLabel(label) => {
            let FnValue::Code(code) = lhs else { return false };
            match (d.class_code(label), atom.cmp) {
                (Some(rhs_code), Cmp::Eq) => code == rhs_code,
                (Some(rhs_code), Cmp::Ne) => code != rhs_code,
                // A label the stream never saw matches no object.
                (None, Cmp::Eq) => false,
                (None, Cmp::Ne) => true,
                _ => false,
            }
        }
        FnRhs::Bool(b) => {
            let FnValue::Flag(f) = lhs else { return false };
            match atom.cmp {
                Cmp::Eq => f == *b,
                Cmp::Ne => f != *b,
                _ => false,
            }
        }
        FnRhs::Expr { scale, expr } => {
            let Some(rhs) = eval_fn_expr(d, t, env, expr, area_of_term) else {
                return false;
            };
            match (lhs, rhs) {
                (FnValue::Num(a), FnValue::Num(b)) => {
                    let scaled = scale * b;
                    a.is_finite() && scaled.is_finite() && atom.cmp.test_f64(a, scaled)
                }
                (FnValue::Code(a), FnValue::Code(b)) => {
                    atom.cmp.test_i64(i64::from(a), i64::from(b))
                }
                (FnValue::MdCode(a), FnValue::MdCode(b)) => atom.cmp.test_i64(a, b),
                _ => false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastream::DataStream;
    use crate::formula::{parse, FormulaKind};
    use approx::assert_relative_eq;
    use std::path::PathBuf;

    fn fixture() -> DataStream {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../corpus/table1.csv");
        crate::datastream::load_csv(&path, Default::default()).unwrap()
    }

    /// Extract the innermost function atom of a parsed formula (test glue).
    fn atom_of(src: &str) -> FnAtom {
        fn dig(f: &crate::formula::Formula) -> Option<FnAtom> {
            match &f.kind {
                FormulaKind::FunctionAtom(a) => Some(a.clone()),
                FormulaKind::Exists { body, .. } => dig(body),
                _ => None,
            }
        }
        dig(&parse(src).unwrap()).expect("no function atom found")
    }

    fn no_terms(_: &SpatialTerm) -> Option<f64> {
        panic!("test atom should not contain spatial terms")
    }

    #[test]
    fn pinned_area_and_distance() {
        let d = fixture();
        let env = Env::new().bind_id("id1", 1, None).bind_id("id2", 4, None);
        let area = eval_fn_expr(&d, 0, &env, &FnExpr::AreaId("id1".into()), &mut no_terms);
        assert_eq!(area, Some(FnValue::Num(22032.0)));

        let dist = eval_fn_expr(
            &d,
            0,
            &env,
            &FnExpr::Dist(
                DistArg::Id("id1".into()),
                Crt::Ct,
                DistArg::Id("id2".into()),
                Crt::Ct,
            ),
            &mut no_terms,
        );
        let Some(FnValue::Num(v)) = dist else { panic!("distance undefined") };
        assert_relative_eq!(v, 768.5937, epsilon = 0.01);
    }

    #[test]
    fn class_pairs_matching_at_first_frame() {
        let d = fixture();
        let atom = atom_of("exists id1 . exists id2 . CLASS(id1) == CLASS(id2)");
        let ids: Vec<u64> = d.ids(0).collect();
        let mut matching = Vec::new();
        for &a in &ids {
            for &b in &ids {
                if a == b {
                    continue;
                }
                let env = Env::new().bind_id("id1", a, None).bind_id("id2", b, None);
                if eval_fn_atom(&d, 0, &env, &atom, &mut no_terms) {
                    matching.push((a, b));
                }
            }
        }
        matching.sort_unstable();
        assert_eq!(matching, vec![(3, 4), (4, 3)]);
    }

    #[test]
    fn confidence_threshold_at_frame_three() {
        let d = fixture();
        let atom = atom_of("exists id1 . PROB(id1) >= 0.8");
        let high: Vec<u64> = d
            .ids(3)
            .filter(|&id| {
                let env = Env::new().bind_id("id1", id, None);
                eval_fn_atom(&d, 3, &env, &atom, &mut no_terms)
            })
            .collect();
        assert_eq!(high, vec![1]);
    }

    #[test]
    fn absent_object_fails_closed_for_every_comparison() {
        let d = fixture();
        // Object 4 exists only at frames 0 and 3.
        let env = Env::new().bind_id("id1", 4, None);
        for src in ["exists id1 . PROB(id1) < 2", "exists id1 . PROB(id1) >= 0"] {
            let atom = atom_of(src);
            assert!(!eval_fn_atom(&d, 1, &env, &atom, &mut no_terms));
            assert!(eval_fn_atom(&d, 0, &env, &atom, &mut no_terms));
        }
    }

    #[test]
    fn frozen_frame_pins_attribute_lookups() {
        let d = fixture();
        let atom = atom_of("exists id1 . CLASS(id1) == \"cyclist\"");
        // Object 2 is a cyclist at frame 0 and a pedestrian at frame 2.
        let frozen = Env::new().bind_id("id1", 2, Some(0));
        assert!(eval_fn_atom(&d, 2, &frozen, &atom, &mut no_terms));
        let current = Env::new().bind_id("id1", 2, None);
        assert!(!eval_fn_atom(&d, 2, &current, &atom, &mut no_terms));
    }

    #[test]
    fn unknown_class_label_is_never_equal() {
        let d = fixture();
        let env = Env::new().bind_id("id1", 1, None);
        let eq = atom_of("exists id1 . CLASS(id1) == \"unicorn\"");
        let ne = atom_of("exists id1 . CLASS(id1) != \"unicorn\"");
        assert!(!eval_fn_atom(&d, 0, &env, &eq, &mut no_terms));
        assert!(eval_fn_atom(&d, 0, &env, &ne, &mut no_terms));
    }

    #[test]
    fn missing_misdetection_codes_fail_closed_even_under_negation() {
        let d = fixture();
        let env = Env::new().bind_id("id1", 1, None).bind_id("id2", 2, None);
        let eq = atom_of("exists id1 . exists id2 . MD(id1) == MD(id2)");
        let ne = atom_of("exists id1 . exists id2 . MD(id1) != MD(id2)");
        assert!(!eval_fn_atom(&d, 0, &env, &eq, &mut no_terms));
        assert!(!eval_fn_atom(&d, 0, &env, &ne, &mut no_terms));
    }

    #[test]
    fn ratio_of_areas_is_exact_for_nested_boxes() {
        let d = fixture();
        // The car's frame-1 box sits inside its frame-0 box, so the
        // intersection over the frame-1 area is exactly 1.
        let a0 = d.retrieve(0, 1).unwrap().bbox;
        let a1 = d.retrieve(1, 1).unwrap().bbox;
        let inter = a1.intersect(&a0);
        assert_eq!(ratio(inter.area(), a1.area()), Some(1.0));
        assert_eq!(inter.area(), 20436.0);
    }

    #[test]
    fn ratio_guards_zero_denominators() {
        assert_eq!(ratio(5.0, 0.0), None);
        assert_eq!(ratio(f64::NAN, 1.0), None);
        assert_eq!(ratio(0.0, 4.0), Some(0.0));
    }

    #[test]
    fn wrapped_offsets_for_past_operators() {
        assert_eq!(wrapped_frame_offset(-3, 2), 1);
        assert_eq!(wrapped_frame_offset(-4, 2), 0);
        assert_eq!(wrapped_frame_offset(5, 3), 2);
    }

    #[test]
    fn visibility_requires_cover_and_nearness() {
        let p = AnchorPoint { x: 0.0, y: 0.0 };
        let target = BBox::closed(10.0, -1.0, 12.0, 1.0);
        let near_wide = BBox::closed(5.0, -2.0, 6.0, 2.0);
        let far_wide = BBox::closed(20.0, -4.0, 22.0, 4.0);
        let near_narrow = BBox::closed(5.0, -0.1, 6.0, 0.1);
        assert_eq!(visible_from(p, &target, &near_wide), Some(false));
        assert_eq!(visible_from(p, &target, &far_wide), Some(true));
        assert_eq!(visible_from(p, &target, &near_narrow), Some(true));
        // Viewpoint inside a box is undefined.
        let containing = BBox::closed(-1.0, -1.0, 1.0, 1.0);
        assert_eq!(visible_from(p, &containing, &near_wide), None);
        assert_eq!(visible_from(p, &target, &containing), None);
    }

    #[test]
    fn self_occlusion_is_visible() {
        let p = AnchorPoint { x: 0.0, y: 0.0 };
        let b = BBox::closed(4.0, -1.0, 6.0, 1.0);
        assert_eq!(visible_from(p, &b, &b), Some(true));
    }

    #[test]
    fn scaled_confidence_comparison() {
        let d = fixture();
        let atom = atom_of("exists id1 . exists id2 . PROB(id1) >= 0.5 * PROB(id2)");
        // Frame 1: prob(1)=0.88, prob(2)=0.57 → 0.88 >= 0.285.
        let env = Env::new().bind_id("id1", 1, None).bind_id("id2", 2, None);
        assert!(eval_fn_atom(&d, 1, &env, &atom, &mut no_terms));
        // And the reverse: 0.57 >= 0.44.
        let env = Env::new().bind_id("id1", 2, None).bind_id("id2", 1, None);
        assert!(eval_fn_atom(&d, 1, &env, &atom, &mut no_terms));
    }
}
