//! Exact region algebra over axis-aligned boxes with open/closed edges.
//!
//! Perception streams describe objects by bounding boxes in image
//! coordinates: `x` grows to the right, `y` grows *downward*, so the "top"
//! edge of a box is its low `y` bound. Spatial formulas combine those boxes
//! with Boolean set operations (complement, intersection, union) and the
//! topological operators interior and closure. To keep those operators
//! exact — interior and closure differ only on box edges — every box edge
//! carries its own open/closed flag, and a [`Region`] is a finite union of
//! such boxes inside a bounded, closed universe.
//!
//! All operations here are exact: coordinates are only ever copied and
//! compared, never recomputed, so no floating-point drift can creep into
//! emptiness or membership answers. The only arithmetic happens in
//! [`Region::area`] (widths times heights) and in the centre anchor point.
//!
//! [`Region::canonicalize`] rewrites a region into a normal form: disjoint
//! boxes organised in vertical slabs with maximal runs coalesced. Engines
//! may skip canonicalization to trade representation growth for per-step
//! cost; every predicate on regions (emptiness, universality, membership,
//! area) is representation-independent, so the trade-off never changes an
//! answer.
//!
//! ```
//! use stpl_core::spatial::{BBox, Region};
//!
//! let universe = BBox::closed(0.0, 0.0, 100.0, 100.0);
//! let a = Region::from_box(BBox::closed(10.0, 10.0, 60.0, 60.0), universe);
//! let b = Region::from_box(BBox::closed(40.0, 40.0, 90.0, 90.0), universe);
//! let overlap = a.intersect(&b);
//! assert_eq!(overlap.area(), 400.0);
//! assert!(a.complement().intersect(&a).is_empty());
//! ```

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// A point in image coordinates, produced by [`BBox::anchor`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorPoint {
    pub x: f64,
    pub y: f64,
}

/// Named anchor points on a bounding box.
///
/// `Lm`/`Rm` sit on the low/high `x` corners, `Tm`/`Bm` on the low/high `y`
/// corners (image coordinates: top = low `y`), and `Ct` is the centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Crt {
    /// Left anchor: `(x_lo, y_lo)`.
    Lm,
    /// Right anchor: `(x_hi, y_hi)`.
    Rm,
    /// Top anchor: `(x_hi, y_lo)`.
    Tm,
    /// Bottom anchor: `(x_lo, y_hi)`.
    Bm,
    /// Centre: `((x_lo + x_hi) / 2, (y_lo + y_hi) / 2)`.
    Ct,
}

impl fmt::Display for Crt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Crt::Lm => "LM",
            Crt::Rm => "RM",
            Crt::Tm => "TM",
            Crt::Bm => "BM",
            Crt::Ct => "CT",
        };
        f.write_str(s)
    }
}

/// A one-dimensional interval with independently open or closed endpoints.
///
/// This is the scalar building block for [`BBox`]: every two-dimensional
/// operation decomposes into interval operations per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Iv {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Iv {
    pub(crate) fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Iv { lo, hi, lo_closed, hi_closed }
    }

    pub(crate) fn closed(lo: f64, hi: f64) -> Self {
        Iv::new(lo, hi, true, true)
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    pub(crate) fn contains(&self, v: f64) -> bool {
        (self.lo < v || (self.lo == v && self.lo_closed))
            && (v < self.hi || (v == self.hi && self.hi_closed))
    }

    pub(crate) fn intersect(&self, o: &Iv) -> Iv {
        let (lo, lo_closed) = match self.lo.partial_cmp(&o.lo).expect("finite bound") {
            Ordering::Greater => (self.lo, self.lo_closed),
            Ordering::Less => (o.lo, o.lo_closed),
            Ordering::Equal => (self.lo, self.lo_closed && o.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.partial_cmp(&o.hi).expect("finite bound") {
            Ordering::Less => (self.hi, self.hi_closed),
            Ordering::Greater => (o.hi, o.hi_closed),
            Ordering::Equal => (self.hi, self.hi_closed && o.hi_closed),
        };
        Iv::new(lo, hi, lo_closed, hi_closed)
    }

    /// Set difference `self \ o`, at most two pieces, exact on endpoints.
    pub(crate) fn subtract(&self, o: &Iv) -> Vec<Iv> {
        if o.is_empty() {
            return vec![*self];
        }
        let below = self.intersect(&Iv::new(f64::NEG_INFINITY, o.lo, false, !o.lo_closed));
        let above = self.intersect(&Iv::new(o.hi, f64::INFINITY, !o.hi_closed, false));
        [below, above].into_iter().filter(|iv| !iv.is_empty()).collect()
    }

    /// True when `self ∪ o` is a single interval (overlap, or abutment
    /// where at least one side includes the shared endpoint).
    fn joinable(&self, o: &Iv) -> bool {
        if !self.intersect(o).is_empty() {
            return true;
        }
        (self.hi == o.lo && (self.hi_closed || o.lo_closed))
            || (o.hi == self.lo && (o.hi_closed || self.lo_closed))
    }

    /// Smallest interval containing both; only meaningful when
    /// [`Iv::joinable`] held, in which case it equals the union.
    fn hull(&self, o: &Iv) -> Iv {
        let (lo, lo_closed) = match self.lo.partial_cmp(&o.lo).expect("finite bound") {
            Ordering::Less => (self.lo, self.lo_closed),
            Ordering::Greater => (o.lo, o.lo_closed),
            Ordering::Equal => (self.lo, self.lo_closed || o.lo_closed),
        };
        let (hi, hi_closed) = match self.hi.partial_cmp(&o.hi).expect("finite bound") {
            Ordering::Greater => (self.hi, self.hi_closed),
            Ordering::Less => (o.hi, o.hi_closed),
            Ordering::Equal => (self.hi, self.hi_closed || o.hi_closed),
        };
        Iv::new(lo, hi, lo_closed, hi_closed)
    }
}

/// Union of a list of intervals as a sorted, disjoint, maximal list.
fn union_1d(mut ivs: Vec<Iv>) -> Vec<Iv> {
    ivs.retain(|iv| !iv.is_empty());
    ivs.sort_by(|a, b| {
        a.lo.partial_cmp(&b.lo)
            .expect("finite bound")
            .then(b.lo_closed.cmp(&a.lo_closed))
            .then(a.hi.partial_cmp(&b.hi).expect("finite bound"))
            .then(b.hi_closed.cmp(&a.hi_closed))
    });
    let mut out: Vec<Iv> = Vec::with_capacity(ivs.len());
    for iv in ivs {
        match out.last_mut() {
            Some(last) if last.joinable(&iv) => *last = last.hull(&iv),
            _ => out.push(iv),
        }
    }
    out
}

/// An axis-aligned box with per-edge open/closed flags.
///
/// Field names follow image conventions: `closed_top` governs the `y_lo`
/// edge and `closed_bottom` the `y_hi` edge, because `y` grows downward.
/// A box may be degenerate (a segment or a point, when closed bounds
/// coincide) — degenerate boxes are non-empty point sets of zero area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub closed_left: bool,
    pub closed_right: bool,
    pub closed_top: bool,
    pub closed_bottom: bool,
}

impl BBox {
    /// A fully closed box `[x_lo, x_hi] × [y_lo, y_hi]`.
    pub fn closed(x_lo: f64, y_lo: f64, x_hi: f64, y_hi: f64) -> Self {
        BBox {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            closed_left: true,
            closed_right: true,
            closed_top: true,
            closed_bottom: true,
        }
    }

    /// A fully open box `(x_lo, x_hi) × (y_lo, y_hi)`.
    pub fn open(x_lo: f64, y_lo: f64, x_hi: f64, y_hi: f64) -> Self {
        BBox {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
            closed_left: false,
            closed_right: false,
            closed_top: false,
            closed_bottom: false,
        }
    }

    pub(crate) fn from_ivs(x: Iv, y: Iv) -> Self {
        BBox {
            x_lo: x.lo,
            x_hi: x.hi,
            y_lo: y.lo,
            y_hi: y.hi,
            closed_left: x.lo_closed,
            closed_right: x.hi_closed,
            closed_top: y.lo_closed,
            closed_bottom: y.hi_closed,
        }
    }

    pub(crate) fn xi(&self) -> Iv {
        Iv::new(self.x_lo, self.x_hi, self.closed_left, self.closed_right)
    }

    pub(crate) fn yi(&self) -> Iv {
        Iv::new(self.y_lo, self.y_hi, self.closed_top, self.closed_bottom)
    }

    pub fn is_empty(&self) -> bool {
        self.xi().is_empty() || self.yi().is_empty()
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.xi().contains(x) && self.yi().contains(y)
    }

    /// Lebesgue measure; zero for empty or degenerate boxes.
    pub fn area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)
    }

    pub fn intersect(&self, o: &BBox) -> BBox {
        BBox::from_ivs(self.xi().intersect(&o.xi()), self.yi().intersect(&o.yi()))
    }

    /// Exact set difference `self \ o` as at most four disjoint boxes.
    pub fn subtract(&self, o: &BBox) -> Vec<BBox> {
        let mut out = Vec::with_capacity(4);
        for xp in self.xi().subtract(&o.xi()) {
            let piece = BBox::from_ivs(xp, self.yi());
            if !piece.is_empty() {
                out.push(piece);
            }
        }
        let shared_x = self.xi().intersect(&o.xi());
        if !shared_x.is_empty() {
            for yp in self.yi().subtract(&o.yi()) {
                let piece = BBox::from_ivs(shared_x, yp);
                if !piece.is_empty() {
                    out.push(piece);
                }
            }
        }
        out
    }

    /// The same box with every edge closed (its topological closure,
    /// provided the box is non-empty).
    pub fn all_closed(&self) -> BBox {
        BBox::closed(self.x_lo, self.y_lo, self.x_hi, self.y_hi)
    }

    /// Clamp into `bounds`, keeping this box's edge flags where its edges
    /// survive and adopting closed edges where the clamp cuts.
    pub fn clamp_to(&self, bounds: &BBox) -> BBox {
        self.intersect(&bounds.all_closed())
    }

    /// The requested anchor point. Meaningful for non-empty boxes.
    pub fn anchor(&self, crt: Crt) -> AnchorPoint {
        match crt {
            Crt::Lm => AnchorPoint { x: self.x_lo, y: self.y_lo },
            Crt::Rm => AnchorPoint { x: self.x_hi, y: self.y_hi },
            Crt::Tm => AnchorPoint { x: self.x_hi, y: self.y_lo },
            Crt::Bm => AnchorPoint { x: self.x_lo, y: self.y_hi },
            Crt::Ct => AnchorPoint {
                x: (self.x_lo + self.x_hi) / 2.0,
                y: (self.y_lo + self.y_hi) / 2.0,
            },
        }
    }

    /// [`BBox::anchor`] guarded against empty boxes, for callers that
    /// must treat an anchor of nothing as undefined.
    pub fn checked_anchor(&self, crt: Crt) -> Option<AnchorPoint> {
        if self.is_empty() {
            None
        } else {
            Some(self.anchor(crt))
        }
    }
}

/// A finite union of flagged boxes inside a bounded, closed universe.
///
/// The universe models the sensor's field of view (for camera streams, the
/// image rectangle); complements are taken relative to it. Every stored
/// box is non-empty and contained in the universe. Boxes of a freshly
/// constructed or canonicalized region are pairwise disjoint; `union`
/// deliberately concatenates without normalizing so that callers control
/// when (and whether) to pay for [`Region::canonicalize`].
#[derive(Clone, Debug)]
pub struct Region {
    boxes: Vec<BBox>,
    universe: BBox,
}

impl Region {
    /// The empty region in `universe` (the universe box is closed on all
    /// edges regardless of the flags passed in).
    pub fn empty(universe: BBox) -> Self {
        Region { boxes: Vec::new(), universe: universe.all_closed() }
    }

    /// The full universe as a region.
    pub fn full(universe: BBox) -> Self {
        let universe = universe.all_closed();
        Region { boxes: vec![universe], universe }
    }

    /// A single box clipped to the universe.
    pub fn from_box(b: BBox, universe: BBox) -> Self {
        Region::from_boxes(vec![b], universe)
    }

    /// A union of boxes, each clipped to the universe; empty boxes are
    /// dropped. The boxes are kept as given otherwise (no normalization).
    pub fn from_boxes(boxes: Vec<BBox>, universe: BBox) -> Self {
        let universe = universe.all_closed();
        let boxes = boxes
            .into_iter()
            .map(|b| b.clamp_to(&universe))
            .filter(|b| !b.is_empty())
            .collect();
        Region { boxes, universe }
    }

    pub fn universe(&self) -> &BBox {
        &self.universe
    }

    pub fn boxes(&self) -> &[BBox] {
        &self.boxes
    }

    /// Number of boxes in the current representation (not a property of
    /// the point set; canonicalization changes it).
    pub fn box_count(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Tight closed bounding hull of the region, or `None` when empty.
    /// Anchor requests on composite regions use this hull.
    pub fn hull(&self) -> Option<BBox> {
        let first = self.boxes.first()?;
        let mut x_lo = first.x_lo;
        let mut y_lo = first.y_lo;
        let mut x_hi = first.x_hi;
        let mut y_hi = first.y_hi;
        for b in &self.boxes[1..] {
            x_lo = x_lo.min(b.x_lo);
            y_lo = y_lo.min(b.y_lo);
            x_hi = x_hi.max(b.x_hi);
            y_hi = y_hi.max(b.y_hi);
        }
        Some(BBox::closed(x_lo, y_lo, x_hi, y_hi))
    }

    /// True when the region covers the whole universe. Exact for any
    /// representation: checks that the complement is empty.
    pub fn is_universe(&self) -> bool {
        self.complement().is_empty()
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        self.boxes.iter().any(|b| b.contains_point(x, y))
    }

    /// Complement relative to the universe. Output boxes are pairwise
    /// disjoint.
    pub fn complement(&self) -> Region {
        let mut pieces = vec![self.universe];
        for b in &self.boxes {
            let mut next = Vec::with_capacity(pieces.len() + 3);
            for p in pieces {
                next.extend(p.subtract(b));
            }
            pieces = next;
            if pieces.is_empty() {
                break;
            }
        }
        Region { boxes: pieces, universe: self.universe }
    }

    /// Pairwise intersection; disjoint inputs yield disjoint outputs.
    pub fn intersect(&self, o: &Region) -> Region {
        let mut boxes = Vec::new();
        for a in &self.boxes {
            for b in &o.boxes {
                let c = a.intersect(b);
                if !c.is_empty() {
                    boxes.push(c);
                }
            }
        }
        Region { boxes, universe: self.universe }
    }

    /// Union by concatenation. The result may contain overlapping boxes;
    /// call [`Region::canonicalize`] to normalize.
    pub fn union(&self, o: &Region) -> Region {
        let mut boxes = self.boxes.clone();
        boxes.extend(o.boxes.iter().copied());
        Region { boxes, universe: self.universe }
    }

    /// Topological closure: closure distributes over finite unions, so
    /// each box simply has its edges closed.
    pub fn closure(&self) -> Region {
        let boxes = self.boxes.iter().map(BBox::all_closed).collect();
        Region { boxes, universe: self.universe }
    }

    /// Topological interior, computed as the complement of the closure of
    /// the complement. Per-box edge-opening would be wrong: in an L-shaped
    /// union the interior contains points on the boxes' shared edge.
    pub fn interior(&self) -> Region {
        self.complement().closure().complement()
    }

    /// `self ⊆ o` as point sets, exact for any representation.
    pub fn subset_of(&self, o: &Region) -> bool {
        self.intersect(&o.complement()).is_empty()
    }

    /// Point-set equality, exact for any representation.
    pub fn equivalent(&self, o: &Region) -> bool {
        self.subset_of(o) && o.subset_of(self)
    }

    /// Lebesgue measure of the point set. Representation-independent: the
    /// region is canonicalized into disjoint boxes internally, so raw
    /// (overlapping) unions do not double-count.
    pub fn area(&self) -> f64 {
        if self.boxes.len() <= 1 {
            return self.boxes.first().map_or(0.0, BBox::area);
        }
        self.canonicalize().boxes.iter().map(BBox::area).sum()
    }

    /// Rewrite into canonical form: vertical slab decomposition on the
    /// boxes' `x` breakpoints (with degenerate point slabs carrying closed
    /// edges), per-slab union of `y` intervals, and coalescing of adjacent
    /// slabs with identical `y` stacks. The result is pairwise disjoint,
    /// covers exactly the same point set, and for `n` input boxes has at
    /// most `(2n − 1)²` boxes.
    pub fn canonicalize(&self) -> Region {
        if self.boxes.is_empty() {
            return self.clone();
        }
        // Distinct x breakpoints, ascending.
        let mut bps: Vec<f64> = Vec::with_capacity(self.boxes.len() * 2);
        for b in &self.boxes {
            bps.push(b.x_lo);
            bps.push(b.x_hi);
        }
        bps.sort_by(|a, b| a.partial_cmp(b).expect("finite bound"));
        bps.dedup();

        // Atomic slabs: [p,p] point slabs at breakpoints, (p,q) gaps between.
        let mut slabs: Vec<Iv> = Vec::with_capacity(bps.len() * 2 - 1);
        for (i, &p) in bps.iter().enumerate() {
            slabs.push(Iv::closed(p, p));
            if let Some(&q) = bps.get(i + 1) {
                slabs.push(Iv::new(p, q, false, false));
            }
        }

        let mut out: Vec<BBox> = Vec::new();
        // Active runs: (y interval, x extent accumulated so far).
        let mut active: Vec<(Iv, Iv)> = Vec::new();
        for slab in slabs {
            let stack: Vec<Iv> = union_1d(
                self.boxes
                    .iter()
                    .filter(|b| {
                        let x = b.xi();
                        if slab.lo == slab.hi {
                            x.contains(slab.lo)
                        } else {
                            // No breakpoint lies strictly inside the gap,
                            // so covering it reduces to bound comparison.
                            x.lo <= slab.lo && x.hi >= slab.hi
                        }
                    })
                    .map(|b| b.yi())
                    .collect(),
            );
            let mut next_active: Vec<(Iv, Iv)> = Vec::with_capacity(stack.len());
            for y in stack {
                // Runs only survive consecutive slabs, which always abut,
                // so an exact y match means the run extends.
                if let Some(pos) = active.iter().position(|(ay, _)| *ay == y) {
                    let (_, x_run) = active.swap_remove(pos);
                    next_active.push((y, x_run.hull(&slab)));
                } else {
                    next_active.push((y, slab));
                }
            }
            for (y, x_run) in active.drain(..) {
                out.push(BBox::from_ivs(x_run, y));
            }
            active = next_active;
        }
        for (y, x_run) in active {
            out.push(BBox::from_ivs(x_run, y));
        }
        out.retain(|b| !b.is_empty());
        out.sort_by(|a, b| {
            a.x_lo
                .partial_cmp(&b.x_lo)
                .expect("finite bound")
                .then(a.y_lo.partial_cmp(&b.y_lo).expect("finite bound"))
                .then(a.x_hi.partial_cmp(&b.x_hi).expect("finite bound"))
                .then(a.y_hi.partial_cmp(&b.y_hi).expect("finite bound"))
        });
        Region { boxes: out, universe: self.universe }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u100() -> BBox {
        BBox::closed(0.0, 0.0, 100.0, 100.0)
    }

    #[test]
    fn pinned_area_of_detection_box() {
        let b = BBox::closed(58.0, 151.0, 220.0, 287.0);
        assert_eq!(b.area(), 22032.0);
    }

    #[test]
    fn pinned_anchor_points() {
        let b = BBox::closed(58.0, 151.0, 220.0, 287.0);
        assert_eq!(b.anchor(Crt::Ct), AnchorPoint { x: 139.0, y: 219.0 });
        assert_eq!(b.anchor(Crt::Lm), AnchorPoint { x: 58.0, y: 151.0 });
        assert_eq!(b.anchor(Crt::Rm), AnchorPoint { x: 220.0, y: 287.0 });
        assert_eq!(b.anchor(Crt::Tm), AnchorPoint { x: 220.0, y: 151.0 });
        assert_eq!(b.anchor(Crt::Bm), AnchorPoint { x: 58.0, y: 287.0 });
    }

    #[test]
    fn pinned_intersection_of_nested_boxes() {
        let outer = BBox::closed(479.0, 124.0, 690.0, 382.0);
        let inner = BBox::closed(522.0, 130.0, 632.0, 377.0);
        assert_eq!(outer.intersect(&inner), inner);
    }

    #[test]
    fn complement_partitions_the_universe() {
        let u = BBox::closed(0.0, 0.0, 10.0, 10.0);
        let r = Region::from_box(BBox::closed(2.0, 3.0, 5.0, 7.0), u);
        let c = r.complement();
        assert!(c.intersect(&r).is_empty());
        assert!(c.union(&r).is_universe());
        assert_eq!(c.area() + r.area(), 100.0);
        // The carved-out hole is open where the box's closed edges were.
        assert!(!c.contains_point(2.0, 3.0));
        assert!(!c.contains_point(5.0, 7.0));
        assert!(c.contains_point(1.999, 3.0));
    }

    #[test]
    fn interior_and_closure_flip_edges_of_a_single_box() {
        let r = Region::from_box(BBox::closed(2.0, 2.0, 6.0, 6.0), u100());
        let int = r.interior();
        assert!(!int.contains_point(2.0, 4.0));
        assert!(!int.contains_point(6.0, 6.0));
        assert!(int.contains_point(2.0001, 4.0));
        let back = int.closure();
        assert!(back.equivalent(&r));

        let open = Region::from_box(BBox::open(2.0, 2.0, 6.0, 6.0), u100());
        assert!(open.closure().contains_point(2.0, 2.0));
        assert!(open.closure().equivalent(&r));
    }

    #[test]
    fn interior_keeps_the_shared_edge_of_an_l_shape() {
        // A = [0,2]x[0,1], B = [0,1]x[0,2]: the point (0.5, 1) lies on the
        // boxes' shared edge but strictly inside the L, while (1.5, 1) is
        // on the L's boundary. Per-box edge-opening would drop both.
        let a = BBox::closed(0.0, 0.0, 2.0, 1.0);
        let b = BBox::closed(0.0, 0.0, 1.0, 2.0);
        let l = Region::from_boxes(vec![a, b], u100());
        let int = l.interior();
        assert!(int.contains_point(0.5, 1.0));
        assert!(!int.contains_point(1.5, 1.0));
        // The L's own outer edge (away from the universe boundary, whose
        // points are interior in the subspace topology) stays excluded.
        assert!(!int.contains_point(2.0, 0.5));
    }

    #[test]
    fn kuratowski_smoke_on_an_overlapping_union() {
        let u = BBox::closed(0.0, 0.0, 20.0, 20.0);
        let r = Region::from_boxes(
            vec![BBox::closed(1.0, 1.0, 8.0, 8.0), BBox::open(5.0, 5.0, 12.0, 12.0)],
            u,
        );
        let int = r.interior();
        assert!(int.subset_of(&r));
        assert!(int.interior().equivalent(&int));
        assert!(Region::full(u).interior().is_universe());
        let s = Region::from_box(BBox::closed(3.0, 3.0, 15.0, 6.0), u);
        let lhs = r.intersect(&s).interior();
        let rhs = r.interior().intersect(&s.interior());
        assert!(lhs.equivalent(&rhs));
    }

    #[test]
    fn degenerate_boxes_are_points_and_segments() {
        let p = BBox::closed(5.0, 5.0, 5.0, 5.0);
        assert!(!p.is_empty());
        assert_eq!(p.area(), 0.0);
        assert!(p.contains_point(5.0, 5.0));
        assert!(BBox::open(5.0, 5.0, 5.0, 7.0).is_empty());
        let seg = Region::from_box(BBox::closed(1.0, 2.0, 1.0, 9.0), u100());
        assert_eq!(seg.area(), 0.0);
        assert!(!seg.is_empty());
        assert!(seg.interior().is_empty());
    }

    #[test]
    fn union_coalesces_abutting_boxes() {
        let r = Region::from_boxes(
            vec![BBox::closed(0.0, 0.0, 1.0, 1.0), BBox::closed(1.0, 0.0, 2.0, 1.0)],
            u100(),
        );
        let c = r.canonicalize();
        assert_eq!(c.box_count(), 1);
        assert_eq!(c.boxes()[0], BBox::closed(0.0, 0.0, 2.0, 1.0));
    }

    #[test]
    fn canonicalize_preserves_points_and_disjointness() {
        let u = BBox::closed(0.0, 0.0, 10.0, 10.0);
        let r = Region::from_boxes(
            vec![
                BBox::closed(0.0, 0.0, 4.0, 4.0),
                BBox::open(2.0, 2.0, 6.0, 6.0),
                BBox::new_mixed(),
            ],
            u,
        );
        let c = r.canonicalize();
        assert!(c.equivalent(&r));
        for (i, a) in c.boxes().iter().enumerate() {
            for b in &c.boxes()[i + 1..] {
                assert!(a.intersect(b).is_empty(), "{a:?} overlaps {b:?}");
            }
        }
        assert!(c.box_count() <= (2 * 3 - 1) * (2 * 3 - 1));
    }

    impl BBox {
        fn new_mixed() -> BBox {
            BBox {
                x_lo: 3.0,
                x_hi: 9.0,
                y_lo: 1.0,
                y_hi: 3.0,
                closed_left: true,
                closed_right: false,
                closed_top: false,
                closed_bottom: true,
            }
        }
    }

    #[test]
    fn empty_and_universe_are_dual() {
        let u = u100();
        assert!(Region::empty(u).complement().is_universe());
        assert!(Region::full(u).complement().is_empty());
        assert!(!Region::empty(u).is_universe());
    }
}
