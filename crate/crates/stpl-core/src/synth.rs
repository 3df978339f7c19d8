//! Seeded generators for streams and formulas.
//!
//! Everything here is deterministic in its seed (ChaCha-based), so test
//! failures reproduce exactly. Three families:
//!
//! * [`random_stream`] / [`random_formula`] — small inputs for
//!   differential fuzzing of the two engines. Generated formulas stay
//!   inside the table engine's fragment by construction: variant binders
//!   (clock-recording quantifiers and bare freezes) are only placed where
//!   no outer variable is in scope, and past operands never look into
//!   the future.
//! * [`blowup_stream`] / [`blowup_formula`] — an adversarial pair whose
//!   spatial-until recurrences multiply raw box counts geometrically,
//!   for measuring representation growth with canonicalization off.
//! * [`scaling_stream`] with [`relative_position_formula`] /
//!   [`in_bounds_formula`] — dense stable-track streams and the two
//!   requirement shapes used to measure how cost grows with stream
//!   length.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::datastream::{load_csv_str, DataStream, MetaOverrides};
use crate::formula::{parse, Formula};
use crate::spatial::BBox;

const HEADER: &str = "frame,time,id,class,prob,xmin,ymin,xmax,ymax,empty,md,pc_count\n";
const CLASSES: [&str; 3] = ["car", "pedestrian", "cyclist"];
const ANCHORS: [&str; 5] = ["LM", "RM", "TM", "BM", "CT"];
/// Exact-decimal timestamps (25 fps ticks) safe to print and re-parse.
const TIMES: [&str; 9] = ["0", "0.04", "0.08", "0.12", "0.16", "0.2", "0.24", "0.28", "0.32"];

/// A stream and formula generated from the same seed, for differential
/// fuzzing.
pub fn fuzz_pair(seed: u64) -> (DataStream, Formula) {
    (random_stream(seed), random_formula(seed ^ 0x9e37_79b9_7f4a_7c15))
}

/// A small random stream: up to six frames over up to four tracks with
/// churn (objects appear and disappear), occasionally an empty stream or
/// objectless frames, sometimes with heading and point-cloud attributes.
pub fn random_stream(seed: u64) -> DataStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = if rng.gen_ratio(1, 16) { 0 } else { rng.gen_range(1..=6) };
    let with_md = rng.gen_bool(0.5);
    let with_pc = rng.gen_bool(0.3);
    let class_of: BTreeMap<u64, &str> =
        (1..=4).map(|id| (id, *CLASSES.choose(&mut rng).expect("non-empty"))).collect();

    let mut csv = String::from(HEADER);
    for i in 0..n {
        let time = TIMES[i];
        let mut wrote = false;
        for (&id, &class) in &class_of {
            if !rng.gen_bool(0.7) {
                continue;
            }
            wrote = true;
            let prob = rng.gen_range(5..100); // percent, printed as 0.xx
            let x = rng.gen_range(0..1100);
            let y = rng.gen_range(0..300);
            let w = rng.gen_range(5..140);
            let h = rng.gen_range(5..75);
            let empty = u8::from(rng.gen_bool(0.15));
            let md = if with_md { rng.gen_range(-2..=2).to_string() } else { String::new() };
            let pc = if with_pc && empty == 0 {
                rng.gen_range(1..500u32).to_string()
            } else {
                String::new()
            };
            writeln!(
                csv,
                "{i},{time},{id},{class},0.{prob:02},{x},{y},{},{},{empty},{md},{pc}",
                x + w,
                y + h
            )
            .expect("write to string");
        }
        if !wrote {
            writeln!(csv, "{i},{time},,,,,,,,,,").expect("write to string");
        }
    }
    load_csv_str(&csv, MetaOverrides::default()).expect("generated stream is valid")
}

/// A random formula inside the table engine's fragment, exercising the
/// whole grammar: both quantifier forms, freezes, clock constraints,
/// temporal operators with and without windows, past operators with
/// frame-local operands, spatial terms, and attribute atoms.
pub fn random_formula(seed: u64) -> Formula {
    let mut gen = FormulaGen { rng: ChaCha8Rng::seed_from_u64(seed), next_var: 1 };
    let depth = gen.rng.gen_range(2..=4);
    let src = gen.formula(&Ctx { ids: Vec::new(), clock: None, future_ok: true }, depth);
    parse(&src).unwrap_or_else(|e| panic!("generated formula must parse: {e}\n{src}"))
}

/// Scope and positional restrictions threaded through generation.
#[derive(Clone)]
struct Ctx {
    ids: Vec<String>,
    clock: Option<String>,
    /// False inside past operands, where the table engine requires
    /// frame-local evaluation.
    future_ok: bool,
}

struct FormulaGen {
    rng: ChaCha8Rng,
    next_var: u32,
}

impl FormulaGen {
    fn fresh_id(&mut self) -> String {
        let v = format!("id{}", self.next_var);
        self.next_var += 1;
        v
    }

    fn fresh_clock(&mut self) -> String {
        let v = format!("x{}", self.next_var);
        self.next_var += 1;
        v
    }

    fn pick<'a>(&mut self, options: &[&'a str]) -> &'a str {
        options[self.rng.gen_range(0..options.len())]
    }

    fn cmp(&mut self) -> &'static str {
        self.pick(&["<", "<=", ">", ">=", "==", "!="])
    }

    /// A window suffix for temporal operators, e.g. `[0,2]f`, `[0.04,0.2]t`,
    /// or `[1,inf)f`. Always closed at the left, per the grammar.
    fn window(&mut self) -> String {
        if self.rng.gen_bool(0.5) {
            let lo = self.rng.gen_range(0..=2);
            if self.rng.gen_bool(0.2) {
                format!("[{lo},inf)f")
            } else {
                format!("[{lo},{}]f", lo + self.rng.gen_range(0..=3))
            }
        } else {
            let lo = self.rng.gen_range(0..=2);
            let hi = self.rng.gen_range(lo + 1..TIMES.len());
            format!("[{},{}]t", TIMES[lo], TIMES[hi])
        }
    }

    fn maybe_window(&mut self) -> String {
        if self.rng.gen_bool(0.5) { self.window() } else { String::new() }
    }

    fn formula(&mut self, ctx: &Ctx, depth: u32) -> String {
        if depth == 0 {
            return self.atom(ctx);
        }
        // Variant binders re-anchor evaluation; keep them where no outer
        // variable could leak into their scope.
        let variant_ok = ctx.future_ok && ctx.ids.is_empty() && ctx.clock.is_none();
        let choice = self.rng.gen_range(0..100);
        match choice {
            0..=9 => self.atom(ctx),
            10..=17 => format!("not ({})", self.formula(ctx, depth - 1)),
            18..=33 => {
                let op = self.pick(&["and", "or", "implies"]);
                format!("({} {op} {})", self.formula(ctx, depth - 1), self.formula(ctx, depth - 1))
            }
            34..=41 if ctx.future_ok => {
                let op = self.pick(&["next", "wnext"]);
                format!("{op} ({})", self.formula(ctx, depth - 1))
            }
            42..=55 if ctx.future_ok => {
                let op = self.pick(&["always", "eventually"]);
                format!("{op}{} ({})", self.maybe_window(), self.formula(ctx, depth - 1))
            }
            56..=65 if ctx.future_ok => {
                let op = self.pick(&["until", "release"]);
                format!(
                    "(({}) {op}{} ({}))",
                    self.formula(ctx, depth - 1),
                    self.maybe_window(),
                    self.formula(ctx, depth - 1)
                )
            }
            66..=73 => {
                let local = Ctx { future_ok: false, ..ctx.clone() };
                if self.rng.gen_bool(0.6) {
                    let op = self.pick(&["prev", "wprev"]);
                    format!("{op} ({})", self.formula(&local, depth - 1))
                } else {
                    format!(
                        "(({}) since ({}))",
                        self.formula(&local, depth - 1),
                        self.formula(&local, depth - 1)
                    )
                }
            }
            74..=85 => {
                // Plain object quantifier; allowed anywhere, including
                // past operands.
                let q = self.pick(&["exists", "forall"]);
                let v = self.fresh_id();
                let mut inner = ctx.clone();
                inner.ids.push(v.clone());
                format!("{q} {v} . ({})", self.formula(&inner, depth - 1))
            }
            86..=95 if variant_ok => {
                let x = self.fresh_clock();
                if self.rng.gen_bool(0.7) {
                    let q = self.pick(&["exists", "forall"]);
                    let v = self.fresh_id();
                    let inner =
                        Ctx { ids: vec![v.clone()], clock: Some(x.clone()), future_ok: true };
                    format!("{q} {v} @ {x} . ({})", self.formula(&inner, depth - 1))
                } else {
                    let inner = Ctx { ids: Vec::new(), clock: Some(x.clone()), future_ok: true };
                    format!("{x} . ({})", self.formula(&inner, depth - 1))
                }
            }
            _ => self.atom(ctx),
        }
    }

    fn atom(&mut self, ctx: &Ctx) -> String {
        // Clock constraints and two-variable atoms need their variables
        // in scope; fall through to simpler forms otherwise.
        let roll = self.rng.gen_range(0..100);
        if let Some(x) = &ctx.clock {
            if roll < 25 {
                return match self.rng.gen_range(0..3) {
                    0 => format!("CTIME - {x} {} {}", self.cmp(), TIMES[self.rng.gen_range(1..6)]),
                    1 => format!("CFRAME - {x} {} {}", self.cmp(), self.rng.gen_range(0..5)),
                    _ => format!(
                        "(CFRAME - {x}) % {} {} {}",
                        self.rng.gen_range(2..4),
                        self.pick(&["==", "!="]),
                        self.rng.gen_range(0..2)
                    ),
                };
            }
        }
        if ctx.ids.len() >= 2 && roll < 50 {
            let a = ctx.ids[self.rng.gen_range(0..ctx.ids.len())].clone();
            let b = ctx.ids[self.rng.gen_range(0..ctx.ids.len())].clone();
            return match self.rng.gen_range(0..5) {
                0 => format!("{a} {} {b}", self.pick(&["==", "!="])),
                1 => {
                    let ca = self.pick(&ANCHORS);
                    let cb = self.pick(&ANCHORS);
                    format!("DIST({a}, {ca}, {b}, {cb}) {} {}", self.cmp(), self.rng.gen_range(1..1500))
                }
                2 => format!(
                    "RATIO(AREA({a}), AREA({b})) {} 0.{}",
                    self.cmp(),
                    self.rng.gen_range(1..100)
                ),
                3 => {
                    let vp = self.pick(&["EGO", "UNIVERSE"]);
                    format!("VISIBLE({vp}, CT, {a}, {b})")
                }
                _ => format!("PROB({a}) {} 0.{} * PROB({b})", self.cmp(), self.rng.gen_range(1..100)),
            };
        }
        if let Some(v) = ctx.ids.last().cloned().filter(|_| roll < 80) {
            let v = if ctx.ids.len() > 1 && self.rng.gen_bool(0.5) {
                ctx.ids[self.rng.gen_range(0..ctx.ids.len())].clone()
            } else {
                v
            };
            return match self.rng.gen_range(0..9) {
                0 => format!(
                    "CLASS({v}) {} \"{}\"",
                    self.pick(&["==", "!="]),
                    self.pick(&CLASSES)
                ),
                1 => format!("PROB({v}) {} 0.{}", self.cmp(), self.rng.gen_range(1..100)),
                2 => format!("AREA({v}) {} {}", self.cmp(), self.rng.gen_range(1..40000)),
                3 => {
                    let c = self.pick(&ANCHORS);
                    format!("LAT({v}, {c}) {} {}", self.cmp(), self.rng.gen_range(0..1242))
                }
                4 => {
                    let c = self.pick(&ANCHORS);
                    format!("LON({v}, {c}) {} {}", self.cmp(), self.rng.gen_range(0..375))
                }
                5 => format!("MD({v}) {} {}", self.pick(&["==", "!="]), self.rng.gen_range(-2..=2)),
                6 => format!("EMPTY({v})"),
                7 => format!("DIST({v}, CT, EGO, CT) {} {}", self.cmp(), self.rng.gen_range(1..1500)),
                _ => {
                    let se = self.pick(&["SE", "SA"]);
                    format!("{se}({})", self.term(ctx, 2))
                }
            };
        }
        match self.rng.gen_range(0..4) {
            0 => "true".to_string(),
            1 => "false".to_string(),
            2 => format!("SA({})", self.term(ctx, 1)),
            _ => format!("SE({})", self.term(ctx, 1)),
        }
    }

    fn term(&mut self, ctx: &Ctx, depth: u32) -> String {
        if depth == 0 {
            return if let Some(v) = ctx.ids.last().filter(|_| !ctx.ids.is_empty()) {
                let v = if ctx.ids.len() > 1 && self.rng.gen_bool(0.5) {
                    &ctx.ids[self.rng.gen_range(0..ctx.ids.len())]
                } else {
                    v
                };
                format!("BB({v})")
            } else {
                self.pick(&["EMPTYSET", "UNIVERSE"]).to_string()
            };
        }
        let choice = self.rng.gen_range(0..100);
        match choice {
            0..=29 => self.term(ctx, 0),
            30..=49 => {
                let op = self.pick(&["CMPL", "INT", "CL"]);
                format!("{op}({})", self.term(ctx, depth - 1))
            }
            50..=69 => {
                let op = self.pick(&["CAP", "CUP"]);
                format!("({} {op} {})", self.term(ctx, depth - 1), self.term(ctx, depth - 1))
            }
            70..=79 if ctx.future_ok => format!("NEXTS ({})", self.term(ctx, depth - 1)),
            80..=89 if ctx.future_ok => {
                let op = self.pick(&["ALWAYSS", "EVENTUALLYS"]);
                format!("{op}{} ({})", self.maybe_window(), self.term(ctx, depth - 1))
            }
            90..=99 if ctx.future_ok => {
                let op = self.pick(&["UNTILS", "RELEASES"]);
                format!(
                    "(({}) {op}{} ({}))",
                    self.term(ctx, depth - 1),
                    self.maybe_window(),
                    self.term(ctx, depth - 1)
                )
            }
            _ => self.term(ctx, 0),
        }
    }
}

/// Five frames, two always-present objects whose boxes all share a
/// common core but are pairwise distinct. Under the spatial-until
/// recurrence with canonicalization off, every raw intersection keeps
/// one box per input box and every union concatenates, so representation
/// sizes follow the product recurrence exactly (see [`blowup_formula`]).
pub fn blowup_stream() -> DataStream {
    let mut csv = String::from(HEADER);
    for u in 0i64..5 {
        let t = format!("0.{u}");
        let (a0, a1) = (90 - u, 120 + u);
        writeln!(csv, "{u},{t},1,car,0.9,{a0},{a0},{a1},{a1},,,").expect("write to string");
        let (bx0, by0, bx1, by1) = (80 - u, 85 - u, 115 + u, 118 + u);
        writeln!(csv, "{u},{t},2,car,0.9,{bx0},{by0},{bx1},{by1},,,").expect("write to string");
    }
    load_csv_str(&csv, MetaOverrides::default()).expect("blowup stream is valid")
}

/// Nested spatial untils over the two blowup tracks. With raw unions the
/// inner until grows by one box per frame swept (1, 2, 3, 4, 5 going
/// backwards) and the outer one multiplies against its own previous row:
/// `|outer(u)| = |inner(u)| · (1 + |outer(u+1)|)`, giving 1, 4, 15, 64,
/// 325 boxes at frames 4 down to 0.
pub fn blowup_formula() -> Formula {
    parse(
        "exists id1 . exists id2 . \
         SE((BB(id1) UNTILS BB(id2)) UNTILS (BB(id1) UNTILS BB(id2)))",
    )
    .expect("blowup formula parses")
}

/// A dense stream with `tracks` objects present in every frame, drifting
/// gently on a grid inside a 1242×375 universe at 25 fps. Track classes
/// cycle through car/pedestrian/cyclist.
pub fn scaling_stream(frames: usize, tracks: usize, seed: u64) -> DataStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (60i64, 80i64);
    let cols = 10usize;
    let mut xs: Vec<i64> = Vec::with_capacity(tracks);
    let mut ys: Vec<i64> = Vec::with_capacity(tracks);
    for k in 0..tracks {
        xs.push(20 + (k % cols) as i64 * 120);
        ys.push(20 + (k / cols) as i64 * 130);
    }
    let mut csv = String::from(HEADER);
    for i in 0..frames {
        // 25 fps with exact hundredth timestamps.
        let t = format!("{}.{:02}", i / 25, (i % 25) * 4);
        for k in 0..tracks {
            xs[k] = (xs[k] + rng.gen_range(-2..=2)).clamp(0, 1242 - w);
            ys[k] = (ys[k] + rng.gen_range(-2..=2)).clamp(0, 375 - h);
            let class = CLASSES[k % CLASSES.len()];
            let prob = 80 + ((k + i) % 19);
            writeln!(
                csv,
                "{i},{t},{},{class},0.{prob},{},{},{},{},,,",
                k as u64 + 1,
                xs[k],
                ys[k],
                xs[k] + w,
                ys[k] + h
            )
            .expect("write to string");
        }
    }
    let overrides = MetaOverrides {
        universe: Some(BBox::closed(0.0, 0.0, 1242.0, 375.0)),
        fps: Some(25.0),
        ..MetaOverrides::default()
    };
    load_csv_str(&csv, overrides).expect("scaling stream is valid")
}

/// Requirement shape "every object keeps a neighbor": at every frame,
/// each object (frozen with its clock) must within the next 0.2 seconds
/// always have some distinct other object within 1500 px of its center.
pub fn relative_position_formula() -> Formula {
    parse(
        "always forall id1 @ x1 . always[0,0.2]t \
         (exists id2 . (id1 != id2 and DIST(id1, CT, id2, CT) < 1500))",
    )
    .expect("relative-position formula parses")
}

/// Requirement shape "detections stay inside the image": every reported
/// box lies within the universe extent.
pub fn in_bounds_formula() -> Formula {
    parse(
        "always forall id1 . (LAT(id1, LM) >= 0 and LAT(id1, RM) <= 1242 \
         and LON(id1, TM) >= 0 and LON(id1, BM) <= 375)",
    )
    .expect("in-bounds formula parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::pretty_print;

    #[test]
    fn random_streams_are_valid_and_deterministic() {
        for seed in 0..50 {
            let a = random_stream(seed);
            let b = random_stream(seed);
            assert!(a.len() <= 6);
            assert_eq!(a.len(), b.len(), "seed {seed}");
            assert_eq!(a.to_csv_string(), b.to_csv_string(), "seed {seed}");
        }
        // The family covers the edge shapes.
        assert!((0..200).any(|s| random_stream(s).is_empty()), "some stream is empty");
        assert!(
            (0..200).any(|s| {
                let d = random_stream(s);
                (0..d.len()).any(|i| d.ids(i).next().is_none())
            }),
            "some frame is objectless"
        );
    }

    #[test]
    fn random_formulas_round_trip_and_stay_supported() {
        let d = random_stream(7);
        for seed in 0..200 {
            let f = random_formula(seed);
            let printed = pretty_print(&f);
            let back = parse(&printed)
                .unwrap_or_else(|e| panic!("seed {seed}: reparse failed: {e}\n{printed}"));
            assert_eq!(back, f, "seed {seed}: printing must round-trip\n{printed}");
            crate::dp::monitor(&d, &f)
                .unwrap_or_else(|e| panic!("seed {seed}: table engine rejected {printed}: {e}"));
        }
    }

    #[test]
    fn random_formulas_cover_the_grammar() {
        let mut sources = String::new();
        for seed in 0..400 {
            sources.push_str(&pretty_print(&random_formula(seed)));
            sources.push('\n');
        }
        for needle in [
            "exists", "forall", "@", " . ", "until", "since", "prev", "always", "eventually",
            "next", "CTIME", "CFRAME", "%", "SE(", "SA(", "BB(", "CUP", "CAP", "CMPL", "UNTILS",
            "DIST", "PROB", "CLASS", "AREA", "]f", "]t",
        ] {
            assert!(sources.contains(needle), "no generated formula used {needle:?}");
        }
    }

    #[test]
    fn blowup_inputs_have_the_advertised_shape() {
        let d = blowup_stream();
        assert_eq!(d.len(), 5);
        for i in 0..5 {
            assert_eq!(d.ids(i).collect::<Vec<_>>(), vec![1, 2], "frame {i}");
        }
        // Every box contains the common core point (100, 100).
        for i in 0..5 {
            for id in [1, 2] {
                let b = d.retrieve(i, id).expect("present").bbox;
                assert!(b.contains_point(100.0, 100.0), "frame {i} id {id}");
            }
        }
        let f = blowup_formula();
        crate::dp::monitor(&d, &f).expect("blowup formula is supported");
    }

    #[test]
    fn scaling_streams_have_stable_tracks() {
        let d = scaling_stream(30, 20, 1);
        assert_eq!(d.len(), 30);
        assert_eq!(d.all_ids().len(), 20);
        for i in 0..30 {
            assert_eq!(d.ids(i).count(), 20, "frame {i}");
        }
        assert_eq!(d.universe(), BBox::closed(0.0, 0.0, 1242.0, 375.0));
        // Formulas the scaling runs use parse and are supported.
        crate::dp::monitor(&d, &relative_position_formula()).expect("supported");
        crate::dp::monitor(&d, &in_bounds_formula()).expect("supported");
    }
}
