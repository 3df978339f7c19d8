//! Randomized region algebra checked against a rasterized membership
//! oracle.
//!
//! Regions are built from boxes whose coordinates lie on the half-unit
//! grid of an 8×8 universe. Such a region is fully determined by its
//! membership on the quarter-unit lattice (33×33 probe points): cell
//! interiors are sampled at cell centers, edges at edge midpoints, and
//! vertices at themselves. The oracle evaluates the defining expression
//! pointwise. Interior and closure probe an eighth unit to each side, but
//! only along axes where the point lies on the half-unit grid (elsewhere
//! the point sits strictly inside a grid cell, where membership is
//! locally constant and no probing is needed). Probe points land strictly
//! inside adjacent cells — an eighth unit from the incident edge, three
//! eighths from the next — so the scheme stays exact under arbitrary
//! nesting of interior and closure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stpl_core::spatial::{BBox, Region};

const LO: f64 = 0.0;
const HI: f64 = 8.0;
const STEP: f64 = 0.25;
const EPS: f64 = 0.125;

fn universe() -> BBox {
    BBox::closed(LO, LO, HI, HI)
}

fn in_universe(x: f64, y: f64) -> bool {
    (LO..=HI).contains(&x) && (LO..=HI).contains(&y)
}

/// Is the coordinate on the half-unit grid that box edges live on?
fn on_edge_grid(c: f64) -> bool {
    (c * 2.0).fract() == 0.0
}

#[derive(Clone, Debug)]
enum Expr {
    Leaf(BBox),
    Empty,
    Full,
    Cmpl(Box<Expr>),
    Union(Box<Expr>, Box<Expr>),
    Inter(Box<Expr>, Box<Expr>),
    Int(Box<Expr>),
    Cl(Box<Expr>),
}

/// Neighborhood sample for interior/closure at `(x, y)`: the point
/// itself, plus one point an eighth unit to each side along every axis
/// on which the point could sit on a box edge.
fn probes(x: f64, y: f64) -> Vec<(f64, f64)> {
    let xs = if on_edge_grid(x) { vec![x - EPS, x, x + EPS] } else { vec![x] };
    let ys = if on_edge_grid(y) { vec![y - EPS, y, y + EPS] } else { vec![y] };
    xs.iter().flat_map(|&px| ys.iter().map(move |&py| (px, py))).collect()
}

/// Pointwise truth of the expression at `(x, y)`, which must lie inside
/// the universe. Complement is relative to the universe; interior and
/// closure skip probes outside it (subspace topology).
fn holds(e: &Expr, x: f64, y: f64) -> bool {
    match e {
        Expr::Leaf(b) => b.contains_point(x, y),
        Expr::Empty => false,
        Expr::Full => true,
        Expr::Cmpl(a) => !holds(a, x, y),
        Expr::Union(a, b) => holds(a, x, y) || holds(b, x, y),
        Expr::Inter(a, b) => holds(a, x, y) && holds(b, x, y),
        Expr::Int(a) => probes(x, y)
            .into_iter()
            .all(|(px, py)| !in_universe(px, py) || holds(a, px, py)),
        Expr::Cl(a) => probes(x, y)
            .into_iter()
            .any(|(px, py)| in_universe(px, py) && holds(a, px, py)),
    }
}

fn build(e: &Expr) -> Region {
    match e {
        Expr::Leaf(b) => Region::from_box(*b, universe()),
        Expr::Empty => Region::empty(universe()),
        Expr::Full => Region::full(universe()),
        Expr::Cmpl(a) => build(a).complement(),
        Expr::Union(a, b) => build(a).union(&build(b)),
        Expr::Inter(a, b) => build(a).intersect(&build(b)),
        Expr::Int(a) => build(a).interior(),
        Expr::Cl(a) => build(a).closure(),
    }
}

fn lattice() -> impl Iterator<Item = (f64, f64)> {
    (0..=32).flat_map(|i| (0..=32).map(move |j| (i as f64 * STEP, j as f64 * STEP)))
}

fn raster(r: &Region) -> Vec<bool> {
    lattice().map(|(x, y)| r.contains_point(x, y)).collect()
}

fn raster_expr(e: &Expr) -> Vec<bool> {
    lattice().map(|(x, y)| holds(e, x, y)).collect()
}

/// Area by counting half-unit cell centers, exact for edge-grid regions
/// because every cell is uniformly inside or outside.
fn raster_area(r: &Region) -> f64 {
    let mut cells = 0;
    for i in 0..16 {
        for j in 0..16 {
            if r.contains_point(0.25 + i as f64 * 0.5, 0.25 + j as f64 * 0.5) {
                cells += 1;
            }
        }
    }
    cells as f64 * 0.25
}

fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    let coord = |rng: &mut ChaCha8Rng| rng.gen_range(0..=16) as f64 * 0.5;
    let (a, b) = (coord(rng), coord(rng));
    let (c, d) = (coord(rng), coord(rng));
    BBox {
        x_lo: a.min(b),
        x_hi: a.max(b),
        y_lo: c.min(d),
        y_hi: c.max(d),
        closed_left: rng.gen_bool(0.5),
        closed_right: rng.gen_bool(0.5),
        closed_top: rng.gen_bool(0.5),
        closed_bottom: rng.gen_bool(0.5),
    }
}

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..10) {
            0 => Expr::Empty,
            1 => Expr::Full,
            _ => Expr::Leaf(random_box(rng)),
        };
    }
    match rng.gen_range(0..6) {
        0 => Expr::Cmpl(random_expr(rng, depth - 1).into()),
        1 => Expr::Int(random_expr(rng, depth - 1).into()),
        2 => Expr::Cl(random_expr(rng, depth - 1).into()),
        3 => Expr::Inter(
            random_expr(rng, depth - 1).into(),
            random_expr(rng, depth - 1).into(),
        ),
        _ => Expr::Union(
            random_expr(rng, depth - 1).into(),
            random_expr(rng, depth - 1).into(),
        ),
    }
}

const ROUNDS: usize = 1100;

#[test]
fn implementation_matches_the_pointwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3001);
    for round in 0..ROUNDS {
        let e = random_expr(&mut rng, 3);
        assert_eq!(
            raster(&build(&e)),
            raster_expr(&e),
            "round {round}: membership diverges for {e:?}",
        );
    }
}

#[test]
fn kuratowski_interior_axioms_hold() {
    let full = Region::full(universe());
    assert_eq!(raster(&full.interior()), raster(&full));

    let mut rng = ChaCha8Rng::seed_from_u64(3002);
    for round in 0..ROUNDS {
        let a = build(&random_expr(&mut rng, 2));
        let b = build(&random_expr(&mut rng, 2));
        let ia = a.interior();

        let ra = raster(&a);
        let ria = raster(&ia);
        let deflation = ria.iter().zip(&ra).all(|(&i, &o)| !i || o);
        assert!(deflation, "round {round}: interior escapes its region");
        assert_eq!(raster(&ia.interior()), ria, "round {round}: interior is not idempotent");

        let lhs = raster(&a.intersect(&b).interior());
        let rhs: Vec<bool> = ria
            .iter()
            .zip(&raster(&b.interior()))
            .map(|(&x, &y)| x && y)
            .collect();
        assert_eq!(lhs, rhs, "round {round}: interior does not distribute over intersection");
    }
}

#[test]
fn de_morgan_duality_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    for round in 0..ROUNDS {
        let a = build(&random_expr(&mut rng, 2));
        let b = build(&random_expr(&mut rng, 2));

        assert_eq!(
            raster(&a.union(&b).complement()),
            raster(&a.complement().intersect(&b.complement())),
            "round {round}: complement of a union",
        );
        assert_eq!(
            raster(&a.intersect(&b).complement()),
            raster(&a.complement().union(&b.complement())),
            "round {round}: complement of an intersection",
        );
        assert_eq!(
            raster(&a.closure()),
            raster(&a.complement().interior().complement()),
            "round {round}: closure is not the dual of interior",
        );
    }
}

#[test]
fn complement_is_an_involution() {
    let mut rng = ChaCha8Rng::seed_from_u64(3004);
    for round in 0..ROUNDS {
        let a = build(&random_expr(&mut rng, 3));
        assert_eq!(
            raster(&a.complement().complement()),
            raster(&a),
            "round {round}: double complement changes the region",
        );
    }
}

#[test]
fn area_satisfies_inclusion_exclusion_and_matches_the_raster() {
    let mut rng = ChaCha8Rng::seed_from_u64(3005);
    for round in 0..ROUNDS {
        let a = build(&random_expr(&mut rng, 2));
        let b = build(&random_expr(&mut rng, 2));

        // Coordinates are dyadic, so every area is an exact multiple of
        // one quarter and the comparisons below are exact.
        assert_eq!(a.area(), raster_area(&a), "round {round}: area diverges from the raster");
        let lhs = a.union(&b).area() + a.intersect(&b).area();
        assert_eq!(lhs, a.area() + b.area(), "round {round}: inclusion-exclusion fails");
    }
}

#[test]
fn canonicalize_is_idempotent_and_preserves_the_point_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(3006);
    for round in 0..ROUNDS {
        let a = build(&random_expr(&mut rng, 3));
        let canon = a.canonicalize();

        assert_eq!(raster(&canon), raster(&a), "round {round}: canonical form moved points");
        assert_eq!(
            canon.canonicalize().boxes(),
            canon.boxes(),
            "round {round}: canonicalize is not idempotent",
        );
        for (i, x) in canon.boxes().iter().enumerate() {
            for y in &canon.boxes()[i + 1..] {
                assert!(
                    x.intersect(y).is_empty(),
                    "round {round}: canonical boxes overlap",
                );
            }
        }
        let n = a.box_count();
        if n > 0 {
            let bound = (2 * n - 1) * (2 * n - 1);
            assert!(
                canon.box_count() <= bound,
                "round {round}: {} canonical boxes from {n} inputs exceeds {bound}",
                canon.box_count(),
            );
        }
    }
}
