//! Rewriting derived operators into the core fragment.
//!
//! The core fragment keeps: `true`, `not`, `and`, `or`, `next`, plain
//! `until`, `prev`, `since`, quantifiers/freeze, constraints, equalities,
//! `SE`, and the core spatial terms (`BB`, `EMPTYSET`, `UNIVERSE`,
//! `CMPL`, `CAP`, `INT`, plain `UNTILS`, `NEXTS`). Everything else
//! rewrites into it:
//!
//! - `a implies b` becomes `not a or b`;
//! - `forall` becomes `not exists not`;
//! - `wnext` / `wprev` become `not next not` / `not prev not`;
//! - `eventually φ` becomes `true until φ`; `always φ` its dual;
//! - `a release b` becomes `not (not a until not b)`;
//! - an interval-decorated operator freezes a fresh clock and guards the
//!   right side with the matching `CTIME`/`CFRAME` constraints, e.g.
//!   `eventually[0,1]t φ` becomes `_w0 . (true until (CTIME - _w0 <= 1 and φ))`;
//! - `CUP` and `CL` become their complement forms; `ALWAYSS`,
//!   `EVENTUALLYS`, `RELEASES` reduce to `UNTILS` and complements.
//!
//! `SA(τ)` is *not* rewritten to `not SE(CMPL τ)`: both atoms are false
//! when a variable in τ has no object at the current frame, so the
//! negation-based duality does not hold and `SA` stays in the core.
//!
//! Fresh clock names are drawn from `_w0, _w1, …`, skipping any name
//! that appears in the input, so the rewrite cannot capture variables.

use super::*;
use std::collections::HashSet;

/// Rewrite a formula into the core fragment. The result is semantically
/// equivalent on every stream (checked by the differential test suites).
pub fn desugar(f: &Formula) -> Formula {
    let mut ctx = Ctx { used: collect_names(f), counter: 0 };
    ctx.formula(f)
}

struct Ctx {
    used: HashSet<String>,
    counter: usize,
}

fn node(kind: FormulaKind) -> Box<Formula> {
    Box::new(Formula::new(kind))
}

fn tnode(kind: SpatialTermKind) -> Box<SpatialTerm> {
    Box::new(SpatialTerm::new(kind))
}

impl Ctx {
    fn fresh(&mut self) -> String {
        loop {
            let name = format!("_w{}", self.counter);
            self.counter += 1;
            if self.used.insert(name.clone()) {
                return name;
            }
        }
    }

    /// The `a ≤ clock - var ≤ b` guard for an interval, if any bound is
    /// non-trivial.
    fn window_guard(&self, interval: &IntervalSpec, var: &str) -> Option<Formula> {
        let mut parts: Vec<Formula> = Vec::new();
        let lower_trivial = interval.lo == 0.0 && interval.lo_closed;
        if !lower_trivial {
            let cmp = if interval.lo_closed { Cmp::Ge } else { Cmp::Gt };
            parts.push(Formula::new(match interval.unit {
                IntervalUnit::Time => FormulaKind::TimeConstraint {
                    var: var.to_string(),
                    cmp,
                    bound: interval.lo,
                },
                IntervalUnit::Frame => FormulaKind::FrameConstraint {
                    var: var.to_string(),
                    cmp,
                    bound: interval.lo as i64,
                },
            }));
        }
        if interval.hi.is_finite() {
            let cmp = if interval.hi_closed { Cmp::Le } else { Cmp::Lt };
            parts.push(Formula::new(match interval.unit {
                IntervalUnit::Time => FormulaKind::TimeConstraint {
                    var: var.to_string(),
                    cmp,
                    bound: interval.hi,
                },
                IntervalUnit::Frame => FormulaKind::FrameConstraint {
                    var: var.to_string(),
                    cmp,
                    bound: interval.hi as i64,
                },
            }));
        }
        let mut iter = parts.into_iter();
        let first = iter.next()?;
        Some(iter.fold(first, |acc, p| {
            Formula::new(FormulaKind::And(Box::new(acc), Box::new(p)))
        }))
    }

    /// `lhs until rhs` with the window guard conjoined onto `rhs`,
    /// wrapped in a fresh freeze binder when a guard is needed.
    fn windowed_until(
        &mut self,
        interval: &Option<IntervalSpec>,
        lhs: Formula,
        rhs: Formula,
    ) -> Formula {
        match interval {
            None => Formula::new(FormulaKind::Until {
                interval: None,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            }),
            Some(iv) => {
                let var = self.fresh();
                match self.window_guard(iv, &var) {
                    None => Formula::new(FormulaKind::Until {
                        interval: None,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    }),
                    Some(guard) => Formula::new(FormulaKind::Freeze {
                        var,
                        body: node(FormulaKind::Until {
                            interval: None,
                            lhs: Box::new(lhs),
                            rhs: node(FormulaKind::And(Box::new(guard), Box::new(rhs))),
                        }),
                    }),
                }
            }
        }
    }

    fn formula(&mut self, f: &Formula) -> Formula {
        let not = |p: Formula| Formula::new(FormulaKind::Not(Box::new(p)));
        match &f.kind {
            FormulaKind::True => Formula::new(FormulaKind::True),
            FormulaKind::Not(p) => not(self.formula(p)),
            FormulaKind::And(a, b) => Formula::new(FormulaKind::And(
                Box::new(self.formula(a)),
                Box::new(self.formula(b)),
            )),
            FormulaKind::Or(a, b) => Formula::new(FormulaKind::Or(
                Box::new(self.formula(a)),
                Box::new(self.formula(b)),
            )),
            FormulaKind::Implies(a, b) => Formula::new(FormulaKind::Or(
                Box::new(not(self.formula(a))),
                Box::new(self.formula(b)),
            )),
            FormulaKind::Next(p) => {
                Formula::new(FormulaKind::Next(Box::new(self.formula(p))))
            }
            FormulaKind::WeakNext(p) => {
                not(Formula::new(FormulaKind::Next(Box::new(not(self.formula(p))))))
            }
            FormulaKind::Previous(p) => {
                Formula::new(FormulaKind::Previous(Box::new(self.formula(p))))
            }
            FormulaKind::WeakPrevious(p) => {
                not(Formula::new(FormulaKind::Previous(Box::new(not(self.formula(p))))))
            }
            FormulaKind::Until { interval, lhs, rhs } => {
                let l = self.formula(lhs);
                let r = self.formula(rhs);
                self.windowed_until(interval, l, r)
            }
            FormulaKind::Eventually { interval, body } => {
                let b = self.formula(body);
                self.windowed_until(interval, Formula::new(FormulaKind::True), b)
            }
            FormulaKind::Always { interval, body } => {
                let b = self.formula(body);
                not(self.windowed_until(interval, Formula::new(FormulaKind::True), not(b)))
            }
            FormulaKind::Release { interval, lhs, rhs } => {
                let l = not(self.formula(lhs));
                let r = not(self.formula(rhs));
                not(self.windowed_until(interval, l, r))
            }
            FormulaKind::Since { lhs, rhs } => Formula::new(FormulaKind::Since {
                lhs: Box::new(self.formula(lhs)),
                rhs: Box::new(self.formula(rhs)),
            }),
            FormulaKind::Exists { id, freeze, body } => Formula::new(FormulaKind::Exists {
                id: id.clone(),
                freeze: freeze.clone(),
                body: Box::new(self.formula(body)),
            }),
            FormulaKind::Forall { id, freeze, body } => not(Formula::new(FormulaKind::Exists {
                id: id.clone(),
                freeze: freeze.clone(),
                body: Box::new(not(self.formula(body))),
            })),
            FormulaKind::Freeze { var, body } => Formula::new(FormulaKind::Freeze {
                var: var.clone(),
                body: Box::new(self.formula(body)),
            }),
            FormulaKind::TimeConstraint { .. }
            | FormulaKind::FrameConstraint { .. }
            | FormulaKind::ModuloConstraint { .. }
            | FormulaKind::IdEquality { .. } => Formula::new(f.kind.clone()),
            FormulaKind::SpatialExists(t) => {
                Formula::new(FormulaKind::SpatialExists(self.term(t)))
            }
            // `SA(τ)` stays primitive: the textbook dual `not SE(CMPL τ)`
            // is wrong here because both atoms are false when a variable
            // in τ has no object at the current frame, so negating one
            // cannot produce the other.
            FormulaKind::SpatialForall(t) => {
                Formula::new(FormulaKind::SpatialForall(self.term(t)))
            }
            FormulaKind::FunctionAtom(a) => {
                let lhs = self.fn_expr(&a.lhs);
                let rhs = match &a.rhs {
                    FnRhs::Expr { scale, expr } => {
                        FnRhs::Expr { scale: *scale, expr: self.fn_expr(expr) }
                    }
                    other => other.clone(),
                };
                Formula::new(FormulaKind::FunctionAtom(FnAtom { lhs, cmp: a.cmp, rhs }))
            }
        }
    }

    fn term(&mut self, t: &SpatialTerm) -> SpatialTerm {
        let cmpl = |x: SpatialTerm| SpatialTerm::new(SpatialTermKind::Complement(Box::new(x)));
        match &t.kind {
            SpatialTermKind::BBoxOf(_)
            | SpatialTermKind::EmptySet
            | SpatialTermKind::Universe => SpatialTerm::new(t.kind.clone()),
            SpatialTermKind::Complement(a) => cmpl(self.term(a)),
            SpatialTermKind::Intersect(a, b) => SpatialTerm::new(SpatialTermKind::Intersect(
                Box::new(self.term(a)),
                Box::new(self.term(b)),
            )),
            // a CUP b = CMPL (CMPL a CAP CMPL b)
            SpatialTermKind::Union(a, b) => cmpl(SpatialTerm::new(SpatialTermKind::Intersect(
                Box::new(cmpl(self.term(a))),
                Box::new(cmpl(self.term(b))),
            ))),
            SpatialTermKind::Interior(a) => {
                SpatialTerm::new(SpatialTermKind::Interior(Box::new(self.term(a))))
            }
            // CL τ = CMPL INT CMPL τ
            SpatialTermKind::Closure(a) => cmpl(SpatialTerm::new(SpatialTermKind::Interior(
                Box::new(cmpl(self.term(a))),
            ))),
            SpatialTermKind::SpatialNext { interval, body } => {
                SpatialTerm::new(SpatialTermKind::SpatialNext {
                    interval: *interval,
                    body: Box::new(self.term(body)),
                })
            }
            SpatialTermKind::SpatialUntil { interval, lhs, rhs } => {
                SpatialTerm::new(SpatialTermKind::SpatialUntil {
                    interval: *interval,
                    lhs: Box::new(self.term(lhs)),
                    rhs: Box::new(self.term(rhs)),
                })
            }
            // EVENTUALLYS_I τ = UNIVERSE UNTILS_I τ
            SpatialTermKind::SpatialEventually { interval, body } => {
                SpatialTerm::new(SpatialTermKind::SpatialUntil {
                    interval: *interval,
                    lhs: tnode(SpatialTermKind::Universe),
                    rhs: Box::new(self.term(body)),
                })
            }
            // ALWAYSS_I τ = CMPL (UNIVERSE UNTILS_I CMPL τ)
            SpatialTermKind::SpatialAlways { interval, body } => {
                let inner = cmpl(self.term(body));
                cmpl(SpatialTerm::new(SpatialTermKind::SpatialUntil {
                    interval: *interval,
                    lhs: tnode(SpatialTermKind::Universe),
                    rhs: Box::new(inner),
                }))
            }
            // a RELEASES_I b = CMPL (CMPL a UNTILS_I CMPL b)
            SpatialTermKind::SpatialRelease { interval, lhs, rhs } => {
                let l = cmpl(self.term(lhs));
                let r = cmpl(self.term(rhs));
                cmpl(SpatialTerm::new(SpatialTermKind::SpatialUntil {
                    interval: *interval,
                    lhs: Box::new(l),
                    rhs: Box::new(r),
                }))
            }
        }
    }

    fn fn_expr(&mut self, e: &FnExpr) -> FnExpr {
        match e {
            FnExpr::AreaTerm(t) => FnExpr::AreaTerm(Box::new(self.term(t))),
            FnExpr::Ratio(a, b) => {
                FnExpr::Ratio(Box::new(self.fn_expr(a)), Box::new(self.fn_expr(b)))
            }
            other => other.clone(),
        }
    }
}

fn collect_names(f: &Formula) -> HashSet<String> {
    let mut out = HashSet::new();
    walk_names(f, &mut out);
    out
}

fn walk_names(f: &Formula, out: &mut HashSet<String>) {
    match &f.kind {
        FormulaKind::True => {}
        FormulaKind::Not(p)
        | FormulaKind::Next(p)
        | FormulaKind::WeakNext(p)
        | FormulaKind::Previous(p)
        | FormulaKind::WeakPrevious(p)
        | FormulaKind::Always { body: p, .. }
        | FormulaKind::Eventually { body: p, .. } => walk_names(p, out),
        FormulaKind::And(a, b)
        | FormulaKind::Or(a, b)
        | FormulaKind::Implies(a, b)
        | FormulaKind::Until { lhs: a, rhs: b, .. }
        | FormulaKind::Release { lhs: a, rhs: b, .. }
        | FormulaKind::Since { lhs: a, rhs: b } => {
            walk_names(a, out);
            walk_names(b, out);
        }
        FormulaKind::Exists { id, freeze, body } | FormulaKind::Forall { id, freeze, body } => {
            out.insert(id.clone());
            if let Some(x) = freeze {
                out.insert(x.clone());
            }
            walk_names(body, out);
        }
        FormulaKind::Freeze { var, body } => {
            out.insert(var.clone());
            walk_names(body, out);
        }
        FormulaKind::TimeConstraint { var, .. }
        | FormulaKind::FrameConstraint { var, .. }
        | FormulaKind::ModuloConstraint { var, .. } => {
            out.insert(var.clone());
        }
        FormulaKind::IdEquality { lhs, rhs, .. } => {
            out.insert(lhs.clone());
            out.insert(rhs.clone());
        }
        FormulaKind::SpatialExists(_) | FormulaKind::SpatialForall(_) => {}
        FormulaKind::FunctionAtom(_) => {}
    }
}
