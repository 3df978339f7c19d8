//! Almost-arbitrarily-nesting (AAN) validation.
//!
//! The dynamic-programming monitor evaluates each freeze scope as a
//! self-contained cluster, which requires that no variable bound outside
//! a freeze-style binder is mentioned inside it. A *variant* binder is
//! one that records the current frame: a bare freeze `x . φ` or a
//! quantifier with an `@` clause (`exists id1 @ x1 . φ`). Plain
//! quantifiers (`exists id1 . φ`) resolve their objects in the current
//! frame and do not open a new cluster, so outer variables may cross
//! them freely.
//!
//! A formula violates the restriction exactly when some variable is
//! bound at one point and used after entering a *different* variant
//! binder. For example,
//! `x1 . always x2 . eventually (CFRAME - x1 > 2 and CFRAME - x2 == 1)`
//! is rejected because `x1` is used inside the scope of the variant
//! binder `x2 . …`. By contrast,
//! `exists id1 @ x1 . always exists id2 . (id1 != id2 and …)` is
//! accepted: the inner quantifier is plain.

use super::{Formula, FormulaKind, FnExpr, FnRhs, DistArg, Span, SpatialTerm, SpatialTermKind};
use std::collections::HashMap;
use std::fmt;

/// One use of a variable across a variant binder, reported with the
/// binder that introduced the variable and the variant binder it crosses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AanViolation {
    /// The variable whose use crosses a variant binder.
    pub variable: String,
    /// Source span of the binder that bound `variable`.
    pub bound_at: Span,
    /// Source span of the variant binder whose scope encloses the use.
    pub crossed_binder: Span,
    /// Source span of the offending use.
    pub used_at: Span,
}

impl fmt::Display for AanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "variable `{}` (bound at bytes {}..{}) is used at bytes {}..{} inside the \
             freeze scope opened at bytes {}..{}",
            self.variable,
            self.bound_at.start,
            self.bound_at.end,
            self.used_at.start,
            self.used_at.end,
            self.crossed_binder.start,
            self.crossed_binder.end,
        )
    }
}

struct Walker {
    /// Binding depth and binder span per variable currently in scope.
    bound: HashMap<String, (usize, Span)>,
    /// Stack of open variant binders as (depth-at-entry, span).
    variant_stack: Vec<(usize, Span)>,
    depth: usize,
    violations: Vec<AanViolation>,
}

impl Walker {
    fn use_var(&mut self, name: &str, used_at: Span) {
        let Some(&(bound_depth, bound_at)) = self.bound.get(name) else {
            // Unbound names are a scoping error caught by the parser;
            // nothing to report here.
            return;
        };
        // The use crosses a variant binder when some open variant binder
        // was entered strictly after the variable was bound; a variable's
        // own binder (same depth) is not a crossing.
        if let Some(&(_, crossed_binder)) = self
            .variant_stack
            .iter()
            .find(|(entry_depth, _)| *entry_depth > bound_depth)
        {
            self.violations.push(AanViolation {
                variable: name.to_string(),
                bound_at,
                crossed_binder,
                used_at,
            });
        }
    }

    fn with_binding<F: FnOnce(&mut Self)>(
        &mut self,
        names: &[&String],
        span: Span,
        variant: bool,
        inner: F,
    ) {
        let saved: Vec<(String, Option<(usize, Span)>)> = names
            .iter()
            .map(|n| ((*n).clone(), self.bound.get(*n).copied()))
            .collect();
        self.depth += 1;
        if variant {
            self.variant_stack.push((self.depth, span));
        }
        for n in names {
            self.bound.insert((*n).clone(), (self.depth, span));
        }
        inner(self);
        if variant {
            self.variant_stack.pop();
        }
        self.depth -= 1;
        for (name, prev) in saved {
            match prev {
                Some(v) => {
                    self.bound.insert(name, v);
                }
                None => {
                    self.bound.remove(&name);
                }
            }
        }
    }

    fn walk(&mut self, f: &Formula) {
        match &f.kind {
            FormulaKind::True => {}
            FormulaKind::Not(p)
            | FormulaKind::Next(p)
            | FormulaKind::WeakNext(p)
            | FormulaKind::Previous(p)
            | FormulaKind::WeakPrevious(p)
            | FormulaKind::Always { body: p, .. }
            | FormulaKind::Eventually { body: p, .. } => self.walk(p),
            FormulaKind::And(a, b)
            | FormulaKind::Or(a, b)
            | FormulaKind::Implies(a, b)
            | FormulaKind::Until { lhs: a, rhs: b, .. }
            | FormulaKind::Release { lhs: a, rhs: b, .. }
            | FormulaKind::Since { lhs: a, rhs: b } => {
                self.walk(a);
                self.walk(b);
            }
            FormulaKind::Exists { id, freeze, body }
            | FormulaKind::Forall { id, freeze, body } => {
                let mut names: Vec<&String> = vec![id];
                if let Some(x) = freeze {
                    names.push(x);
                }
                self.with_binding(&names, f.span, freeze.is_some(), |w| w.walk(body));
            }
            FormulaKind::Freeze { var, body } => {
                self.with_binding(&[var], f.span, true, |w| w.walk(body));
            }
            FormulaKind::TimeConstraint { var, .. }
            | FormulaKind::FrameConstraint { var, .. }
            | FormulaKind::ModuloConstraint { var, .. } => self.use_var(var, f.span),
            FormulaKind::IdEquality { lhs, rhs, .. } => {
                self.use_var(lhs, f.span);
                self.use_var(rhs, f.span);
            }
            FormulaKind::SpatialExists(t) | FormulaKind::SpatialForall(t) => {
                self.walk_term(t, f.span)
            }
            FormulaKind::FunctionAtom(a) => {
                self.walk_fn_expr(&a.lhs, f.span);
                if let FnRhs::Expr { expr, .. } = &a.rhs {
                    self.walk_fn_expr(expr, f.span);
                }
            }
        }
    }

    fn walk_term(&mut self, t: &SpatialTerm, outer: Span) {
        let span = if t.span == Span::default() { outer } else { t.span };
        match &t.kind {
            SpatialTermKind::BBoxOf(v) => self.use_var(v, span),
            SpatialTermKind::EmptySet | SpatialTermKind::Universe => {}
            SpatialTermKind::Complement(a)
            | SpatialTermKind::Interior(a)
            | SpatialTermKind::Closure(a)
            | SpatialTermKind::SpatialNext { body: a, .. }
            | SpatialTermKind::SpatialAlways { body: a, .. }
            | SpatialTermKind::SpatialEventually { body: a, .. } => self.walk_term(a, span),
            SpatialTermKind::Intersect(a, b)
            | SpatialTermKind::Union(a, b)
            | SpatialTermKind::SpatialUntil { lhs: a, rhs: b, .. }
            | SpatialTermKind::SpatialRelease { lhs: a, rhs: b, .. } => {
                self.walk_term(a, span);
                self.walk_term(b, span);
            }
        }
    }

    fn walk_fn_expr(&mut self, e: &FnExpr, span: Span) {
        match e {
            FnExpr::Class(v)
            | FnExpr::Prob(v)
            | FnExpr::Lat(v, _)
            | FnExpr::Lon(v, _)
            | FnExpr::AreaId(v)
            | FnExpr::Empty(v)
            | FnExpr::Md(v) => self.use_var(v, span),
            FnExpr::Dist(a, _, b, _) => {
                if let DistArg::Id(v) = a {
                    self.use_var(v, span);
                }
                if let DistArg::Id(v) = b {
                    self.use_var(v, span);
                }
            }
            FnExpr::Visible(vp, _, a, b) => {
                if let DistArg::Id(v) = vp {
                    self.use_var(v, span);
                }
                self.use_var(a, span);
                self.use_var(b, span);
            }
            FnExpr::AreaTerm(t) => self.walk_term(t, span),
            FnExpr::Ratio(a, b) => {
                self.walk_fn_expr(a, span);
                self.walk_fn_expr(b, span);
            }
        }
    }
}

/// Check the nesting restriction; an empty list means the formula is
/// accepted by the dynamic-programming monitor.
pub fn validate_aan(f: &Formula) -> Vec<AanViolation> {
    let mut w = Walker {
        bound: HashMap::new(),
        variant_stack: Vec::new(),
        depth: 0,
        violations: Vec::new(),
    };
    w.walk(f);
    w.violations
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn violations(src: &str) -> Vec<AanViolation> {
        validate_aan(&parse(src).unwrap())
    }

    #[test]
    fn single_freeze_scope_is_accepted() {
        assert!(violations("x1 . eventually (CTIME - x1 <= 1 and CFRAME - x1 >= 1)").is_empty());
    }

    #[test]
    fn outer_var_crossing_plain_quantifier_is_accepted() {
        let src = "exists id1 @ x1 . always exists id2 . \
                   (id1 != id2 and CLASS(id1) == CLASS(id2) and CTIME - x1 <= 1)";
        assert!(violations(src).is_empty());
    }

    #[test]
    fn nested_freeze_using_outer_time_var_is_rejected() {
        let src = "x1 . always x2 . eventually \
                   (CFRAME - x1 > 2 and (CFRAME - x2) % 2 == 0)";
        let v = violations(src);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].variable, "x1");
    }

    #[test]
    fn nested_variant_quantifier_using_outer_id_is_rejected() {
        let src = "exists id1 @ x1 . eventually forall id2 @ x2 . \
                   (id1 == id2 implies PROB(id1) <= PROB(id2))";
        let v = violations(src);
        // `id1` is used twice inside the inner variant scope.
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| x.variable == "id1"));
    }

    #[test]
    fn inner_variant_vars_used_within_their_own_scope_are_fine() {
        let src = "x1 . always x2 . eventually (CFRAME - x2) % 2 == 0";
        assert!(violations(src).is_empty());
    }

    #[test]
    fn use_before_any_variant_binder_is_fine() {
        let src = "exists id1 @ x1 . (PROB(id1) > 0.5 and x2 . CFRAME - x2 >= 0)";
        assert!(violations(src).is_empty());
    }

    #[test]
    fn spatial_and_function_uses_are_checked() {
        let src = "exists id1 @ x1 . eventually x2 . SE(BB(id1))";
        let v = violations(src);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].variable, "id1");

        let src = "exists id1 @ x1 . eventually x2 . AREA(BB(id1)) > 0";
        let v = violations(src);
        assert_eq!(v.len(), 1);
    }
}
