//! Recursive-descent parser for the formula language.
//!
//! Precedence, loosest to tightest: `implies` (right-associative), `or`,
//! `and`, the binary temporal operators `until`/`release`/`since`
//! (right-associative), then prefix operators and atoms. Quantifier and
//! freeze bodies extend maximally to the right, so
//! `exists id1 . a and b` binds `id1` over the whole conjunction.
//!
//! Spatial terms use their own precedence: `UNTILS`/`RELEASES` loosest
//! (right-associative), then `CUP`, then `CAP`, then prefix operators.
//!
//! After building the tree the parser checks scoping: every variable use
//! must be under a binder of the right sort (object-id position vs clock
//! position), and rebinding a name already in scope is rejected.

use super::lexer::{lex, Tok, Token};
use super::*;
use thiserror::Error;

/// Parse failure with 1-based source position and the token set that
/// would have been accepted.
#[derive(Clone, Debug, Error)]
#[error("parse error at {line}:{col}: {message}{}", format_expected(.expected))]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
    pub expected: Vec<String>,
}

fn format_expected(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(", "))
    }
}

/// Parse source text into a well-scoped formula.
pub fn parse(src: &str) -> Result<Formula, ParseError> {
    let tokens = lex(src).map_err(|e| {
        let (line, col) = line_col(src, e.span.start);
        ParseError { message: e.message, line, col, expected: Vec::new() }
    })?;
    let mut p = Parser { src, tokens, pos: 0 };
    let f = p.parse_implies()?;
    if p.pos < p.tokens.len() {
        return Err(p.err_here("unexpected input after end of formula", &[]));
    }
    check_scopes(src, &f)?;
    Ok(f)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let clamped = offset.min(src.len());
    let mut line = 1;
    let mut col = 1;
    for b in src.as_bytes()[..clamped].iter() {
        if *b == b'\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

const ATOM_STARTS: &[&str] = &[
    "`true`", "`false`", "`not`", "`(`", "a temporal operator", "`exists`", "`forall`",
    "a freeze variable", "`SE`", "`SA`", "`CTIME`", "`CFRAME`", "a function keyword",
    "an id variable",
];

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.tokens.get(self.pos + ahead).map(|t| &t.tok)
    }

    fn cur_span(&self) -> Span {
        self.tokens
            .get(self.pos)
            .map(|t| t.span)
            .unwrap_or_else(|| Span::new(self.src.len(), self.src.len()))
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: &str, expected: &[&str]) -> ParseError {
        let span = self.cur_span();
        let (line, col) = line_col(self.src, span.start);
        let found = match self.peek() {
            Some(t) => format!("{message}; found {t}"),
            None => format!("{message}; found end of input"),
        };
        ParseError {
            message: found,
            line,
            col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, want: &Tok, expected: &str) -> Result<Span, ParseError> {
        match self.peek() {
            Some(t) if t == want => Ok(self.bump().unwrap().span),
            _ => Err(self.err_here(&format!("expected {expected}"), &[expected])),
        }
    }

    fn expect_ident(&mut self, role: &str) -> Result<(String, Span), ParseError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump().unwrap();
                if let Tok::Ident(name) = t.tok {
                    Ok((name, t.span))
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err_here(&format!("expected {role}"), &[role])),
        }
    }

    fn expect_number(&mut self) -> Result<(f64, Span), ParseError> {
        match self.peek() {
            Some(Tok::Number(_)) => {
                let t = self.bump().unwrap();
                if let Tok::Number(n) = t.tok {
                    Ok((n, t.span))
                } else {
                    unreachable!()
                }
            }
            _ => Err(self.err_here("expected a number", &["a number"])),
        }
    }

    fn signed_number(&mut self) -> Result<(f64, Span), ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            let minus = self.bump().unwrap().span;
            let (n, sp) = self.expect_number()?;
            Ok((-n, minus.join(sp)))
        } else {
            self.expect_number()
        }
    }

    fn signed_integer(&mut self) -> Result<(i64, Span), ParseError> {
        let start_pos = self.pos;
        let (n, sp) = self.signed_number()?;
        if n.fract() != 0.0 {
            self.pos = start_pos;
            return Err(self.err_here("expected an integer", &["an integer"]));
        }
        Ok((n as i64, sp))
    }

    fn cmp(&mut self) -> Result<Cmp, ParseError> {
        let c = match self.peek() {
            Some(Tok::Lt) => Cmp::Lt,
            Some(Tok::Le) => Cmp::Le,
            Some(Tok::EqEq) => Cmp::Eq,
            Some(Tok::Ne) => Cmp::Ne,
            Some(Tok::Ge) => Cmp::Ge,
            Some(Tok::Gt) => Cmp::Gt,
            _ => {
                return Err(self.err_here(
                    "expected a comparison operator",
                    &["<", "<=", "==", "!=", ">=", ">"],
                ))
            }
        };
        self.bump();
        Ok(c)
    }

    // ----- formula levels -----

    fn parse_implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_or()?;
        if self.peek() == Some(&Tok::Implies) {
            self.bump();
            let rhs = self.parse_implies()?;
            let span = lhs.span.join(rhs.span);
            return Ok(Formula {
                kind: FormulaKind::Implies(Box::new(lhs), Box::new(rhs)),
                span,
            });
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            let rhs = self.parse_and()?;
            let span = lhs.span.join(rhs.span);
            lhs = Formula { kind: FormulaKind::Or(Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_binary_temporal()?;
        while self.peek() == Some(&Tok::And) {
            self.bump();
            let rhs = self.parse_binary_temporal()?;
            let span = lhs.span.join(rhs.span);
            lhs = Formula { kind: FormulaKind::And(Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn parse_binary_temporal(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_unary()?;
        let kind = match self.peek() {
            Some(Tok::Until) => 0,
            Some(Tok::Release) => 1,
            Some(Tok::Since) => 2,
            _ => return Ok(lhs),
        };
        self.bump();
        let interval = if kind != 2 { self.maybe_interval()? } else { None };
        let rhs = self.parse_binary_temporal()?;
        let span = lhs.span.join(rhs.span);
        let k = match kind {
            0 => FormulaKind::Until { interval, lhs: Box::new(lhs), rhs: Box::new(rhs) },
            1 => FormulaKind::Release { interval, lhs: Box::new(lhs), rhs: Box::new(rhs) },
            _ => FormulaKind::Since { lhs: Box::new(lhs), rhs: Box::new(rhs) },
        };
        Ok(Formula { kind: k, span })
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        let start = self.cur_span();
        macro_rules! prefix {
            ($ctor:path) => {{
                self.bump();
                let body = self.parse_unary()?;
                let span = start.join(body.span);
                Ok(Formula { kind: $ctor(Box::new(body)), span })
            }};
        }
        match self.peek() {
            Some(Tok::Not) => prefix!(FormulaKind::Not),
            Some(Tok::Next) => prefix!(FormulaKind::Next),
            Some(Tok::WNext) => prefix!(FormulaKind::WeakNext),
            Some(Tok::Prev) => prefix!(FormulaKind::Previous),
            Some(Tok::WPrev) => prefix!(FormulaKind::WeakPrevious),
            Some(Tok::Always) => {
                self.bump();
                let interval = self.maybe_interval()?;
                let body = self.parse_unary()?;
                let span = start.join(body.span);
                Ok(Formula {
                    kind: FormulaKind::Always { interval, body: Box::new(body) },
                    span,
                })
            }
            Some(Tok::Eventually) => {
                self.bump();
                let interval = self.maybe_interval()?;
                let body = self.parse_unary()?;
                let span = start.join(body.span);
                Ok(Formula {
                    kind: FormulaKind::Eventually { interval, body: Box::new(body) },
                    span,
                })
            }
            Some(Tok::Exists) | Some(Tok::Forall) => {
                let universal = self.peek() == Some(&Tok::Forall);
                self.bump();
                let (id, _) = self.expect_ident("an id variable")?;
                let freeze = if self.peek() == Some(&Tok::At) {
                    self.bump();
                    let (x, _) = self.expect_ident("a freeze time variable")?;
                    Some(x)
                } else {
                    None
                };
                self.expect(&Tok::Dot, "`.`")?;
                let body = self.parse_implies()?;
                let span = start.join(body.span);
                let kind = if universal {
                    FormulaKind::Forall { id, freeze, body: Box::new(body) }
                } else {
                    FormulaKind::Exists { id, freeze, body: Box::new(body) }
                };
                Ok(Formula { kind, span })
            }
            // Bare freeze: `x . φ`. Requires two-token lookahead to
            // distinguish from id-equality atoms (`id1 == id2`).
            Some(Tok::Ident(_)) if self.peek_at(1) == Some(&Tok::Dot) => {
                let (var, _) = self.expect_ident("a freeze time variable")?;
                self.expect(&Tok::Dot, "`.`")?;
                let body = self.parse_implies()?;
                let span = start.join(body.span);
                Ok(Formula { kind: FormulaKind::Freeze { var, body: Box::new(body) }, span })
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> Result<Formula, ParseError> {
        let start = self.cur_span();
        match self.peek() {
            Some(Tok::True) => {
                self.bump();
                Ok(Formula { kind: FormulaKind::True, span: start })
            }
            Some(Tok::False) => {
                // `false` is sugar for `not true`.
                self.bump();
                Ok(Formula {
                    kind: FormulaKind::Not(Box::new(Formula {
                        kind: FormulaKind::True,
                        span: start,
                    })),
                    span: start,
                })
            }
            Some(Tok::CTime) => {
                self.bump();
                self.expect(&Tok::Minus, "`-`")?;
                let (var, _) = self.expect_ident("a freeze time variable")?;
                let cmp = self.cmp()?;
                let (bound, end) = self.signed_number()?;
                Ok(Formula {
                    kind: FormulaKind::TimeConstraint { var, cmp, bound },
                    span: start.join(end),
                })
            }
            Some(Tok::CFrame) => {
                self.bump();
                self.expect(&Tok::Minus, "`-`")?;
                let (var, _) = self.expect_ident("a freeze time variable")?;
                let cmp = self.cmp()?;
                let (bound, end) = self.signed_integer()?;
                Ok(Formula {
                    kind: FormulaKind::FrameConstraint { var, cmp, bound },
                    span: start.join(end),
                })
            }
            Some(Tok::LParen) => {
                // `(CFRAME - x) % m cmp r` shares its opening token with a
                // parenthesized formula; try the modulo shape first and
                // backtrack on mismatch.
                let rewind = self.pos;
                if let Some(res) = self.try_modulo_constraint(start) {
                    return res;
                }
                self.pos = rewind;
                self.bump();
                let f = self.parse_implies()?;
                let end = self.expect(&Tok::RParen, "`)`")?;
                Ok(Formula { kind: f.kind, span: start.join(end) })
            }
            Some(Tok::Ident(_)) => {
                let (lhs, _) = self.expect_ident("an id variable")?;
                let negated = match self.peek() {
                    Some(Tok::EqEq) => false,
                    Some(Tok::Ne) => true,
                    _ => {
                        return Err(self.err_here(
                            "expected `==`, `!=`, or `.` after identifier",
                            &["==", "!=", "."],
                        ))
                    }
                };
                self.bump();
                let (rhs, end) = self.expect_ident("an id variable")?;
                Ok(Formula {
                    kind: FormulaKind::IdEquality { lhs, rhs, negated },
                    span: start.join(end),
                })
            }
            Some(Tok::Se) | Some(Tok::Sa) => {
                let universal = self.peek() == Some(&Tok::Sa);
                self.bump();
                self.expect(&Tok::LParen, "`(`")?;
                let term = self.parse_term()?;
                let end = self.expect(&Tok::RParen, "`)`")?;
                let kind = if universal {
                    FormulaKind::SpatialForall(term)
                } else {
                    FormulaKind::SpatialExists(term)
                };
                Ok(Formula { kind, span: start.join(end) })
            }
            Some(
                Tok::Class
                | Tok::Prob
                | Tok::Lat
                | Tok::Lon
                | Tok::Dist
                | Tok::Area
                | Tok::Ratio
                | Tok::EmptyFn
                | Tok::Visible
                | Tok::Md,
            ) => self.parse_function_atom(start),
            _ => Err(self.err_here("expected a formula", ATOM_STARTS)),
        }
    }

    fn try_modulo_constraint(
        &mut self,
        start: Span,
    ) -> Option<Result<Formula, ParseError>> {
        self.bump(); // `(`
        if self.peek() != Some(&Tok::CFrame) {
            return None;
        }
        self.bump();
        if self.peek() != Some(&Tok::Minus) {
            return None;
        }
        self.bump();
        let var = match self.peek() {
            Some(Tok::Ident(_)) => {
                if let Tok::Ident(v) = self.bump().unwrap().tok {
                    v
                } else {
                    unreachable!()
                }
            }
            _ => return None,
        };
        if self.peek() != Some(&Tok::RParen) {
            return None;
        }
        self.bump();
        if self.peek() != Some(&Tok::Percent) {
            return None;
        }
        self.bump();
        // Committed to the modulo shape now; further mismatches are errors.
        Some((|| {
            let (modulus, msp) = self.signed_integer()?;
            if modulus <= 0 {
                let (line, col) = line_col(self.src, msp.start);
                return Err(ParseError {
                    message: "modulus must be a positive integer".into(),
                    line,
                    col,
                    expected: Vec::new(),
                });
            }
            let cmp = self.cmp()?;
            let (bound, end) = self.signed_integer()?;
            Ok(Formula {
                kind: FormulaKind::ModuloConstraint { var, modulus, cmp, bound },
                span: start.join(end),
            })
        })())
    }

    // ----- function atoms -----

    fn parse_function_atom(&mut self, start: Span) -> Result<Formula, ParseError> {
        let lhs = self.parse_fn_expr()?;
        match &lhs {
            // Boolean-valued predicates stand alone.
            FnExpr::Empty(_) | FnExpr::Visible(..) => {
                let span = start.join(self.prev_span());
                return Ok(Formula {
                    kind: FormulaKind::FunctionAtom(FnAtom {
                        lhs,
                        cmp: Cmp::Eq,
                        rhs: FnRhs::Bool(true),
                    }),
                    span,
                });
            }
            _ => {}
        }
        let cmp = self.cmp()?;
        let rhs = self.parse_fn_rhs(&lhs, cmp)?;
        let span = start.join(self.prev_span());
        Ok(Formula { kind: FormulaKind::FunctionAtom(FnAtom { lhs, cmp, rhs }), span })
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            Span::default()
        } else {
            self.tokens[self.pos - 1].span
        }
    }

    fn parse_fn_expr(&mut self) -> Result<FnExpr, ParseError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.err_here("expected a function keyword", &["a function"])),
        };
        self.bump();
        self.expect(&Tok::LParen, "`(`")?;
        let expr = match tok {
            Tok::Class => FnExpr::Class(self.expect_ident("an id variable")?.0),
            Tok::Prob => FnExpr::Prob(self.expect_ident("an id variable")?.0),
            Tok::Lat => {
                let id = self.expect_ident("an id variable")?.0;
                self.expect(&Tok::Comma, "`,`")?;
                let crt = self.parse_crt()?;
                FnExpr::Lat(id, crt)
            }
            Tok::Lon => {
                let id = self.expect_ident("an id variable")?.0;
                self.expect(&Tok::Comma, "`,`")?;
                let crt = self.parse_crt()?;
                FnExpr::Lon(id, crt)
            }
            Tok::Dist => {
                let a = self.parse_dist_arg()?;
                self.expect(&Tok::Comma, "`,`")?;
                let ca = self.parse_crt()?;
                self.expect(&Tok::Comma, "`,`")?;
                let b = self.parse_dist_arg()?;
                self.expect(&Tok::Comma, "`,`")?;
                let cb = self.parse_crt()?;
                FnExpr::Dist(a, ca, b, cb)
            }
            Tok::Area => {
                // `AREA(id1)` measures one object's box; any other
                // argument is a full spatial term.
                if matches!(self.peek(), Some(Tok::Ident(_)))
                    && self.peek_at(1) == Some(&Tok::RParen)
                {
                    FnExpr::AreaId(self.expect_ident("an id variable")?.0)
                } else {
                    FnExpr::AreaTerm(Box::new(self.parse_term()?))
                }
            }
            Tok::Ratio => {
                let a = self.parse_fn_expr()?;
                self.expect(&Tok::Comma, "`,`")?;
                let b = self.parse_fn_expr()?;
                FnExpr::Ratio(Box::new(a), Box::new(b))
            }
            Tok::EmptyFn => FnExpr::Empty(self.expect_ident("an id variable")?.0),
            Tok::Visible => {
                let vp = self.parse_dist_arg()?;
                self.expect(&Tok::Comma, "`,`")?;
                let crt = self.parse_crt()?;
                self.expect(&Tok::Comma, "`,`")?;
                let a = self.expect_ident("an id variable")?.0;
                self.expect(&Tok::Comma, "`,`")?;
                let b = self.expect_ident("an id variable")?.0;
                FnExpr::Visible(vp, crt, a, b)
            }
            Tok::Md => FnExpr::Md(self.expect_ident("an id variable")?.0),
            other => {
                return Err(self.err_here(
                    &format!("{other} is not a function keyword"),
                    &["CLASS", "PROB", "LAT", "LON", "DIST", "AREA", "RATIO", "EMPTY",
                      "VISIBLE", "MD"],
                ))
            }
        };
        self.expect(&Tok::RParen, "`)`")?;
        Ok(expr)
    }

    fn parse_dist_arg(&mut self) -> Result<DistArg, ParseError> {
        match self.peek() {
            Some(Tok::UniverseKw) | Some(Tok::Ego) => {
                self.bump();
                Ok(DistArg::Universe)
            }
            Some(Tok::Ident(_)) => Ok(DistArg::Id(self.expect_ident("an id variable")?.0)),
            _ => Err(self.err_here(
                "expected an id variable, `UNIVERSE`, or `EGO`",
                &["an id variable", "UNIVERSE", "EGO"],
            )),
        }
    }

    fn parse_crt(&mut self) -> Result<crate::spatial::Crt, ParseError> {
        match self.peek() {
            Some(Tok::Crt(c)) => {
                let c = *c;
                self.bump();
                Ok(c)
            }
            _ => Err(self.err_here(
                "expected an anchor point",
                &["LM", "RM", "TM", "BM", "CT"],
            )),
        }
    }

    fn parse_fn_rhs(&mut self, lhs: &FnExpr, cmp: Cmp) -> Result<FnRhs, ParseError> {
        let eq_only = matches!(cmp, Cmp::Eq | Cmp::Ne);
        match self.peek() {
            Some(Tok::Str(_)) => {
                if !matches!(lhs, FnExpr::Class(_)) {
                    return Err(self.err_here(
                        "only CLASS can be compared to a string label",
                        &[],
                    ));
                }
                if !eq_only {
                    return Err(self.err_here(
                        "class labels support only `==` and `!=`",
                        &[],
                    ));
                }
                if let Some(Token { tok: Tok::Str(s), .. }) = self.bump() {
                    Ok(FnRhs::ClassLabel(s))
                } else {
                    unreachable!()
                }
            }
            Some(Tok::Number(_)) | Some(Tok::Minus) => {
                let (n, _) = self.signed_number()?;
                if self.peek() == Some(&Tok::Star) {
                    self.bump();
                    let expr = self.parse_fn_expr()?;
                    self.check_rhs_kind(lhs, &expr, eq_only)?;
                    if matches!(expr, FnExpr::Class(_) | FnExpr::Md(_)) && n != 1.0 {
                        return Err(self.err_here(
                            "categorical functions cannot be scaled",
                            &[],
                        ));
                    }
                    Ok(FnRhs::Expr { scale: n, expr })
                } else {
                    if matches!(lhs, FnExpr::Md(_)) && n.fract() != 0.0 {
                        return Err(self.err_here(
                            "MD compares against integers",
                            &["an integer"],
                        ));
                    }
                    Ok(FnRhs::Number(n))
                }
            }
            Some(
                Tok::Class
                | Tok::Prob
                | Tok::Lat
                | Tok::Lon
                | Tok::Dist
                | Tok::Area
                | Tok::Ratio
                | Tok::EmptyFn
                | Tok::Visible
                | Tok::Md,
            ) => {
                let expr = self.parse_fn_expr()?;
                self.check_rhs_kind(lhs, &expr, eq_only)?;
                Ok(FnRhs::Expr { scale: 1.0, expr })
            }
            _ => Err(self.err_here(
                "expected a number, string label, or function expression",
                &["a number", "a string", "a function"],
            )),
        }
    }

    fn check_rhs_kind(
        &self,
        lhs: &FnExpr,
        rhs: &FnExpr,
        eq_only: bool,
    ) -> Result<(), ParseError> {
        let categorical = |e: &FnExpr| {
            matches!(e, FnExpr::Class(_) | FnExpr::Md(_) | FnExpr::Empty(_) | FnExpr::Visible(..))
        };
        match (categorical(lhs), categorical(rhs)) {
            (true, true) => {
                let compatible = matches!(
                    (lhs, rhs),
                    (FnExpr::Class(_), FnExpr::Class(_)) | (FnExpr::Md(_), FnExpr::Md(_))
                );
                if !compatible {
                    return Err(self.err_here(
                        "categorical functions compare only against the same function",
                        &[],
                    ));
                }
                if !eq_only {
                    return Err(self.err_here(
                        "categorical comparisons support only `==` and `!=`",
                        &[],
                    ));
                }
                Ok(())
            }
            (false, false) => Ok(()),
            _ => Err(self.err_here(
                "cannot compare a categorical function with a numeric one",
                &[],
            )),
        }
    }

    // ----- spatial terms -----

    fn parse_term(&mut self) -> Result<SpatialTerm, ParseError> {
        let lhs = self.parse_term_cup()?;
        let release = match self.peek() {
            Some(Tok::UntilS) => false,
            Some(Tok::ReleaseS) => true,
            _ => return Ok(lhs),
        };
        self.bump();
        let interval = self.maybe_interval()?;
        let rhs = self.parse_term()?;
        let span = lhs.span.join(rhs.span);
        let kind = if release {
            SpatialTermKind::SpatialRelease {
                interval,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            }
        } else {
            SpatialTermKind::SpatialUntil {
                interval,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            }
        };
        Ok(SpatialTerm { kind, span })
    }

    fn parse_term_cup(&mut self) -> Result<SpatialTerm, ParseError> {
        let mut lhs = self.parse_term_cap()?;
        while self.peek() == Some(&Tok::Cup) {
            self.bump();
            let rhs = self.parse_term_cap()?;
            let span = lhs.span.join(rhs.span);
            lhs = SpatialTerm {
                kind: SpatialTermKind::Union(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_term_cap(&mut self) -> Result<SpatialTerm, ParseError> {
        let mut lhs = self.parse_term_unary()?;
        while self.peek() == Some(&Tok::Cap) {
            self.bump();
            let rhs = self.parse_term_unary()?;
            let span = lhs.span.join(rhs.span);
            lhs = SpatialTerm {
                kind: SpatialTermKind::Intersect(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn parse_term_unary(&mut self) -> Result<SpatialTerm, ParseError> {
        let start = self.cur_span();
        macro_rules! prefix {
            ($ctor:path) => {{
                self.bump();
                let body = self.parse_term_unary()?;
                let span = start.join(body.span);
                Ok(SpatialTerm { kind: $ctor(Box::new(body)), span })
            }};
        }
        macro_rules! windowed {
            ($name:ident) => {{
                self.bump();
                let interval = self.maybe_interval()?;
                let body = self.parse_term_unary()?;
                let span = start.join(body.span);
                Ok(SpatialTerm {
                    kind: SpatialTermKind::$name { interval, body: Box::new(body) },
                    span,
                })
            }};
        }
        match self.peek() {
            Some(Tok::Cmpl) => prefix!(SpatialTermKind::Complement),
            Some(Tok::Int) => prefix!(SpatialTermKind::Interior),
            Some(Tok::Cl) => prefix!(SpatialTermKind::Closure),
            Some(Tok::NextS) => windowed!(SpatialNext),
            Some(Tok::AlwaysS) => windowed!(SpatialAlways),
            Some(Tok::EventuallyS) => windowed!(SpatialEventually),
            Some(Tok::Bb) => {
                self.bump();
                self.expect(&Tok::LParen, "`(`")?;
                let (id, _) = self.expect_ident("an id variable")?;
                let end = self.expect(&Tok::RParen, "`)`")?;
                Ok(SpatialTerm { kind: SpatialTermKind::BBoxOf(id), span: start.join(end) })
            }
            Some(Tok::EmptySetKw) => {
                self.bump();
                Ok(SpatialTerm { kind: SpatialTermKind::EmptySet, span: start })
            }
            Some(Tok::UniverseKw) => {
                self.bump();
                Ok(SpatialTerm { kind: SpatialTermKind::Universe, span: start })
            }
            Some(Tok::LParen) => {
                self.bump();
                let t = self.parse_term()?;
                let end = self.expect(&Tok::RParen, "`)`")?;
                Ok(SpatialTerm { kind: t.kind, span: start.join(end) })
            }
            _ => Err(self.err_here(
                "expected a spatial term",
                &["BB", "EMPTYSET", "UNIVERSE", "CMPL", "INT", "CL", "NEXTS", "ALWAYSS",
                  "EVENTUALLYS", "("],
            )),
        }
    }

    // ----- intervals -----

    fn maybe_interval(&mut self) -> Result<Option<IntervalSpec>, ParseError> {
        if self.peek() != Some(&Tok::LBrack) {
            return Ok(None);
        }
        self.bump();
        let (lo, lo_span) = self.expect_number()?;
        self.expect(&Tok::Comma, "`,`")?;
        let (hi, hi_span) = match self.peek() {
            Some(Tok::Ident(s)) if s == "inf" => {
                let sp = self.bump().unwrap().span;
                (f64::INFINITY, sp)
            }
            _ => self.expect_number()?,
        };
        let hi_closed = match self.peek() {
            Some(Tok::RBrack) => {
                self.bump();
                true
            }
            Some(Tok::RParen) => {
                self.bump();
                false
            }
            _ => return Err(self.err_here("expected `]` or `)`", &["]", ")"])),
        };
        let unit = match self.peek() {
            Some(Tok::Ident(s)) if s == "t" => IntervalUnit::Time,
            Some(Tok::Ident(s)) if s == "f" => IntervalUnit::Frame,
            _ => {
                return Err(self.err_here(
                    "expected an interval unit",
                    &["t (seconds)", "f (frames)"],
                ))
            }
        };
        self.bump();
        let fail = |span: Span, message: &str| {
            let (line, col) = line_col(self.src, span.start);
            Err(ParseError { message: message.into(), line, col, expected: Vec::new() })
        };
        if lo < 0.0 {
            return fail(lo_span, "interval bounds must be non-negative");
        }
        if hi < lo || (hi == lo && !hi_closed) {
            return fail(hi_span, "interval upper bound must not precede the lower bound");
        }
        if unit == IntervalUnit::Frame {
            if lo.fract() != 0.0 {
                return fail(lo_span, "frame interval endpoints must be integers");
            }
            if hi.is_finite() && hi.fract() != 0.0 {
                return fail(hi_span, "frame interval endpoints must be integers");
            }
        }
        if hi.is_infinite() && hi_closed {
            return fail(hi_span, "an infinite upper bound must use `)`");
        }
        Ok(Some(IntervalSpec { lo, hi, lo_closed: true, hi_closed, unit }))
    }
}

// ----- scope checking -----

#[derive(Clone, Copy, PartialEq)]
enum Sort {
    Id,
    Time,
}

struct ScopeChecker<'a> {
    src: &'a str,
    scope: Vec<(String, Sort)>,
}

impl<'a> ScopeChecker<'a> {
    fn error(&self, span: Span, message: String) -> ParseError {
        let (line, col) = line_col(self.src, span.start);
        ParseError { message, line, col, expected: Vec::new() }
    }

    fn lookup(&self, name: &str) -> Option<Sort> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s)
    }

    fn use_var(&self, name: &str, want: Sort, span: Span) -> Result<(), ParseError> {
        match self.lookup(name) {
            Some(s) if s == want => Ok(()),
            Some(Sort::Id) => Err(self.error(
                span,
                format!("`{name}` is an object-id variable but is used as a time variable"),
            )),
            Some(Sort::Time) => Err(self.error(
                span,
                format!("`{name}` is a freeze time variable but is used as an id variable"),
            )),
            None => Err(self.error(span, format!("variable `{name}` is not bound"))),
        }
    }

    fn bind(&mut self, name: &str, sort: Sort, span: Span) -> Result<(), ParseError> {
        if self.lookup(name).is_some() {
            return Err(self.error(span, format!("variable `{name}` is already bound")));
        }
        self.scope.push((name.to_string(), sort));
        Ok(())
    }

    fn check(&mut self, f: &Formula) -> Result<(), ParseError> {
        match &f.kind {
            FormulaKind::True => Ok(()),
            FormulaKind::Not(p)
            | FormulaKind::Next(p)
            | FormulaKind::WeakNext(p)
            | FormulaKind::Previous(p)
            | FormulaKind::WeakPrevious(p)
            | FormulaKind::Always { body: p, .. }
            | FormulaKind::Eventually { body: p, .. } => self.check(p),
            FormulaKind::And(a, b)
            | FormulaKind::Or(a, b)
            | FormulaKind::Implies(a, b)
            | FormulaKind::Until { lhs: a, rhs: b, .. }
            | FormulaKind::Release { lhs: a, rhs: b, .. }
            | FormulaKind::Since { lhs: a, rhs: b } => {
                self.check(a)?;
                self.check(b)
            }
            FormulaKind::Exists { id, freeze, body }
            | FormulaKind::Forall { id, freeze, body } => {
                let depth = self.scope.len();
                self.bind(id, Sort::Id, f.span)?;
                if let Some(x) = freeze {
                    self.bind(x, Sort::Time, f.span)?;
                }
                self.check(body)?;
                self.scope.truncate(depth);
                Ok(())
            }
            FormulaKind::Freeze { var, body } => {
                let depth = self.scope.len();
                self.bind(var, Sort::Time, f.span)?;
                self.check(body)?;
                self.scope.truncate(depth);
                Ok(())
            }
            FormulaKind::TimeConstraint { var, .. }
            | FormulaKind::FrameConstraint { var, .. }
            | FormulaKind::ModuloConstraint { var, .. } => {
                self.use_var(var, Sort::Time, f.span)
            }
            FormulaKind::IdEquality { lhs, rhs, .. } => {
                self.use_var(lhs, Sort::Id, f.span)?;
                self.use_var(rhs, Sort::Id, f.span)
            }
            FormulaKind::SpatialExists(t) | FormulaKind::SpatialForall(t) => {
                self.check_term(t, f.span)
            }
            FormulaKind::FunctionAtom(a) => {
                self.check_fn_expr(&a.lhs, f.span)?;
                if let FnRhs::Expr { expr, .. } = &a.rhs {
                    self.check_fn_expr(expr, f.span)?;
                }
                Ok(())
            }
        }
    }

    fn check_term(&self, t: &SpatialTerm, outer: Span) -> Result<(), ParseError> {
        let span = if t.span == Span::default() { outer } else { t.span };
        match &t.kind {
            SpatialTermKind::BBoxOf(v) => self.use_var(v, Sort::Id, span),
            SpatialTermKind::EmptySet | SpatialTermKind::Universe => Ok(()),
            SpatialTermKind::Complement(a)
            | SpatialTermKind::Interior(a)
            | SpatialTermKind::Closure(a)
            | SpatialTermKind::SpatialNext { body: a, .. }
            | SpatialTermKind::SpatialAlways { body: a, .. }
            | SpatialTermKind::SpatialEventually { body: a, .. } => self.check_term(a, span),
            SpatialTermKind::Intersect(a, b)
            | SpatialTermKind::Union(a, b)
            | SpatialTermKind::SpatialUntil { lhs: a, rhs: b, .. }
            | SpatialTermKind::SpatialRelease { lhs: a, rhs: b, .. } => {
                self.check_term(a, span)?;
                self.check_term(b, span)
            }
        }
    }

    fn check_fn_expr(&self, e: &FnExpr, span: Span) -> Result<(), ParseError> {
        let id = |v: &str| self.use_var(v, Sort::Id, span);
        match e {
            FnExpr::Class(v)
            | FnExpr::Prob(v)
            | FnExpr::Lat(v, _)
            | FnExpr::Lon(v, _)
            | FnExpr::AreaId(v)
            | FnExpr::Empty(v)
            | FnExpr::Md(v) => id(v),
            FnExpr::Dist(a, _, b, _) => {
                if let DistArg::Id(v) = a {
                    id(v)?;
                }
                if let DistArg::Id(v) = b {
                    id(v)?;
                }
                Ok(())
            }
            FnExpr::Visible(vp, _, a, b) => {
                if let DistArg::Id(v) = vp {
                    id(v)?;
                }
                id(a)?;
                id(b)
            }
            FnExpr::AreaTerm(t) => self.check_term(t, span),
            FnExpr::Ratio(a, b) => {
                self.check_fn_expr(a, span)?;
                self.check_fn_expr(b, span)
            }
        }
    }
}

fn check_scopes(src: &str, f: &Formula) -> Result<(), ParseError> {
    ScopeChecker { src, scope: Vec::new() }.check(f)
}
