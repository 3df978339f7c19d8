//! Tokenizer for the formula language.
//!
//! Lowercase keywords are the temporal/logical operators and binders;
//! uppercase keywords name perception functions, spatial operators, and
//! anchor points. `#` starts a comment that runs to the end of the line.
//! Any other identifier is a variable name: identifiers of the shape
//! `id<digits>` conventionally denote object-id variables, everything
//! else freeze time variables (the parser enforces the distinction by
//! position).

use super::Span;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    // Lowercase formula keywords.
    True,
    False,
    Not,
    And,
    Or,
    Implies,
    Next,
    WNext,
    Until,
    Release,
    Always,
    Eventually,
    Prev,
    WPrev,
    Since,
    Exists,
    Forall,
    // Uppercase keywords.
    Se,
    Sa,
    Bb,
    EmptySetKw,
    UniverseKw,
    Cmpl,
    Cap,
    Cup,
    Int,
    Cl,
    UntilS,
    ReleaseS,
    NextS,
    AlwaysS,
    EventuallyS,
    Class,
    Prob,
    Lat,
    Lon,
    Dist,
    Area,
    Ratio,
    EmptyFn,
    Visible,
    Md,
    Ego,
    CTime,
    CFrame,
    Crt(crate::spatial::Crt),
    // Literals and identifiers.
    Ident(String),
    Number(f64),
    Str(String),
    // Punctuation.
    LParen,
    RParen,
    LBrack,
    RBrack,
    Dot,
    Comma,
    At,
    Percent,
    Star,
    Minus,
    Lt,
    Le,
    EqEq,
    Ne,
    Ge,
    Gt,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Number(n) => write!(f, "number `{n}`"),
            Tok::Str(s) => write!(f, "string \"{s}\""),
            Tok::Crt(c) => write!(f, "`{c}`"),
            other => {
                let s = match other {
                    Tok::True => "true",
                    Tok::False => "false",
                    Tok::Not => "not",
                    Tok::And => "and",
                    Tok::Or => "or",
                    Tok::Implies => "implies",
                    Tok::Next => "next",
                    Tok::WNext => "wnext",
                    Tok::Until => "until",
                    Tok::Release => "release",
                    Tok::Always => "always",
                    Tok::Eventually => "eventually",
                    Tok::Prev => "prev",
                    Tok::WPrev => "wprev",
                    Tok::Since => "since",
                    Tok::Exists => "exists",
                    Tok::Forall => "forall",
                    Tok::Se => "SE",
                    Tok::Sa => "SA",
                    Tok::Bb => "BB",
                    Tok::EmptySetKw => "EMPTYSET",
                    Tok::UniverseKw => "UNIVERSE",
                    Tok::Cmpl => "CMPL",
                    Tok::Cap => "CAP",
                    Tok::Cup => "CUP",
                    Tok::Int => "INT",
                    Tok::Cl => "CL",
                    Tok::UntilS => "UNTILS",
                    Tok::ReleaseS => "RELEASES",
                    Tok::NextS => "NEXTS",
                    Tok::AlwaysS => "ALWAYSS",
                    Tok::EventuallyS => "EVENTUALLYS",
                    Tok::Class => "CLASS",
                    Tok::Prob => "PROB",
                    Tok::Lat => "LAT",
                    Tok::Lon => "LON",
                    Tok::Dist => "DIST",
                    Tok::Area => "AREA",
                    Tok::Ratio => "RATIO",
                    Tok::EmptyFn => "EMPTY",
                    Tok::Visible => "VISIBLE",
                    Tok::Md => "MD",
                    Tok::Ego => "EGO",
                    Tok::CTime => "CTIME",
                    Tok::CFrame => "CFRAME",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBrack => "[",
                    Tok::RBrack => "]",
                    Tok::Dot => ".",
                    Tok::Comma => ",",
                    Tok::At => "@",
                    Tok::Percent => "%",
                    Tok::Star => "*",
                    Tok::Minus => "-",
                    Tok::Lt => "<",
                    Tok::Le => "<=",
                    Tok::EqEq => "==",
                    Tok::Ne => "!=",
                    Tok::Ge => ">=",
                    Tok::Gt => ">",
                    _ => unreachable!(),
                };
                write!(f, "`{s}`")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn keyword(word: &str) -> Option<Tok> {
    use crate::spatial::Crt;
    let t = match word {
        "true" => Tok::True,
        "false" => Tok::False,
        "not" => Tok::Not,
        "and" => Tok::And,
        "or" => Tok::Or,
        "implies" => Tok::Implies,
        "next" => Tok::Next,
        "wnext" => Tok::WNext,
        "until" => Tok::Until,
        "release" => Tok::Release,
        "always" => Tok::Always,
        "eventually" => Tok::Eventually,
        "prev" => Tok::Prev,
        "wprev" => Tok::WPrev,
        "since" => Tok::Since,
        "exists" => Tok::Exists,
        "forall" => Tok::Forall,
        "SE" => Tok::Se,
        "SA" => Tok::Sa,
        "BB" => Tok::Bb,
        "EMPTYSET" => Tok::EmptySetKw,
        "UNIVERSE" => Tok::UniverseKw,
        "CMPL" => Tok::Cmpl,
        "CAP" => Tok::Cap,
        "CUP" => Tok::Cup,
        "INT" => Tok::Int,
        "CL" => Tok::Cl,
        "UNTILS" => Tok::UntilS,
        "RELEASES" => Tok::ReleaseS,
        "NEXTS" => Tok::NextS,
        "ALWAYSS" => Tok::AlwaysS,
        "EVENTUALLYS" => Tok::EventuallyS,
        "CLASS" => Tok::Class,
        "PROB" => Tok::Prob,
        "LAT" => Tok::Lat,
        "LON" => Tok::Lon,
        "DIST" => Tok::Dist,
        "AREA" => Tok::Area,
        "RATIO" => Tok::Ratio,
        "EMPTY" => Tok::EmptyFn,
        "VISIBLE" => Tok::Visible,
        "MD" => Tok::Md,
        "EGO" => Tok::Ego,
        "CTIME" => Tok::CTime,
        "CFRAME" => Tok::CFrame,
        "LM" => Tok::Crt(Crt::Lm),
        "RM" => Tok::Crt(Crt::Rm),
        "TM" => Tok::Crt(Crt::Tm),
        "BM" => Tok::Crt(Crt::Bm),
        "CT" => Tok::Crt(Crt::Ct),
        _ => return None,
    };
    Some(t)
}

/// Lexical error with the offending byte range.
#[derive(Clone, Debug)]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => push(&mut toks, Tok::LParen, i, &mut i),
            b')' => push(&mut toks, Tok::RParen, i, &mut i),
            b'[' => push(&mut toks, Tok::LBrack, i, &mut i),
            b']' => push(&mut toks, Tok::RBrack, i, &mut i),
            b'.' if !next_is_digit(bytes, i + 1) => push(&mut toks, Tok::Dot, i, &mut i),
            b',' => push(&mut toks, Tok::Comma, i, &mut i),
            b'@' => push(&mut toks, Tok::At, i, &mut i),
            b'%' => push(&mut toks, Tok::Percent, i, &mut i),
            b'*' => push(&mut toks, Tok::Star, i, &mut i),
            b'-' => push(&mut toks, Tok::Minus, i, &mut i),
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push(Token { tok: Tok::Le, span: Span::new(i, i + 2) });
                    i += 2;
                } else {
                    push(&mut toks, Tok::Lt, i, &mut i);
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push(Token { tok: Tok::Ge, span: Span::new(i, i + 2) });
                    i += 2;
                } else {
                    push(&mut toks, Tok::Gt, i, &mut i);
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push(Token { tok: Tok::EqEq, span: Span::new(i, i + 2) });
                    i += 2;
                } else {
                    return Err(LexError {
                        span: Span::new(i, i + 1),
                        message: "expected `==` (single `=` is not an operator)".into(),
                    });
                }
            }
            b'!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    toks.push(Token { tok: Tok::Ne, span: Span::new(i, i + 2) });
                    i += 2;
                } else {
                    return Err(LexError {
                        span: Span::new(i, i + 1),
                        message: "expected `!=` (`!` alone is not an operator; use `not`)".into(),
                    });
                }
            }
            b'"' => {
                let start = i;
                i += 1;
                let lit_start = i;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += 1;
                }
                if i >= bytes.len() {
                    return Err(LexError {
                        span: Span::new(start, i),
                        message: "unterminated string literal".into(),
                    });
                }
                let s = src[lit_start..i].to_string();
                i += 1;
                toks.push(Token { tok: Tok::Str(s), span: Span::new(start, i) });
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' && next_is_digit(bytes, i + 1) {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| LexError {
                    span: Span::new(start, i),
                    message: format!("malformed number `{text}`"),
                })?;
                toks.push(Token { tok: Tok::Number(value), span: Span::new(start, i) });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let word = &src[start..i];
                let tok = keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()));
                toks.push(Token { tok, span: Span::new(start, i) });
            }
            other => {
                return Err(LexError {
                    span: Span::new(i, i + 1),
                    message: format!("unexpected character `{}`", other as char),
                });
            }
        }
    }
    Ok(toks)
}

fn push(toks: &mut Vec<Token>, tok: Tok, at: usize, i: &mut usize) {
    toks.push(Token { tok, span: Span::new(at, at + 1) });
    *i += 1;
}

fn next_is_digit(bytes: &[u8], i: usize) -> bool {
    bytes.get(i).is_some_and(|b| b.is_ascii_digit())
}
