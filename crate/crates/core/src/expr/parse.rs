//! Recursive-descent parser for the expression grammar.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::Expr;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("exponent must be an integer literal")]
    NonIntegerExponent,
    #[error("exponent out of range")]
    ExponentOutOfRange,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(r) => r.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn err(pos: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { pos, kind }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                toks.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                toks.push((i, Tok::Star));
                i += 1;
            }
            '/' => {
                toks.push((i, Tok::Slash));
                i += 1;
            }
            '^' => {
                toks.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                toks.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                toks.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let int_part: BigInt = text[start..i].parse().unwrap();
                let mut value = BigRational::from_integer(int_part);
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start {
                        return Err(err(i, ParseErrorKind::UnexpectedChar('.')));
                    }
                    let frac = &text[frac_start..i];
                    // Decimal digits become an exact rational: d / 10^k.
                    let numer: BigInt = frac.parse().unwrap();
                    let denom = (0..frac.len()).fold(BigInt::one(), |acc, _| acc * 10);
                    value += BigRational::new(numer, denom);
                }
                toks.push((start, Tok::Num(value)));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            }
            other => return Err(err(i, ParseErrorKind::UnexpectedChar(other))),
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    vars: &'a [String],
    params: &'a [String],
}

/// Parse `text` against declared variable and parameter names.
///
/// Literal negations and literal fractions fold to a single exact constant
/// (`-1/3` is `Const(-1/3)`), so parsing is total over valid inputs and
/// produces a unique tree under the grammar's precedence.
pub fn parse_expr(text: &str, vars: &[String], params: &[String]) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        vars,
        params,
    };
    let e = p.expr()?;
    if let Some((pos, tok)) = p.peek_at() {
        return Err(err(pos, ParseErrorKind::UnexpectedToken(tok.describe())));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self) -> Option<(usize, Tok)> {
        self.toks.get(self.pos).cloned()
    }

    fn next(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.next() {
            Some((_, ref t)) if *t == want => Ok(()),
            Some((pos, t)) => Err(err(pos, ParseErrorKind::UnexpectedToken(t.describe()))),
            None => Err(err(self.end, ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::Add(Box::new(acc), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = Expr::Sub(Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = Expr::Mul(Box::new(acc), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = fold_div(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(fold_neg(inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            let k = self.exponent()?;
            return Ok(Expr::PowInt(Box::new(base), k));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let parenthesized = matches!(self.peek(), Some(Tok::LParen));
        if parenthesized {
            self.pos += 1;
        }
        let negative = matches!(self.peek(), Some(Tok::Minus));
        if negative {
            self.pos += 1;
        }
        let (pos, tok) = self
            .next()
            .ok_or_else(|| err(self.end, ParseErrorKind::UnexpectedEnd))?;
        let k = match tok {
            Tok::Num(r) => {
                if !r.is_integer() {
                    return Err(err(pos, ParseErrorKind::NonIntegerExponent));
                }
                r.numer()
                    .to_i32()
                    .ok_or_else(|| err(pos, ParseErrorKind::ExponentOutOfRange))?
            }
            _ => return Err(err(pos, ParseErrorKind::NonIntegerExponent)),
        };
        if parenthesized {
            self.expect(Tok::RParen)?;
        }
        Ok(if negative { -k } else { k })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (pos, tok) = self
            .next()
            .ok_or_else(|| err(self.end, ParseErrorKind::UnexpectedEnd))?;
        match tok {
            Tok::Num(r) => Ok(Expr::Const(r)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "sqrt" || name == "cbrt" {
                    self.expect(Tok::LParen)?;
                    let inner = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(if name == "sqrt" {
                        Expr::Sqrt(Box::new(inner))
                    } else {
                        Expr::Cbrt(Box::new(inner))
                    });
                }
                if let Some(idx) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(idx));
                }
                if self.params.iter().any(|p| *p == name) {
                    return Ok(Expr::Param(name));
                }
                Err(err(pos, ParseErrorKind::UnknownIdentifier(name)))
            }
            other => Err(err(pos, ParseErrorKind::UnexpectedToken(other.describe()))),
        }
    }
}

/// `-literal` folds to a negative constant; anything else stays a `Neg` node.
fn fold_neg(e: Expr) -> Expr {
    match e {
        Expr::Const(r) => Expr::Const(-r),
        other => Expr::Neg(Box::new(other)),
    }
}

/// `literal/literal` folds to a single exact rational (unless the divisor is
/// the literal zero, which is left for evaluation to report as a pole).
fn fold_div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if !y.is_zero() => Expr::Const(x / y),
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    fn params() -> Vec<String> {
        vec!["c".into()]
    }

    #[test]
    fn reports_error_positions() {
        let e = parse_expr("x + $", &vars(), &params()).unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedChar('$')));

        let e = parse_expr("x + ", &vars(), &params()).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedEnd));

        let e = parse_expr("x + w", &vars(), &params()).unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(matches!(e.kind, ParseErrorKind::UnknownIdentifier(ref n) if n == "w"));
    }

    #[test]
    fn rejects_non_integer_exponents() {
        let e = parse_expr("x^0.5", &vars(), &params()).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NonIntegerExponent));
        let e = parse_expr("x^y", &vars(), &params()).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NonIntegerExponent));
    }

    #[test]
    fn rejects_trailing_tokens() {
        let e = parse_expr("x y", &vars(), &params()).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedToken(_)));
    }

    #[test]
    fn negative_exponents_parse_both_ways() {
        let a = parse_expr("x^-2", &vars(), &params()).unwrap();
        let b = parse_expr("x^(-2)", &vars(), &params()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, Expr::PowInt(Box::new(Expr::Var(0)), -2));
    }

    #[test]
    fn chained_powers_are_rejected() {
        assert!(parse_expr("x^2^3", &vars(), &params()).is_err());
    }

    #[test]
    fn whitespace_is_insignificant() {
        let a = parse_expr("x+y*z", &vars(), &params()).unwrap();
        let b = parse_expr("  x + y \t* z ", &vars(), &params()).unwrap();
        assert_eq!(a, b);
    }
}
