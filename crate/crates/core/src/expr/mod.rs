//! Expression trees for scalar fields over named variables and parameters.
//!
//! This is the atom from which operator fields are built: every matrix entry,
//! characteristic coefficient, and residual equation is an [`Expr`].
//! Rational literals are stored exactly (decimal literals such as `0.25`
//! become the exact rational 1/4); evaluation is carried out in 64-bit binary
//! floating point, either over plain scalars ([`eval_scalar`]) or over 2-jets
//! ([`eval_jet2`]), which yields exact gradients and Hessians.
//!
//! The text grammar (see [`parse_expr`]):
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | power
//! power    := atom ("^" exponent)?
//! exponent := integer | "(" "-"? integer ")" | "-" integer
//! atom     := rational | ident "(" expr ")" | ident | "(" expr ")"
//! rational := digits ("." digits)?
//! ```
//!
//! `^` binds tighter than `*` and `/`; exponents are integers only. The
//! recognized function idents are `sqrt` and `cbrt`; every other ident must
//! be a declared variable or parameter. `cbrt` is the real cube root, defined
//! for negative arguments.

mod parse;

pub use parse::{parse_expr, ParseError, ParseErrorKind};

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::jet::{Jet2, NumError};

/// Scalar-field expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Exact rational constant.
    Const(BigRational),
    /// Named parameter, bound at evaluation time through a [`ParamEnv`].
    Param(String),
    /// Coordinate variable by index into the declared variable list.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Integer power; negative exponents introduce poles at zeros of the base.
    PowInt(Box<Expr>, i32),
    Sqrt(Box<Expr>),
    Cbrt(Box<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Const(BigRational::from_integer(v.into()))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Const(BigRational::new(num.into(), den.into()))
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    pub fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }

    /// Largest variable index mentioned anywhere in the tree, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Const(_) | Expr::Param(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) | Expr::Sqrt(e) | Expr::Cbrt(e) | Expr::PowInt(e, _) => e.max_var_index(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var_index(), b.max_var_index()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
        }
    }

    /// Collect every parameter name mentioned in the tree.
    pub fn param_names(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Param(name) => {
                    if !out.iter().any(|n| n == name) {
                        out.push(name.clone());
                    }
                }
                Expr::Const(_) | Expr::Var(_) => {}
                Expr::Neg(e) | Expr::Sqrt(e) | Expr::Cbrt(e) | Expr::PowInt(e, _) => walk(e, out),
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Render back to grammar text; re-parsing the output of a parsed
    /// expression yields an identical tree.
    pub fn to_text(&self, vars: &[String]) -> String {
        let mut out = String::new();
        write_expr(self, vars, &mut out);
        out
    }
}

/// Binding environment for parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamEnv {
    bindings: BTreeMap<String, f64>,
}

impl ParamEnv {
    pub fn new() -> Self {
        ParamEnv::default()
    }

    pub fn bind(mut self, name: &str, value: f64) -> Self {
        self.bindings.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.bindings.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.bindings.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }
}

impl FromIterator<(String, f64)> for ParamEnv {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        ParamEnv {
            bindings: iter.into_iter().collect(),
        }
    }
}

/// Evaluation failure: a numeric-domain error (pole, negative even root,
/// root-derivative singularity) or an unbound parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational conversion to f64")
}

/// Evaluate to a plain scalar at `point`.
pub fn eval_scalar(e: &Expr, point: &[f64], env: &ParamEnv) -> Result<f64, EvalError> {
    match e {
        Expr::Const(r) => Ok(rational_to_f64(r)),
        Expr::Param(name) => env
            .get(name)
            .ok_or_else(|| EvalError::UnboundParam(name.clone())),
        Expr::Var(i) => {
            assert!(*i < point.len(), "variable index {i} out of range");
            Ok(point[*i])
        }
        Expr::Neg(e) => Ok(-eval_scalar(e, point, env)?),
        Expr::Add(a, b) => Ok(eval_scalar(a, point, env)? + eval_scalar(b, point, env)?),
        Expr::Sub(a, b) => Ok(eval_scalar(a, point, env)? - eval_scalar(b, point, env)?),
        Expr::Mul(a, b) => Ok(eval_scalar(a, point, env)? * eval_scalar(b, point, env)?),
        Expr::Div(a, b) => {
            let num = eval_scalar(a, point, env)?;
            let den = eval_scalar(b, point, env)?;
            if den == 0.0 {
                return Err(NumError::DivisionByZero.into());
            }
            Ok(num / den)
        }
        Expr::PowInt(b, k) => {
            let v = eval_scalar(b, point, env)?;
            if *k < 0 && v == 0.0 {
                return Err(NumError::DivisionByZero.into());
            }
            Ok(v.powi(*k))
        }
        Expr::Sqrt(e) => {
            let v = eval_scalar(e, point, env)?;
            if v < 0.0 {
                return Err(NumError::NegativeSqrt(v).into());
            }
            Ok(v.sqrt())
        }
        Expr::Cbrt(e) => Ok(eval_scalar(e, point, env)?.cbrt()),
    }
}

/// Evaluate to a 2-jet at `point`: value, exact gradient, exact Hessian.
///
/// Unlike [`eval_scalar`], `sqrt` and `cbrt` additionally fail when their
/// argument value is zero, where the derivative is singular.
pub fn eval_jet2(e: &Expr, point: &[f64], env: &ParamEnv) -> Result<Jet2, EvalError> {
    let n = point.len();
    match e {
        Expr::Const(r) => Ok(Jet2::constant(rational_to_f64(r), n)),
        Expr::Param(name) => env
            .get(name)
            .map(|v| Jet2::constant(v, n))
            .ok_or_else(|| EvalError::UnboundParam(name.clone())),
        Expr::Var(i) => {
            assert!(*i < n, "variable index {i} out of range");
            Ok(Jet2::seed(*i, point[*i], n))
        }
        Expr::Neg(e) => Ok(eval_jet2(e, point, env)?.neg()),
        Expr::Add(a, b) => Ok(eval_jet2(a, point, env)?.add(&eval_jet2(b, point, env)?)),
        Expr::Sub(a, b) => Ok(eval_jet2(a, point, env)?.sub(&eval_jet2(b, point, env)?)),
        Expr::Mul(a, b) => Ok(eval_jet2(a, point, env)?.mul(&eval_jet2(b, point, env)?)),
        Expr::Div(a, b) => Ok(eval_jet2(a, point, env)?.div(&eval_jet2(b, point, env)?)?),
        Expr::PowInt(b, k) => Ok(eval_jet2(b, point, env)?.pow_int(*k)?),
        Expr::Sqrt(e) => Ok(eval_jet2(e, point, env)?.sqrt()?),
        Expr::Cbrt(e) => Ok(eval_jet2(e, point, env)?.cbrt()?),
    }
}

// --- pretty printer -------------------------------------------------------

/// Printing precedence. Atoms (variables, parameters, simple nonnegative
/// integer constants, function calls) never need parentheses; non-integer or
/// negative constants always take them in operator context so that constant
/// folding on re-parse reproduces the same tree.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(_) => 3,
        Expr::PowInt(..) => 4,
        Expr::Const(r) => {
            if r.is_integer() && !r.is_negative() {
                6
            } else {
                0
            }
        }
        Expr::Var(_) | Expr::Param(_) | Expr::Sqrt(_) | Expr::Cbrt(_) => 6,
    }
}

fn write_wrapped(e: &Expr, vars: &[String], out: &mut String, needs_parens: bool) {
    if needs_parens {
        out.push('(');
        write_expr(e, vars, out);
        out.push(')');
    } else {
        write_expr(e, vars, out);
    }
}

fn write_expr(e: &Expr, vars: &[String], out: &mut String) {
    match e {
        Expr::Const(r) => {
            if r.is_integer() {
                out.push_str(&r.numer().to_string());
            } else {
                out.push_str(&format!("{}/{}", r.numer(), r.denom()));
            }
        }
        Expr::Param(name) => out.push_str(name),
        Expr::Var(i) => out.push_str(&vars[*i]),
        Expr::Neg(c) => {
            out.push('-');
            let wrap = prec(c) < 3 || matches!(**c, Expr::Neg(_));
            write_wrapped(c, vars, out, wrap);
        }
        Expr::Add(a, b) => {
            write_wrapped(a, vars, out, prec(a) < 1);
            out.push_str(" + ");
            write_wrapped(b, vars, out, prec(b) <= 1 || matches!(**b, Expr::Neg(_)));
        }
        Expr::Sub(a, b) => {
            write_wrapped(a, vars, out, prec(a) < 1);
            out.push_str(" - ");
            write_wrapped(b, vars, out, prec(b) <= 1 || matches!(**b, Expr::Neg(_)));
        }
        Expr::Mul(a, b) => {
            write_wrapped(a, vars, out, prec(a) < 2);
            out.push('*');
            write_wrapped(b, vars, out, prec(b) <= 2 || matches!(**b, Expr::Neg(_)));
        }
        Expr::Div(a, b) => {
            write_wrapped(a, vars, out, prec(a) < 2);
            out.push('/');
            write_wrapped(b, vars, out, prec(b) <= 2 || matches!(**b, Expr::Neg(_)));
        }
        Expr::PowInt(b, k) => {
            write_wrapped(b, vars, out, prec(b) < 6);
            if *k < 0 {
                out.push_str(&format!("^({k})"));
            } else {
                out.push_str(&format!("^{k}"));
            }
        }
        Expr::Sqrt(c) => {
            out.push_str("sqrt(");
            write_expr(c, vars, out);
            out.push(')');
        }
        Expr::Cbrt(c) => {
            out.push_str("cbrt(");
            write_expr(c, vars, out);
            out.push(')');
        }
    }
}

impl fmt::Display for ParamEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{k}={v}")?;
            first = false;
        }
        Ok(())
    }
}
