//! Order-2 truncated Taylor arithmetic (2-jets) in `n` variables.
//!
//! A [`Jet2`] carries the value, gradient, and Hessian of a scalar quantity at
//! a point. All arithmetic is the exact order-2 truncation of Taylor-series
//! arithmetic, so gradients and Hessians obtained by evaluating an expression
//! over jets are exact up to floating-point rounding — no finite differencing
//! is involved anywhere.
//!
//! The product rule at order 2 includes the cross term:
//!
//! ```text
//! (fg)'' = f·g'' + g·f'' + f'⊗g' + g'⊗f'
//! ```
//!
//! The dimension `n` is a run-time value carried by each jet. Mixing jets of
//! different dimensions is a programming error and panics.

use thiserror::Error;

/// Domain error raised by jet (and plain scalar) arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("square root derivative singular at zero")]
    SqrtDerivativeSingular,
    #[error("cube root derivative singular at zero")]
    CbrtDerivativeSingular,
}

/// Value, gradient and Hessian of a scalar at a point, in `n` variables.
///
/// The Hessian is stored dense (row-major, `n × n`) and is kept exactly
/// symmetric: every operation writes entry `(i, j)` and mirrors it to
/// `(j, i)` bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl Jet2 {
    /// Constant lift: value `v`, zero gradient and Hessian.
    pub fn constant(v: f64, n: usize) -> Self {
        Jet2 {
            value: v,
            grad: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    /// Seed for variable `i`: value `x`, gradient `e_i`, zero Hessian.
    pub fn seed(i: usize, x: f64, n: usize) -> Self {
        assert!(i < n, "seed index {i} out of range for dimension {n}");
        let mut j = Jet2::constant(x, n);
        j.grad[i] = 1.0;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_at(&self, i: usize) -> f64 {
        self.grad[i]
    }

    /// Hessian as a dense row-major slice of length `n*n`.
    pub fn hess(&self) -> &[f64] {
        &self.hess
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    /// Largest magnitude among the value and gradient components.
    pub fn max_abs_order1(&self) -> f64 {
        let mut m = self.value.abs();
        for g in &self.grad {
            m = m.max(g.abs());
        }
        m
    }

    fn check_dim(&self, rhs: &Jet2) {
        assert_eq!(
            self.dim(),
            rhs.dim(),
            "jet dimension mismatch: {} vs {}",
            self.dim(),
            rhs.dim()
        );
    }

    pub fn add(&self, rhs: &Jet2) -> Jet2 {
        self.check_dim(rhs);
        Jet2 {
            value: self.value + rhs.value,
            grad: zip_with(&self.grad, &rhs.grad, |a, b| a + b),
            hess: zip_with(&self.hess, &rhs.hess, |a, b| a + b),
        }
    }

    pub fn sub(&self, rhs: &Jet2) -> Jet2 {
        self.check_dim(rhs);
        Jet2 {
            value: self.value - rhs.value,
            grad: zip_with(&self.grad, &rhs.grad, |a, b| a - b),
            hess: zip_with(&self.hess, &rhs.hess, |a, b| a - b),
        }
    }

    pub fn neg(&self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self.hess.iter().map(|h| -h).collect(),
        }
    }

    /// Componentwise scaling by a plain constant.
    pub fn scale(&self, s: f64) -> Jet2 {
        Jet2 {
            value: self.value * s,
            grad: self.grad.iter().map(|g| g * s).collect(),
            hess: self.hess.iter().map(|h| h * s).collect(),
        }
    }

    /// Product with the full order-2 cross term.
    pub fn mul(&self, rhs: &Jet2) -> Jet2 {
        self.check_dim(rhs);
        let n = self.dim();
        let (av, bv) = (self.value, rhs.value);
        let grad: Vec<f64> = (0..n).map(|i| av * rhs.grad[i] + bv * self.grad[i]).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let h = av * rhs.hess[i * n + j]
                    + bv * self.hess[i * n + j]
                    + self.grad[i] * rhs.grad[j]
                    + rhs.grad[i] * self.grad[j];
                hess[i * n + j] = h;
                hess[j * n + i] = h;
            }
        }
        Jet2 {
            value: av * bv,
            grad,
            hess,
        }
    }

    /// Composition with a scalar function given its value and first two
    /// derivatives at `self.value`: `φ(u)` has gradient `φ'·∇u` and Hessian
    /// `φ'·H_u + φ''·∇u⊗∇u`.
    fn compose(&self, value: f64, d1: f64, d2: f64) -> Jet2 {
        let n = self.dim();
        let grad: Vec<f64> = self.grad.iter().map(|g| d1 * g).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let h = d1 * self.hess[i * n + j] + d2 * self.grad[i] * self.grad[j];
                hess[i * n + j] = h;
                hess[j * n + i] = h;
            }
        }
        Jet2 { value, grad, hess }
    }

    /// Reciprocal `1/u`; the argument value must be nonzero.
    pub fn recip(&self) -> Result<Jet2, NumError> {
        let v = self.value;
        if v == 0.0 {
            return Err(NumError::DivisionByZero);
        }
        Ok(self.compose(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)))
    }

    pub fn div(&self, rhs: &Jet2) -> Result<Jet2, NumError> {
        Ok(self.mul(&rhs.recip()?))
    }

    /// Integer power, handling zero and negative exponents.
    pub fn pow_int(&self, k: i32) -> Result<Jet2, NumError> {
        let n = self.dim();
        let v = self.value;
        match k {
            0 => Ok(Jet2::constant(1.0, n)),
            1 => Ok(self.clone()),
            _ => {
                if k < 0 && v == 0.0 {
                    return Err(NumError::DivisionByZero);
                }
                let kf = f64::from(k);
                Ok(self.compose(
                    v.powi(k),
                    kf * v.powi(k - 1),
                    kf * (kf - 1.0) * v.powi(k - 2),
                ))
            }
        }
    }

    /// Square root; the argument value must be strictly positive (the
    /// derivative is singular at zero).
    pub fn sqrt(&self) -> Result<Jet2, NumError> {
        let v = self.value;
        if v < 0.0 {
            return Err(NumError::NegativeSqrt(v));
        }
        if v == 0.0 {
            return Err(NumError::SqrtDerivativeSingular);
        }
        let s = v.sqrt();
        Ok(self.compose(s, 0.5 / s, -0.25 / (s * s * s)))
    }

    /// Real cube root, defined for negative arguments as well; the argument
    /// value must be nonzero (the derivative is singular at zero).
    pub fn cbrt(&self) -> Result<Jet2, NumError> {
        let v = self.value;
        if v == 0.0 {
            return Err(NumError::CbrtDerivativeSingular);
        }
        let r = v.cbrt();
        let r2 = r * r;
        let r5 = r2 * r2 * r;
        Ok(self.compose(r, 1.0 / (3.0 * r2), -2.0 / (9.0 * r5)))
    }
}

fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}
