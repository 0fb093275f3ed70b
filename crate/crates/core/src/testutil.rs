//! Helpers for randomized verification sweeps: a tiny deterministic RNG and
//! generators for random polynomial operator fields and random prescribed
//! coefficient triples. Used by the test suites; kept dependency-free.

use num_rational::BigRational;

use crate::expr::{Expr, ParamEnv};
use crate::nijenhuis::{OperatorField, PrescribedField};
use crate::sample::SampleBox;

/// SplitMix64: tiny, seedable, and good enough for sweep generation.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Exact-rational constant from an `f64` (every finite double is a dyadic
/// rational).
pub fn const_from_f64(v: f64) -> Expr {
    Expr::Const(BigRational::from_float(v).expect("finite float"))
}

fn monomial(coeff: f64, vars: &[usize]) -> Expr {
    let mut e = const_from_f64(coeff);
    for &v in vars {
        e = e.mul(Expr::Var(v));
    }
    e
}

/// Random scalar polynomial of total degree at most 2 in `dim` variables,
/// with coefficients uniform in `[-bound, bound]`.
pub fn random_quadratic(rng: &mut SplitMix64, dim: usize, bound: f64) -> Expr {
    let mut e = monomial(rng.uniform(-bound, bound), &[]);
    for i in 0..dim {
        e = e.add(monomial(rng.uniform(-bound, bound), &[i]));
    }
    for i in 0..dim {
        for j in i..dim {
            e = e.add(monomial(rng.uniform(-bound, bound), &[i, j]));
        }
    }
    e
}

fn var_names(dim: usize) -> Vec<String> {
    ["x", "y", "z", "u", "v", "w"][..dim]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Random operator field with degree-≤2 polynomial entries bounded by 1, on
/// the default half-cube domain.
pub fn random_polynomial_field(rng: &mut SplitMix64, dim: usize) -> OperatorField {
    let entries: Vec<Expr> = (0..dim * dim)
        .map(|_| random_quadratic(rng, dim, 1.0))
        .collect();
    OperatorField::new(
        dim,
        var_names(dim),
        ParamEnv::new(),
        entries,
        SampleBox::cube(0.5, dim),
        vec![],
    )
    .expect("generated field is well-formed")
}

pub fn random_point(rng: &mut SplitMix64, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.uniform(-half, half)).collect()
}

/// Random prescribed coefficient triple: affine functions plus one quadratic
/// term, the generic input of the companion-conjugation constructor.
pub fn random_prescribed_field(rng: &mut SplitMix64) -> PrescribedField {
    let dim = 3;
    let sigma: Vec<Expr> = (0..dim)
        .map(|_| {
            let mut e = monomial(rng.uniform(-0.5, 0.5), &[]);
            for i in 0..dim {
                e = e.add(monomial(rng.uniform(-1.0, 1.0), &[i]));
            }
            let q = rng.index(dim);
            e.add(monomial(rng.uniform(-0.5, 0.5), &[q, q]))
        })
        .collect();
    PrescribedField::new(sigma, var_names(dim), ParamEnv::new())
        .expect("generated coefficients are well-formed")
}

/// Symbolic conjugation `P⁻¹ L P` of an operator field by a constant
/// invertible matrix, for similarity-invariance checks.
pub fn conjugate_field(field: &OperatorField, p: &crate::linalg::Mat) -> OperatorField {
    let n = field.dim();
    let pinv = p.inverse().expect("conjugating matrix must be invertible");
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc: Option<Expr> = None;
            for a in 0..n {
                for b in 0..n {
                    let coeff = pinv.at(i, a) * p.at(b, j);
                    if coeff == 0.0 {
                        continue;
                    }
                    let term = const_from_f64(coeff).mul(field.entry(a, b).clone());
                    acc = Some(match acc {
                        None => term,
                        Some(prev) => prev.add(term),
                    });
                }
            }
            entries.push(acc.unwrap_or_else(|| Expr::int(0)));
        }
    }
    OperatorField::new(
        n,
        field.vars().to_vec(),
        field.params().clone(),
        entries,
        field.domain().clone(),
        field.excluded().to_vec(),
    )
    .expect("conjugated field is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rng_is_deterministic() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..10 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let v = a.next_f64();
        assert!((0.0..1.0).contains(&v));
    }

    #[test]
    fn random_field_evaluates() {
        let mut rng = SplitMix64::new(7);
        let f = random_polynomial_field(&mut rng, 3);
        let p = random_point(&mut rng, 3, 0.5);
        f.values_at(&p).unwrap();
        f.torsion_coordinate(&p).unwrap();
    }

    #[test]
    fn exact_constant_roundtrip() {
        let e = const_from_f64(0.1);
        let v = crate::expr::eval_scalar(&e, &[], &ParamEnv::new()).unwrap();
        assert_eq!(v, 0.1);
    }
}
