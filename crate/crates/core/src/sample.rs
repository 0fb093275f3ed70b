//! Quasi-random (low-discrepancy) sampling of axis-aligned boxes.
//!
//! Verification sweeps use a Halton sequence rather than pseudo-random draws:
//! coverage is better at small point counts and a run is reproducible from
//! `(seed, count)` alone. The seed selects the offset into the sequence.

use crate::expr::{eval_scalar, EvalError, Expr, ParamEnv};

/// Axis-aligned sampling box with strictly positive extent in every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl SampleBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Self {
        assert_eq!(min.len(), max.len(), "box bounds must have equal length");
        assert!(!min.is_empty(), "box must have at least one axis");
        for (lo, hi) in min.iter().zip(&max) {
            assert!(lo < hi, "box must be nondegenerate: {lo} >= {hi}");
        }
        SampleBox { min, max }
    }

    /// The centered cube `[-half, half]^n`.
    pub fn cube(half: f64, n: usize) -> Self {
        SampleBox::new(vec![-half; n], vec![half; n])
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn min(&self) -> &[f64] {
        &self.min
    }

    pub fn max(&self) -> &[f64] {
        &self.max
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(x, (lo, hi))| x >= lo && x <= hi)
    }

    fn map_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(t, (lo, hi))| lo + t * (hi - lo))
            .collect()
    }
}

const HALTON_BASES: [u64; 6] = [2, 3, 5, 7, 11, 13];

/// Radical-inverse function: digit-reversed `index` in the given base,
/// mapped into (0, 1).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * f;
        index /= base;
        f /= base as f64;
    }
    result
}

fn halton_point(index: u64, dim: usize) -> Vec<f64> {
    assert!(
        dim <= HALTON_BASES.len(),
        "sampling supports up to {} dimensions",
        HALTON_BASES.len()
    );
    (0..dim)
        .map(|d| radical_inverse(index, HALTON_BASES[d]))
        .collect()
}

/// Draw `count` Halton points in the box, skipping points within `margin` of
/// any excluded zero set (|e(p)| <= margin rejects p). Points where an
/// excluded expression itself fails to evaluate are also skipped.
pub fn sample_points(
    bx: &SampleBox,
    excluded: &[Expr],
    env: &ParamEnv,
    count: usize,
    seed: u64,
    margin: f64,
) -> Result<Vec<Vec<f64>>, EvalError> {
    let mut out = Vec::with_capacity(count);
    let mut index = seed;
    let mut attempts = 0usize;
    let budget = count.saturating_mul(1000).max(1000);
    while out.len() < count {
        index += 1;
        attempts += 1;
        if attempts > budget {
            // The exclusion sets are zero-measure by contract; running out of
            // attempts means the configuration is unusable.
            break;
        }
        let p = bx.map_unit(&halton_point(index, bx.dim()));
        let mut keep = true;
        for e in excluded {
            match eval_scalar(e, &p, env) {
                Ok(v) if v.abs() > margin => {}
                _ => {
                    keep = false;
                    break;
                }
            }
        }
        if keep {
            out.push(p);
        }
    }
    Ok(out)
}
