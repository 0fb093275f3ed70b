//! Small dense real matrices: products, determinant, inverse, characteristic
//! polynomial, numerical rank and kernel, linear solves.
//!
//! The characteristic polynomial is computed with the Faddeev–LeVerrier
//! recurrence, which is exact in exact arithmetic, needs no eigenvalue
//! iteration, and — crucially — runs over any carrier implementing [`Ring`].
//! Running it over [`Jet2`](crate::jet::Jet2) entries yields exact gradients
//! and Hessians of every coefficient `σ_i`.
//!
//! Rank and kernel use Gaussian elimination with complete pivoting and a
//! relative pivot threshold; no singular values are computed, so results are
//! deterministic and dependency-free.

use thiserror::Error;

use crate::jet::Jet2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    /// The matrix is singular (or numerically indistinguishable from
    /// singular) at the working threshold.
    #[error("matrix is numerically singular (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    Singular { pivot: f64, threshold: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Relative pivot threshold below which a square solve is treated as
/// degenerate (scaled by the largest matrix entry).
pub const SOLVE_DEGENERACY: f64 = 1e-12;

/// Carrier for the generic characteristic-polynomial recurrence: a
/// commutative ring in which division by nonzero integer constants is exact.
pub trait Ring: Clone {
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Division by a nonzero integer constant.
    fn div_int(&self, k: i64) -> Self;
}

impl Ring for f64 {
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div_int(&self, k: i64) -> Self {
        self / (k as f64)
    }
}

impl Ring for Jet2 {
    fn add(&self, rhs: &Self) -> Self {
        Jet2::add(self, rhs)
    }
    fn sub(&self, rhs: &Self) -> Self {
        Jet2::sub(self, rhs)
    }
    fn mul(&self, rhs: &Self) -> Self {
        Jet2::mul(self, rhs)
    }
    fn neg(&self) -> Self {
        Jet2::neg(self)
    }
    fn div_int(&self, k: i64) -> Self {
        self.scale(1.0 / (k as f64))
    }
}

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        Mat { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.at(i, j));
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.at(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "vector length must equal column count");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        )
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::new(
            self.rows,
            self.cols,
            self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat::new(self.rows, self.cols, self.data.iter().map(|a| a * s).collect())
    }

    /// Determinant via partially pivoted elimination. Total: a column with no
    /// usable pivot simply yields zero.
    pub fn det(&self) -> f64 {
        assert!(self.is_square(), "determinant needs a square matrix");
        let n = self.rows;
        let mut w = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if w[r * n + col].abs() > w[piv * n + col].abs() {
                    piv = r;
                }
            }
            if w[piv * n + col] == 0.0 {
                return 0.0;
            }
            if piv != col {
                for j in 0..n {
                    w.swap(col * n + j, piv * n + j);
                }
                det = -det;
            }
            let p = w[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = w[r * n + col] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    w[r * n + j] -= f * w[col * n + j];
                }
            }
        }
        det
    }

    /// Solve `self · x = rhs` for a single right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let m = Mat::new(rhs.len(), 1, rhs.to_vec());
        Ok(self.solve_mat(&m)?.data)
    }

    /// Solve `self · X = rhs` with partial pivoting. Pivots below
    /// `SOLVE_DEGENERACY · max|entry|` abort with [`LinalgError::Singular`];
    /// this is the expected signal when evaluating at a differential
    /// singularity where the Jacobian degenerates.
    pub fn solve_mat(&self, rhs: &Mat) -> Result<Mat, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension("solve needs a square matrix".into()));
        }
        if rhs.rows != self.rows {
            return Err(LinalgError::Dimension(
                "right-hand side row count must match".into(),
            ));
        }
        let n = self.rows;
        let k = rhs.cols;
        let threshold = SOLVE_DEGENERACY * self.max_abs();
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            let pval = a[piv * n + col].abs();
            if pval <= threshold {
                return Err(LinalgError::Singular {
                    pivot: pval,
                    threshold,
                });
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                for j in 0..k {
                    b.swap(col * k + j, piv * k + j);
                }
            }
            let p = a[col * n + col];
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col] / p;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                for j in 0..k {
                    b[r * k + j] -= f * b[col * k + j];
                }
            }
        }
        for i in 0..n {
            let p = a[i * n + i];
            for j in 0..k {
                b[i * k + j] /= p;
            }
        }
        Ok(Mat::new(n, k, b))
    }

    pub fn inverse(&self) -> Result<Mat, LinalgError> {
        self.solve_mat(&Mat::identity(self.rows))
    }

    /// Number of pivots above `tol_rel ·` (largest pivot) under
    /// complete-pivot elimination.
    pub fn numerical_rank(&self, tol_rel: f64) -> usize {
        self.rank_details(tol_rel).rank
    }

    /// Rank plus the pivot magnitudes that determined it, for condition
    /// diagnostics.
    pub fn rank_details(&self, tol_rel: f64) -> RankDetails {
        let elim = complete_eliminate(self);
        let max_piv = elim.pivots.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = tol_rel * max_piv;
        let rank = elim.pivots.iter().filter(|p| **p > cutoff).count();
        RankDetails {
            rank,
            pivots: elim.pivots,
            cutoff,
        }
    }

    /// Orthonormal basis of the numerical nullspace. Vectors are unit-norm,
    /// pairwise orthogonal, with sign fixed so the first component of
    /// magnitude above 1e-12 is positive.
    pub fn kernel_basis(&self, tol_rel: f64) -> Vec<Vec<f64>> {
        let n_cols = self.cols;
        let elim = complete_eliminate(self);
        let max_piv = elim.pivots.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = tol_rel * max_piv;
        let rank = elim.pivots.iter().filter(|p| **p > cutoff).count();
        let u = &elim.u;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n_cols - rank);
        for free in rank..n_cols {
            // Solve the leading triangular block with a single free column set
            // to one, in permuted coordinates.
            let mut w = vec![0.0; n_cols];
            w[free] = 1.0;
            for k in (0..rank).rev() {
                let mut s = 0.0;
                for j in k + 1..n_cols {
                    s += u[k * n_cols + j] * w[j];
                }
                w[k] = -s / u[k * n_cols + k];
            }
            let mut x = vec![0.0; n_cols];
            for k in 0..n_cols {
                x[elim.col_perm[k]] = w[k];
            }
            // Modified Gram-Schmidt against the vectors already collected.
            for b in &basis {
                let d: f64 = x.iter().zip(b).map(|(a, c)| a * c).sum();
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= d * bi;
                }
            }
            let norm: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            for xi in x.iter_mut() {
                *xi /= norm;
            }
            if let Some(lead) = x.iter().find(|v| v.abs() > 1e-12) {
                if *lead < 0.0 {
                    for xi in x.iter_mut() {
                        *xi = -*xi;
                    }
                }
            }
            basis.push(x);
        }
        basis
    }
}

#[derive(Debug, Clone)]
pub struct RankDetails {
    pub rank: usize,
    /// Pivot magnitudes in elimination order.
    pub pivots: Vec<f64>,
    /// The effective cutoff `tol_rel · max_pivot` used for counting.
    pub cutoff: f64,
}

struct CompleteElim {
    u: Vec<f64>,
    col_perm: Vec<usize>,
    pivots: Vec<f64>,
}

/// Gaussian elimination with complete pivoting (row and column swaps), the
/// deterministic backbone of rank and kernel computations.
fn complete_eliminate(m: &Mat) -> CompleteElim {
    let (rows, cols) = (m.rows, m.cols);
    let mut u = m.data.clone();
    let mut col_perm: Vec<usize> = (0..cols).collect();
    let mut pivots = Vec::new();
    let steps = rows.min(cols);
    for s in 0..steps {
        let mut best = (s, s);
        let mut best_val = 0.0f64;
        for i in s..rows {
            for j in s..cols {
                let v = u[i * cols + j].abs();
                if v > best_val {
                    best_val = v;
                    best = (i, j);
                }
            }
        }
        if best_val == 0.0 {
            break;
        }
        let (bi, bj) = best;
        if bi != s {
            for j in 0..cols {
                u.swap(s * cols + j, bi * cols + j);
            }
        }
        if bj != s {
            for i in 0..rows {
                u.swap(i * cols + s, i * cols + bj);
            }
            col_perm.swap(s, bj);
        }
        let p = u[s * cols + s];
        pivots.push(p.abs());
        for r in s + 1..rows {
            let f = u[r * cols + s] / p;
            if f == 0.0 {
                continue;
            }
            for j in s..cols {
                u[r * cols + j] -= f * u[s * cols + j];
            }
        }
    }
    CompleteElim { u, col_perm, pivots }
}

/// Coefficients `(σ_1, …, σ_n)` of `χ(t) = det(tI − L) = tⁿ + σ₁tⁿ⁻¹ + … + σₙ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub coeffs: Vec<f64>,
}

impl CharPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        CharPoly { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// 1-based coefficient accessor: `sigma(1) = σ₁ = −trace`.
    pub fn sigma(&self, i: usize) -> f64 {
        self.coeffs[i - 1]
    }

    /// Evaluate `χ(t)`.
    pub fn eval_at(&self, t: f64) -> f64 {
        let mut acc = 1.0;
        for c in &self.coeffs {
            acc = acc * t + c;
        }
        acc
    }
}

/// Faddeev–LeVerrier over an arbitrary [`Ring`] carrier. `entries` is a
/// row-major `n × n` matrix; the result is `(σ_1, …, σ_n)`.
pub fn charpoly_generic<T: Ring>(n: usize, entries: &[T]) -> Vec<T> {
    assert_eq!(entries.len(), n * n, "entry count must equal n*n");
    assert!(n >= 1);
    let trace = |m: &[T]| -> T {
        let mut t = m[0].clone();
        for i in 1..n {
            t = t.add(&m[i * n + i]);
        }
        t
    };
    let matmul = |a: &[T], b: &[T]| -> Vec<T> {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut s = a[i * n].mul(&b[j]);
                for k in 1..n {
                    s = s.add(&a[i * n + k].mul(&b[k * n + j]));
                }
                out.push(s);
            }
        }
        out
    };

    let mut a: Vec<T> = entries.to_vec();
    let mut coeffs = Vec::with_capacity(n);
    let mut c = trace(&a).neg();
    coeffs.push(c.clone());
    for k in 2..=n {
        let mut b = a.clone();
        for i in 0..n {
            b[i * n + i] = b[i * n + i].add(&c);
        }
        a = matmul(entries, &b);
        c = trace(&a).div_int(k as i64).neg();
        coeffs.push(c.clone());
    }
    coeffs
}

/// Characteristic polynomial of a square matrix (`n ≤ 16`).
pub fn charpoly(m: &Mat) -> CharPoly {
    assert!(m.is_square(), "characteristic polynomial needs a square matrix");
    assert!(m.rows() <= 16, "charpoly supports n <= 16");
    CharPoly::new(charpoly_generic(m.rows(), m.data()))
}

/// Companion matrix realizing `χ`: first column `(−σ₁, …, −σₙ)`, ones on the
/// superdiagonal, zeros elsewhere.
pub fn companion(sigma: &CharPoly) -> Mat {
    let n = sigma.dim();
    let mut s = Mat::zeros(n, n);
    for i in 0..n {
        s.set(i, 0, -sigma.coeffs[i]);
        if i + 1 < n {
            s.set(i, i + 1, 1.0);
        }
    }
    s
}

/// Roots of a real monic cubic, from the closed-form solution.
#[derive(Debug, Clone, PartialEq)]
pub enum CubicRoots {
    /// Three real roots (with multiplicity), sorted ascending.
    ThreeReal([f64; 3]),
    /// One real root and a complex-conjugate pair `complex_re ± i·complex_im`
    /// with `complex_im > 0`.
    OneReal {
        real: f64,
        complex_re: f64,
        complex_im: f64,
    },
}

impl CubicRoots {
    /// All real roots (three, or one).
    pub fn real_roots(&self) -> Vec<f64> {
        match self {
            CubicRoots::ThreeReal(r) => r.to_vec(),
            CubicRoots::OneReal { real, .. } => vec![*real],
        }
    }
}

/// Solve `t³ + a t² + b t + c = 0` in closed form (trigonometric /
/// Cardano branches); no iteration.
pub fn solve_cubic(a: f64, b: f64, c: f64) -> CubicRoots {
    // Depressed cubic s³ + p s + q via t = s − a/3.
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let scale = 1.0f64.max(4.0 * p.abs().powi(3) + 27.0 * q * q);
    if disc >= -1e-12 * scale {
        // Three real roots (allowing a rounding-level negative discriminant
        // at multiple roots).
        let mut roots = if p >= 0.0 {
            // disc >= 0 with p >= 0 forces p ≈ 0, q ≈ 0: a triple root.
            let s = (-q).cbrt();
            [s, s, s]
        } else {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
            let phi = arg.acos();
            [
                m * (phi / 3.0).cos(),
                m * (phi / 3.0 - 2.0 * std::f64::consts::PI / 3.0).cos(),
                m * (phi / 3.0 - 4.0 * std::f64::consts::PI / 3.0).cos(),
            ]
        };
        for r in roots.iter_mut() {
            *r += shift;
        }
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        CubicRoots::ThreeReal(roots)
    } else {
        let d = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        let r = (-q / 2.0 + d).cbrt() + (-q / 2.0 - d).cbrt();
        let im = (3.0 * r * r + 4.0 * p).sqrt() / 2.0;
        CubicRoots::OneReal {
            real: r + shift,
            complex_re: -r / 2.0 + shift,
            complex_im: im,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn charpoly_of_zero_matrix() {
        let z = Mat::zeros(3, 3);
        assert_eq!(charpoly(&z).coeffs, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn companion_realizes_its_polynomial() {
        let sigma = CharPoly::new(vec![1.0, 2.0, 3.0]);
        let s = companion(&sigma);
        assert_eq!(s.at(0, 0), -1.0);
        assert_eq!(s.at(1, 0), -2.0);
        assert_eq!(s.at(2, 0), -3.0);
        assert_eq!(s.at(0, 1), 1.0);
        assert_eq!(s.at(1, 2), 1.0);
        assert_eq!(s.at(2, 1), 0.0);
        let back = charpoly(&s);
        for (a, b) in back.coeffs.iter().zip(&sigma.coeffs) {
            assert!(close(*a, *b, 1e-14));
        }
    }

    #[test]
    fn nilpotent_shift_from_zero_sigma() {
        let s = companion(&CharPoly::new(vec![0.0, 0.0, 0.0]));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if j == i + 1 { 1.0 } else { 0.0 };
                assert_eq!(s.at(i, j), expect);
            }
        }
    }

    #[test]
    fn t3_origin_example() {
        // [[−1,0,0],[0,0,1],[0,0,0]] has χ = t³ + t² = t²(t+1).
        let m = Mat::from_rows(&[
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ]);
        let cp = charpoly(&m);
        assert_eq!(cp.coeffs, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rank_of_identity() {
        let i3 = Mat::identity(3);
        assert_eq!(i3.numerical_rank(1e-8), 3);
        assert!(i3.kernel_basis(1e-8).is_empty());
    }

    #[test]
    fn rank_one_proportional_rows() {
        let m = Mat::from_rows(&[
            vec![-1.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
        ]);
        let d = m.rank_details(1e-8);
        assert_eq!(d.rank, 1);
        let kernel = m.kernel_basis(1e-8);
        assert_eq!(kernel.len(), 2);
        for v in &kernel {
            let img = m.matvec(v);
            assert!(img.iter().all(|x| x.abs() < 1e-12));
            let norm: f64 = v.iter().map(|a| a * a).sum::<f64>();
            assert!(close(norm, 1.0, 1e-12));
        }
        let dot: f64 = kernel[0].iter().zip(&kernel[1]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
    }

    #[test]
    fn kernel_of_zero_matrix_is_full_space() {
        let z = Mat::zeros(2, 3);
        let kernel = z.kernel_basis(1e-8);
        assert_eq!(kernel.len(), 3);
    }

    #[test]
    fn block_jacobian_inverse_first_row() {
        // [[fx,fy,fz],[0,1,0],[0,0,1]]⁻¹ has first row (1/fx, −fy/fx, −fz/fx).
        let (fx, fy, fz) = (2.0, -0.7, 0.3);
        let j = Mat::from_rows(&[vec![fx, fy, fz], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let inv = j.inverse().unwrap();
        assert!(close(inv.at(0, 0), 1.0 / fx, 1e-12));
        assert!(close(inv.at(0, 1), -fy / fx, 1e-12));
        assert!(close(inv.at(0, 2), -fz / fx, 1e-12));
        let prod = j.matmul(&inv);
        for i in 0..3 {
            for k in 0..3 {
                let expect = if i == k { 1.0 } else { 0.0 };
                assert!(close(prod.at(i, k), expect, 1e-12));
            }
        }
    }

    #[test]
    fn singular_when_leading_entry_vanishes() {
        let j = Mat::from_rows(&[
            vec![0.0, -0.7, 0.3],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert!(matches!(j.inverse(), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn inverse_of_identity() {
        let inv = Mat::identity(4).inverse().unwrap();
        assert_eq!(inv, Mat::identity(4));
    }

    #[test]
    fn cubic_three_real() {
        // t³ − t = t(t−1)(t+1)
        let roots = solve_cubic(0.0, -1.0, 0.0);
        match roots {
            CubicRoots::ThreeReal(r) => {
                assert!(close(r[0], -1.0, 1e-12));
                assert!(r[1].abs() < 1e-12);
                assert!(close(r[2], 1.0, 1e-12));
            }
            _ => panic!("expected three real roots"),
        }
    }

    #[test]
    fn cubic_complex_pair() {
        // t³ + 1 has roots −1 and e^{±iπ/3}.
        match solve_cubic(0.0, 0.0, 1.0) {
            CubicRoots::OneReal {
                real,
                complex_re,
                complex_im,
            } => {
                assert!(close(real, -1.0, 1e-12));
                assert!(close(complex_re, 0.5, 1e-12));
                assert!(close(complex_im, 3.0f64.sqrt() / 2.0, 1e-12));
            }
            _ => panic!("expected one real root"),
        }
    }

    #[test]
    fn cubic_double_root() {
        // t²(t+1): coefficients (1, 0, 0).
        match solve_cubic(1.0, 0.0, 0.0) {
            CubicRoots::ThreeReal(r) => {
                assert!(close(r[0], -1.0, 1e-9));
                assert!(r[1].abs() < 1e-9);
                assert!(r[2].abs() < 1e-9);
            }
            _ => panic!("expected real roots"),
        }
    }

    #[test]
    fn cubic_triple_root() {
        // (t−2)³ = t³ − 6t² + 12t − 8
        match solve_cubic(-6.0, 12.0, -8.0) {
            CubicRoots::ThreeReal(r) => {
                for x in r {
                    assert!(close(x, 2.0, 1e-5));
                }
            }
            _ => panic!("expected real roots"),
        }
    }

    /// Independent characteristic-polynomial oracle: evaluate det(tI − M) at
    /// n+1 integer nodes and interpolate (Newton divided differences). Shares
    /// nothing with the Faddeev–LeVerrier path except the determinant.
    fn charpoly_interpolation_oracle(m: &Mat) -> Vec<f64> {
        let n = m.rows();
        let ts: Vec<f64> = (0..=n).map(|k| k as f64).collect();
        let vals: Vec<f64> = ts
            .iter()
            .map(|t| {
                let mut a = m.scale(-1.0);
                for i in 0..n {
                    a.set(i, i, a.at(i, i) + t);
                }
                a.det()
            })
            .collect();
        // Divided differences -> Newton form -> monomial coefficients.
        let mut dd = vals.clone();
        for level in 1..=n {
            for i in (level..=n).rev() {
                dd[i] = (dd[i] - dd[i - 1]) / (ts[i] - ts[i - level]);
            }
        }
        // poly(t) = Σ dd[k] Π_{j<k}(t − ts[j]); expand to monomials.
        let mut coeffs = vec![0.0; n + 1]; // ascending powers
        let mut basis = vec![0.0; n + 1];
        basis[0] = 1.0;
        for (k, d) in dd.iter().enumerate() {
            for j in 0..=n {
                coeffs[j] += d * basis[j];
            }
            if k < n {
                // basis *= (t − ts[k])
                let mut next = vec![0.0; n + 1];
                for j in 0..n {
                    next[j + 1] += basis[j];
                    next[j] -= ts[k] * basis[j];
                }
                basis = next;
            }
        }
        // Convert to (σ1..σn): coeffs[n] is the leading 1.
        (1..=n).map(|i| coeffs[n - i]).collect()
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = Mat> {
        proptest::collection::vec(-1.0f64..1.0, n * n).prop_map(move |d| Mat::new(n, n, d))
    }

    proptest! {
        #[test]
        fn charpoly_matches_interpolation_oracle(m in arb_matrix(3)) {
            let fl = charpoly(&m).coeffs;
            let oracle = charpoly_interpolation_oracle(&m);
            for (a, b) in fl.iter().zip(&oracle) {
                prop_assert!(close(*a, *b, 1e-10));
            }
        }

        #[test]
        fn charpoly_satisfies_newton_identities(m in arb_matrix(4)) {
            // p_k + σ1 p_{k-1} + … + σ_{k-1} p_1 + k σ_k = 0 for power sums
            // p_k = tr(M^k).
            let n = 4;
            let sigma = charpoly(&m).coeffs;
            let mut powers = vec![m.clone()];
            for _ in 1..n {
                let last = powers.last().unwrap();
                powers.push(last.matmul(&m));
            }
            let tr = |a: &Mat| (0..n).map(|i| a.at(i, i)).sum::<f64>();
            let p: Vec<f64> = powers.iter().map(tr).collect();
            for k in 1..=n {
                let mut acc = p[k - 1];
                for i in 1..k {
                    acc += sigma[i - 1] * p[k - i - 1];
                }
                acc += k as f64 * sigma[k - 1];
                prop_assert!(acc.abs() <= 1e-10 * (1.0 + p[k-1].abs()));
            }
        }

        #[test]
        fn charpoly_is_similarity_invariant(m in arb_matrix(3), off in proptest::collection::vec(-0.3f64..0.3, 9)) {
            // P = I + small off-diagonal perturbation stays invertible.
            let mut p = Mat::new(3, 3, off);
            for i in 0..3 {
                p.set(i, i, 1.0);
            }
            let pinv = p.inverse().unwrap();
            let conj = pinv.matmul(&m).matmul(&p);
            let a = charpoly(&m).coeffs;
            let b = charpoly(&conj).coeffs;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(close(*x, *y, 1e-9));
            }
        }

        #[test]
        fn companion_roundtrip_is_idempotent(sig in proptest::collection::vec(-2.0f64..2.0, 3)) {
            let s1 = companion(&CharPoly::new(sig));
            let s2 = companion(&charpoly(&s1));
            for (a, b) in s1.data().iter().zip(s2.data()) {
                prop_assert!(close(*a, *b, 1e-12));
            }
        }

        #[test]
        fn solve_then_multiply_recovers_rhs(m in arb_matrix(3), rhs in proptest::collection::vec(-1.0f64..1.0, 3)) {
            // Skip near-singular draws.
            prop_assume!(m.det().abs() > 1e-3);
            let x = m.solve(&rhs).unwrap();
            let back = m.matvec(&x);
            for (a, b) in back.iter().zip(&rhs) {
                prop_assert!(close(*a, *b, 1e-9));
            }
        }

        #[test]
        fn cubic_roots_satisfy_polynomial(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
            let eval = |t: f64| t * t * t + a * t * t + b * t + c;
            match solve_cubic(a, b, c) {
                CubicRoots::ThreeReal(r) => {
                    for t in r {
                        prop_assert!(eval(t).abs() < 1e-7 * (1.0 + t.abs().powi(3)));
                    }
                }
                CubicRoots::OneReal { real, complex_re, complex_im } => {
                    prop_assert!(eval(real).abs() < 1e-7 * (1.0 + real.abs().powi(3)));
                    // Conjugate pair satisfies the quadratic factor
                    // t² − 2·re·t + (re² + im²).
                    let prod_all = -c; // product of roots = −c
                    let pair_modulus = complex_re * complex_re + complex_im * complex_im;
                    prop_assert!(close(real * pair_modulus, prod_all, 1e-7));
                }
            }
        }
    }
}
