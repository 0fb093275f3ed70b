//! Operator fields, Nijenhuis torsion, characteristic invariants, and the
//! companion-conjugation constructor.
//!
//! The torsion is computed through two deliberately independent code paths:
//!
//! * [`OperatorField::torsion_coordinate`] evaluates the index expansion
//!   `N^k_{ij} = L^a_i ∂_a L^k_j − L^a_j ∂_a L^k_i − L^k_a (∂_i L^a_j − ∂_j L^a_i)`,
//!   the specialization of the bracket definition to coordinate fields
//!   `u = ∂_i`, `v = ∂_j` (for which `[u, v] = 0`).
//! * [`OperatorField::torsion_oracle`] assembles the definition literally:
//!   it forms the vector fields `Lu`, `Lv` as expression vectors, evaluates
//!   the Lie brackets `[u,v]`, `[Lu,Lv]`, `[Lu,v]`, `[u,Lv]` through jet
//!   derivatives, and sums `L²[u,v] + [Lu,Lv] − L[Lu,v] − L[u,Lv]`.
//!
//! The two paths share nothing but jet evaluation; their agreement is the
//! main internal cross-check (an index expansion is the one place a sign
//! error can hide).
//!
//! Invariants `σ_i` come from running the characteristic-polynomial
//! recurrence over the jet carrier, so the Jacobian `J = (∂σ_i/∂x^j)` and the
//! per-invariant Hessians are exact, not finite differences.

use thiserror::Error;

use crate::expr::{eval_jet2, eval_scalar, EvalError, Expr, ParamEnv};
use crate::jet::Jet2;
use crate::linalg::{charpoly_generic, companion, CharPoly, LinalgError, Mat};
use crate::sample::SampleBox;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid operator field: {0}")]
    Invalid(String),
}

/// An `n × n` matrix of scalar-field expressions together with its variable
/// names, parameter bindings, and declared sample domain.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorField {
    dim: usize,
    vars: Vec<String>,
    params: ParamEnv,
    entries: Vec<Expr>,
    domain: SampleBox,
    excluded: Vec<Expr>,
}

impl OperatorField {
    pub fn new(
        dim: usize,
        vars: Vec<String>,
        params: ParamEnv,
        entries: Vec<Expr>,
        domain: SampleBox,
        excluded: Vec<Expr>,
    ) -> Result<Self, FieldError> {
        if vars.len() != dim {
            return Err(FieldError::Invalid(format!(
                "expected {dim} variable names, got {}",
                vars.len()
            )));
        }
        if entries.len() != dim * dim {
            return Err(FieldError::Invalid(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if domain.dim() != dim {
            return Err(FieldError::Invalid(
                "domain box dimension must match the operator dimension".into(),
            ));
        }
        for e in entries.iter().chain(&excluded) {
            if let Some(i) = e.max_var_index() {
                if i >= dim {
                    return Err(FieldError::Invalid(format!(
                        "entry references variable index {i}, dimension is {dim}"
                    )));
                }
            }
            for name in e.param_names() {
                if params.get(&name).is_none() {
                    return Err(FieldError::Invalid(format!(
                        "parameter `{name}` is not bound"
                    )));
                }
            }
        }
        Ok(OperatorField {
            dim,
            vars,
            params,
            entries,
            domain,
            excluded,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn params(&self) -> &ParamEnv {
        &self.params
    }

    pub fn domain(&self) -> &SampleBox {
        &self.domain
    }

    pub fn excluded(&self) -> &[Expr] {
        &self.excluded
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.dim + j]
    }

    /// A copy of the field with `delta` added to entry `(i, j)`; used to
    /// build perturbed negative controls.
    pub fn with_entry_added(&self, i: usize, j: usize, delta: Expr) -> OperatorField {
        let mut f = self.clone();
        let idx = i * self.dim + j;
        let old = f.entries[idx].clone();
        f.entries[idx] = Expr::Add(Box::new(old), Box::new(delta));
        f
    }

    /// Pointwise matrix of entry values.
    pub fn values_at(&self, p: &[f64]) -> Result<Mat, FieldError> {
        let mut data = Vec::with_capacity(self.dim * self.dim);
        for e in &self.entries {
            data.push(eval_scalar(e, p, &self.params)?);
        }
        Ok(Mat::new(self.dim, self.dim, data))
    }

    /// All entries as 2-jets at `p`.
    pub fn jets_at(&self, p: &[f64]) -> Result<Vec<Jet2>, FieldError> {
        self.entries
            .iter()
            .map(|e| eval_jet2(e, p, &self.params).map_err(FieldError::from))
            .collect()
    }

    /// Largest magnitude among entry values and entry first derivatives at
    /// `p`; the scale factor for torsion thresholds.
    pub fn scale_at(&self, p: &[f64]) -> Result<f64, FieldError> {
        let jets = self.jets_at(p)?;
        Ok(jets.iter().fold(0.0, |m, j| m.max(j.max_abs_order1())))
    }

    /// Torsion via the coordinate index expansion (first derivatives only).
    pub fn torsion_coordinate(&self, p: &[f64]) -> Result<TorsionTensor, FieldError> {
        let jets = self.jets_at(p)?;
        let n = self.dim;
        let values = Mat::new(n, n, jets.iter().map(|j| j.value()).collect());
        let derivs: Vec<Mat> = (0..n)
            .map(|a| Mat::new(n, n, jets.iter().map(|j| j.grad_at(a)).collect()))
            .collect();
        Ok(torsion_from_first_order(&values, &derivs))
    }

    /// Torsion by literal evaluation of
    /// `N_L(u,v) = L²[u,v] + [Lu,Lv] − L[Lu,v] − L[u,Lv]` on coordinate
    /// fields. Independent of [`Self::torsion_coordinate`]; shares only jet
    /// evaluation.
    pub fn torsion_oracle(&self, p: &[f64]) -> Result<TorsionTensor, FieldError> {
        self.oracle_plan().torsion_at(p)
    }

    /// Precompute the symbolic vector fields used by the oracle path so that
    /// sweeps over many points do not rebuild them.
    pub fn oracle_plan(&self) -> OraclePlan<'_> {
        let n = self.dim;
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let u = basis_field(i, n);
                let v = basis_field(j, n);
                let lu = self.apply_symbolic(&u);
                let lv = self.apply_symbolic(&v);
                pairs.push(PairPlan { i, j, u, v, lu, lv });
            }
        }
        OraclePlan { field: self, pairs }
    }

    /// The expression vector `(L w)^a = Σ_b L^a_b w^b`.
    fn apply_symbolic(&self, w: &[Expr]) -> Vec<Expr> {
        let n = self.dim;
        (0..n)
            .map(|a| {
                let mut acc: Option<Expr> = None;
                for b in 0..n {
                    let term = Expr::Mul(
                        Box::new(self.entry(a, b).clone()),
                        Box::new(w[b].clone()),
                    );
                    acc = Some(match acc {
                        None => term,
                        Some(prev) => Expr::Add(Box::new(prev), Box::new(term)),
                    });
                }
                acc.expect("dimension is at least one")
            })
            .collect()
    }

    /// Characteristic coefficients with exact first and second derivatives,
    /// from the characteristic-polynomial recurrence over jets.
    pub fn invariants_at(&self, p: &[f64]) -> Result<InvariantData, FieldError> {
        let jets = self.jets_at(p)?;
        let n = self.dim;
        let sigma_jets = charpoly_generic(n, &jets);
        Ok(InvariantData::from_sigma_jets(p, &sigma_jets))
    }

    /// Max-norm residual of the coefficient-wise covector identity
    ///
    /// ```text
    /// Lᵀ ∇σ_i = ∇σ_{i+1} − σ_i ∇σ_1,   i = 1..n,  ∇σ_{n+1} := 0,
    /// ```
    ///
    /// the coefficient expansion of `L*(dχ(t)) = t dχ(t) + χ(t) d tr L`.
    /// Near-zero residual at sampled points certifies the identity.
    pub fn covector_identity_residual(&self, p: &[f64]) -> Result<f64, FieldError> {
        let inv = self.invariants_at(p)?;
        let lt = self.values_at(p)?.transpose();
        Ok(covector_residual_from_parts(&lt, &inv))
    }
}

fn covector_residual_from_parts(lt: &Mat, inv: &InvariantData) -> f64 {
    let n = inv.dim();
    let mut worst = 0.0f64;
    let grad1: Vec<f64> = inv.jacobian.row(0).to_vec();
    for i in 0..n {
        let gi: Vec<f64> = inv.jacobian.row(i).to_vec();
        let lhs = lt.matvec(&gi);
        let sigma_i = inv.sigma.coeffs[i];
        for a in 0..n {
            let next = if i + 1 < n { inv.jacobian.at(i + 1, a) } else { 0.0 };
            let rhs = next - sigma_i * grad1[a];
            worst = worst.max((lhs[a] - rhs).abs());
        }
    }
    worst
}

/// Coordinate basis field `∂_i` as an expression vector.
fn basis_field(i: usize, n: usize) -> Vec<Expr> {
    (0..n)
        .map(|a| if a == i { Expr::int(1) } else { Expr::int(0) })
        .collect()
}

/// Value of the Lie bracket `[X, Y]^k = Σ_a (X^a ∂_a Y^k − Y^a ∂_a X^k)` at a
/// point, with all derivatives taken from jets of the component expressions.
pub fn lie_bracket_at(
    x: &[Expr],
    y: &[Expr],
    p: &[f64],
    env: &ParamEnv,
) -> Result<Vec<f64>, EvalError> {
    let n = x.len();
    assert_eq!(y.len(), n, "vector fields must have equal dimension");
    let jx: Vec<Jet2> = x.iter().map(|e| eval_jet2(e, p, env)).collect::<Result<_, _>>()?;
    let jy: Vec<Jet2> = y.iter().map(|e| eval_jet2(e, p, env)).collect::<Result<_, _>>()?;
    Ok((0..n)
        .map(|k| {
            let mut s = 0.0;
            for a in 0..n {
                s += jx[a].value() * jy[k].grad_at(a) - jy[a].value() * jx[k].grad_at(a);
            }
            s
        })
        .collect())
}

/// Reusable symbolic data for the literal-definition torsion path.
pub struct OraclePlan<'a> {
    field: &'a OperatorField,
    pairs: Vec<PairPlan>,
}

struct PairPlan {
    i: usize,
    j: usize,
    u: Vec<Expr>,
    v: Vec<Expr>,
    lu: Vec<Expr>,
    lv: Vec<Expr>,
}

impl<'a> OraclePlan<'a> {
    pub fn torsion_at(&self, p: &[f64]) -> Result<TorsionTensor, FieldError> {
        let n = self.field.dim;
        let env = &self.field.params;
        let l = self.field.values_at(p)?;
        let l2 = l.matmul(&l);
        let mut t = TorsionTensor::zeros(n);
        for pair in &self.pairs {
            let b_uv = lie_bracket_at(&pair.u, &pair.v, p, env)?;
            let b_lulv = lie_bracket_at(&pair.lu, &pair.lv, p, env)?;
            let b_lu_v = lie_bracket_at(&pair.lu, &pair.v, p, env)?;
            let b_u_lv = lie_bracket_at(&pair.u, &pair.lv, p, env)?;
            let first = l2.matvec(&b_uv);
            let third = l.matvec(&b_lu_v);
            let fourth = l.matvec(&b_u_lv);
            for k in 0..n {
                t.set_pair(k, pair.i, pair.j, first[k] + b_lulv[k] - third[k] - fourth[k]);
            }
        }
        Ok(t)
    }
}

/// Shared torsion kernel: index expansion from the operator values and first
/// derivatives at a point. `derivs[a]` holds `∂_a L`.
pub fn torsion_from_first_order(values: &Mat, derivs: &[Mat]) -> TorsionTensor {
    let n = values.rows();
    let mut t = TorsionTensor::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                let mut s = 0.0;
                for a in 0..n {
                    s += values.at(a, i) * derivs[a].at(k, j)
                        - values.at(a, j) * derivs[a].at(k, i)
                        - values.at(k, a) * (derivs[i].at(a, j) - derivs[j].at(a, i));
                }
                t.set_pair(k, i, j, s);
            }
        }
    }
    t
}

/// Torsion components `N^k_{ij}` at a point; antisymmetric in `(i, j)` by
/// construction (components are computed for `i < j`; the mirror is exact).
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionTensor {
    dim: usize,
    comp: Vec<f64>,
}

impl TorsionTensor {
    pub fn zeros(dim: usize) -> Self {
        TorsionTensor {
            dim,
            comp: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.comp[(k * self.dim + i) * self.dim + j]
    }

    /// Set `N^k_{ij}` for `i < j` and mirror `N^k_{ji} = −N^k_{ij}`.
    fn set_pair(&mut self, k: usize, i: usize, j: usize, v: f64) {
        debug_assert!(i < j);
        self.comp[(k * self.dim + i) * self.dim + j] = v;
        self.comp[(k * self.dim + j) * self.dim + i] = -v;
    }

    pub fn max_abs(&self) -> f64 {
        self.comp.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the largest-magnitude component.
    pub fn argmax(&self) -> (usize, usize, usize, f64) {
        let mut best = (0, 0, 0, 0.0f64);
        for k in 0..self.dim {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    let v = self.get(k, i, j);
                    if v.abs() > best.3.abs() {
                        best = (k, i, j, v);
                    }
                }
            }
        }
        best
    }

    /// Componentwise max difference against another tensor.
    pub fn max_diff(&self, other: &TorsionTensor) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.comp
            .iter()
            .zip(&other.comp)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Characteristic data at a point: coefficient values, their Jacobian
/// (row `i` is `∇σ_{i+1}`), and the Hessian of each coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantData {
    pub point: Vec<f64>,
    pub sigma: CharPoly,
    pub jacobian: Mat,
    pub hessians: Vec<Mat>,
}

impl InvariantData {
    fn from_sigma_jets(point: &[f64], sigma_jets: &[Jet2]) -> InvariantData {
        let n = sigma_jets.len();
        let values: Vec<f64> = sigma_jets.iter().map(|j| j.value()).collect();
        let jac_rows: Vec<Vec<f64>> = sigma_jets.iter().map(|j| j.grad().to_vec()).collect();
        let hessians: Vec<Mat> = sigma_jets
            .iter()
            .map(|j| Mat::new(n, n, j.hess().to_vec()))
            .collect();
        InvariantData {
            point: point.to_vec(),
            sigma: CharPoly::new(values),
            jacobian: Mat::from_rows(&jac_rows),
            hessians,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// Largest magnitude among coefficient values, gradients and Hessians;
    /// the scale factor for fold-test thresholds.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for v in &self.sigma.coeffs {
            m = m.max(v.abs());
        }
        m = m.max(self.jacobian.max_abs());
        for h in &self.hessians {
            m = m.max(h.max_abs());
        }
        m
    }
}

/// Invariant data of scalar coefficient functions given directly as
/// expressions (used for prescribed fields, whose invariants are exactly the
/// prescribed functions, and for families that ship coefficient expressions
/// without an operator realization).
pub fn invariants_from_exprs(
    sigma: &[Expr],
    p: &[f64],
    env: &ParamEnv,
) -> Result<InvariantData, EvalError> {
    let jets: Vec<Jet2> = sigma
        .iter()
        .map(|e| eval_jet2(e, p, env))
        .collect::<Result<_, _>>()?;
    Ok(InvariantData::from_sigma_jets(p, &jets))
}

/// Operator field prescribed by its characteristic coefficients: at every
/// point `L(p) = J(p)⁻¹ S_χ(p) J(p)` with `J` the Jacobian of the coefficient
/// functions and `S_χ` their companion matrix. The conjugation is performed
/// numerically per evaluation point; a symbolic inverse of `J` is never
/// formed.
#[derive(Debug, Clone, PartialEq)]
pub struct PrescribedField {
    sigma: Vec<Expr>,
    vars: Vec<String>,
    params: ParamEnv,
}

impl PrescribedField {
    pub fn new(sigma: Vec<Expr>, vars: Vec<String>, params: ParamEnv) -> Result<Self, FieldError> {
        if sigma.len() != vars.len() {
            return Err(FieldError::Invalid(
                "need exactly one coefficient function per variable".into(),
            ));
        }
        for e in &sigma {
            if let Some(i) = e.max_var_index() {
                if i >= vars.len() {
                    return Err(FieldError::Invalid(format!(
                        "coefficient references variable index {i}, dimension is {}",
                        vars.len()
                    )));
                }
            }
            for name in e.param_names() {
                if params.get(&name).is_none() {
                    return Err(FieldError::Invalid(format!(
                        "parameter `{name}` is not bound"
                    )));
                }
            }
        }
        Ok(PrescribedField { sigma, vars, params })
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma_exprs(&self) -> &[Expr] {
        &self.sigma
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn params(&self) -> &ParamEnv {
        &self.params
    }

    /// The constructed matrix at `p`. Fails with a singular-matrix error
    /// exactly where the prescribed coefficients have a differential
    /// singularity (degenerate `J`).
    pub fn matrix_at(&self, p: &[f64]) -> Result<Mat, FieldError> {
        let inv = self.invariants_at(p)?;
        let jac = &inv.jacobian;
        let s = companion(&inv.sigma);
        // L = J⁻¹ (S J)
        Ok(jac.solve_mat(&s.matmul(jac))?)
    }

    /// Invariants of the constructed operator. By similarity invariance these
    /// are exactly the prescribed coefficient functions, so their jets are
    /// evaluated directly.
    pub fn invariants_at(&self, p: &[f64]) -> Result<InvariantData, FieldError> {
        Ok(invariants_from_exprs(&self.sigma, p, &self.params)?)
    }

    /// `L(p)` together with all first derivatives `∂_a L(p)`, from the exact
    /// differential of the conjugation:
    ///
    /// ```text
    /// ∂_a L = J⁻¹ (∂_a S) J + J⁻¹ S (∂_a J) − J⁻¹ (∂_a J) L
    /// ```
    ///
    /// where `(∂_a J)_{ij} = ∂²σ_i/∂x^j∂x^a` comes from the coefficient
    /// Hessians and `∂_a S` has first column `(−∂_a σ_1, …, −∂_a σ_n)`.
    pub fn matrix_and_derivs_at(&self, p: &[f64]) -> Result<(Mat, Vec<Mat>), FieldError> {
        let n = self.dim();
        let inv = self.invariants_at(p)?;
        let jac = &inv.jacobian;
        let s = companion(&inv.sigma);
        let jinv = jac.inverse()?;
        let l = jinv.matmul(&s.matmul(jac));
        let mut derivs = Vec::with_capacity(n);
        for a in 0..n {
            let mut dj = Mat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    dj.set(i, j, inv.hessians[i].at(j, a));
                }
            }
            let mut ds = Mat::zeros(n, n);
            for i in 0..n {
                ds.set(i, 0, -jac.at(i, a));
            }
            let dl = jinv
                .matmul(&ds.matmul(jac))
                .add(&jinv.matmul(&s.matmul(&dj)))
                .sub(&jinv.matmul(&dj.matmul(&l)));
            derivs.push(dl);
        }
        Ok((l, derivs))
    }

    /// Torsion of the constructed field at `p`, via the shared first-order
    /// kernel applied to the exact conjugation derivatives.
    pub fn torsion_at(&self, p: &[f64]) -> Result<TorsionTensor, FieldError> {
        let (l, derivs) = self.matrix_and_derivs_at(p)?;
        Ok(torsion_from_first_order(&l, &derivs))
    }

    /// First-order scale (entries and entry derivatives) at `p`.
    pub fn scale_at(&self, p: &[f64]) -> Result<f64, FieldError> {
        let (l, derivs) = self.matrix_and_derivs_at(p)?;
        let mut m = l.max_abs();
        for d in &derivs {
            m = m.max(d.max_abs());
        }
        Ok(m)
    }
}

/// One-shot form of the constructor: `J(p)⁻¹ S_χ(p) J(p)` for coefficient
/// expressions `sigma` at the point `p`.
pub fn construct_from_invariants(
    sigma: &[Expr],
    vars: &[String],
    p: &[f64],
    env: &ParamEnv,
) -> Result<Mat, FieldError> {
    let field = PrescribedField::new(sigma.to_vec(), vars.to_vec(), env.clone())?;
    field.matrix_at(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::linalg::charpoly;

    fn vars3() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    fn field3(entries: &[&str], params: ParamEnv) -> OperatorField {
        let vars = vars3();
        let param_names: Vec<String> = params.names().map(String::from).collect();
        let exprs: Vec<Expr> = entries
            .iter()
            .map(|t| parse_expr(t, &vars, &param_names).unwrap())
            .collect();
        OperatorField::new(3, vars, params, exprs, SampleBox::cube(0.5, 3), vec![]).unwrap()
    }

    fn t3_field(c: f64, upper: bool) -> OperatorField {
        let params = ParamEnv::new().bind("c", c);
        let s = if upper { "-" } else { "" };
        let e11 = format!("{s}x^2 - c");
        let e21 = format!("{s}2*x*y");
        let e31 = format!("{s}2*x*z");
        field3(
            &[
                &e11, "-x/(2*c)", "x/(2*c^2)",
                &e21, "-y/c", "y/c^2 + 1",
                &e31, "-z/c", "z/c^2",
            ],
            params,
        )
    }

    #[test]
    fn constant_field_has_zero_torsion() {
        let f = field3(&["1", "2", "0", "0", "3", "0", "0", "0", "4"], ParamEnv::new());
        let p = [0.1, -0.2, 0.3];
        assert_eq!(f.torsion_coordinate(&p).unwrap().max_abs(), 0.0);
        assert_eq!(f.torsion_oracle(&p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn diagonal_coordinate_field_has_zero_torsion() {
        let f = field3(&["x", "0", "0", "0", "y", "0", "0", "0", "z"], ParamEnv::new());
        let p = [0.2, -0.4, 0.1];
        assert!(f.torsion_coordinate(&p).unwrap().max_abs() < 1e-15);
        assert!(f.torsion_oracle(&p).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn t3_family_is_nijenhuis_at_sample_point() {
        let f = t3_field(1.0, true);
        let p = [0.3, 0.2, -0.1];
        let scale = f.scale_at(&p).unwrap();
        let eps = 1e-9 * (1.0 + scale);
        assert!(f.torsion_coordinate(&p).unwrap().max_abs() < eps);
        assert!(f.torsion_oracle(&p).unwrap().max_abs() < eps);
    }

    #[test]
    fn two_dimensional_paths_agree() {
        let vars: Vec<String> = vec!["x".into(), "y".into()];
        let entries: Vec<Expr> = ["0", "x", "0", "0"]
            .iter()
            .map(|t| parse_expr(t, &vars, &[]).unwrap())
            .collect();
        let f = OperatorField::new(
            2,
            vars,
            ParamEnv::new(),
            entries,
            SampleBox::cube(0.5, 2),
            vec![],
        )
        .unwrap();
        let p = [0.3, -0.2];
        let a = f.torsion_coordinate(&p).unwrap();
        let b = f.torsion_oracle(&p).unwrap();
        assert!(a.max_diff(&b) < 1e-14);
        // This field is actually Nijenhuis; both paths agree on zero.
        assert!(a.max_abs() < 1e-14);
    }

    #[test]
    fn antisymmetry_is_exact() {
        let f = t3_field(-2.0, false);
        let t = f.torsion_coordinate(&[0.2, 0.1, 0.05]).unwrap();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(t.get(k, i, j), -t.get(k, j, i));
                }
            }
        }
    }

    #[test]
    fn perturbed_field_fails_torsion() {
        // Adding 0.1·x to one entry of a torsion-free family must produce
        // detectable torsion; this establishes the test's power.
        let f = t3_field(1.0, true);
        let delta = parse_expr("0.1*x", &vars3(), &[]).unwrap();
        let g = f.with_entry_added(0, 1, delta);
        let p = [0.3, 0.2, -0.1];
        assert!(g.torsion_coordinate(&p).unwrap().max_abs() > 1e-4);
        assert!(g.torsion_oracle(&p).unwrap().max_abs() > 1e-4);
    }

    #[test]
    fn invariants_match_displayed_coefficients_t4() {
        // χ = t³ + x t² + (y² + cx + z/c − c²) t + z for the upper sign.
        let params = ParamEnv::new().bind("c", 1.0);
        let f = field3(
            &[
                "-x + c", "2*y", "1/c",
                "-y/2", "-c", "0",
                "-z", "0", "0",
            ],
            params,
        );
        let p = [0.1, 0.2, 0.3];
        let inv = f.invariants_at(&p).unwrap();
        assert!((inv.sigma.sigma(1) - 0.1).abs() < 1e-12);
        assert!((inv.sigma.sigma(2) - (-0.56)).abs() < 1e-12);
        assert!((inv.sigma.sigma(3) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sigma1_gradient_is_negated_trace_gradient() {
        let f = t3_field(1.5, false);
        let p = [0.12, -0.07, 0.31];
        let inv = f.invariants_at(&p).unwrap();
        let jets = f.jets_at(&p).unwrap();
        for a in 0..3 {
            let tr_grad: f64 = (0..3).map(|i| jets[i * 3 + i].grad_at(a)).sum();
            assert!((inv.jacobian.at(0, a) + tr_grad).abs() < 1e-13);
        }
    }

    #[test]
    fn covector_identity_holds_for_t3() {
        let f = t3_field(1.0, true);
        for p in [[0.3, 0.2, -0.1], [-0.2, 0.4, 0.25], [0.05, -0.33, 0.18]] {
            assert!(f.covector_identity_residual(&p).unwrap() < 1e-9);
        }
    }

    #[test]
    fn covector_identity_constant_diagonal() {
        let f = field3(&["1", "0", "0", "0", "2", "0", "0", "0", "3"], ParamEnv::new());
        assert_eq!(f.covector_identity_residual(&[0.1, 0.2, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn covector_identity_rejects_perturbation() {
        let f = t3_field(1.0, true);
        let delta = parse_expr("0.2*y", &vars3(), &[]).unwrap();
        let g = f.with_entry_added(1, 1, delta);
        let mut worst = 0.0f64;
        for p in [[0.3, 0.2, -0.1], [-0.25, 0.4, 0.2], [0.1, -0.3, 0.45]] {
            worst = worst.max(g.covector_identity_residual(&p).unwrap());
        }
        assert!(worst > 1e-4, "perturbed residual {worst} too small");
    }

    #[test]
    fn prescribed_identity_coefficients_give_companion() {
        let vars = vars3();
        let sigma: Vec<Expr> = ["x", "y", "z"]
            .iter()
            .map(|t| parse_expr(t, &vars, &[]).unwrap())
            .collect();
        let p = [0.4, -0.3, 0.2];
        let l = construct_from_invariants(&sigma, &vars, &p, &ParamEnv::new()).unwrap();
        let s = companion(&CharPoly::new(p.to_vec()));
        for i in 0..3 {
            for j in 0..3 {
                assert!((l.at(i, j) - s.at(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prescribed_roundtrip_charpoly() {
        let vars = vars3();
        let sigma: Vec<Expr> = ["x + y", "y", "z"]
            .iter()
            .map(|t| parse_expr(t, &vars, &[]).unwrap())
            .collect();
        let p = [0.3, 0.25, -0.4];
        let l = construct_from_invariants(&sigma, &vars, &p, &ParamEnv::new()).unwrap();
        let cp = charpoly(&l);
        let expected = [0.55, 0.25, -0.4];
        for (a, b) in cp.coeffs.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn prescribed_field_torsion_vanishes() {
        let vars = vars3();
        let sigma: Vec<Expr> = ["x", "y^2", "z"]
            .iter()
            .map(|t| parse_expr(t, &vars, &[]).unwrap())
            .collect();
        let f = PrescribedField::new(sigma, vars, ParamEnv::new()).unwrap();
        for p in [[0.02, 1.0, -0.03], [-0.04, 0.95, 0.06], [0.0, 1.1, 0.0]] {
            let t = f.torsion_at(&p).unwrap();
            let scale = f.scale_at(&p).unwrap();
            assert!(
                t.max_abs() <= 1e-8 * (1.0 + scale),
                "torsion {} at {:?}",
                t.max_abs(),
                p
            );
        }
    }

    #[test]
    fn prescribed_field_singular_where_jacobian_degenerates() {
        let vars = vars3();
        let sigma: Vec<Expr> = ["x", "y^2", "z"]
            .iter()
            .map(|t| parse_expr(t, &vars, &[]).unwrap())
            .collect();
        let f = PrescribedField::new(sigma, vars, ParamEnv::new()).unwrap();
        match f.matrix_at(&[0.0, 0.0, 0.0]) {
            Err(FieldError::Linalg(LinalgError::Singular { .. })) => {}
            other => panic!("expected singular-matrix error, got {other:?}"),
        }
    }

    #[test]
    fn field_validation_rejects_unbound_params() {
        let vars = vars3();
        let entries: Vec<Expr> = (0..9)
            .map(|k| {
                if k == 0 {
                    parse_expr("c*x", &vars, &["c".into()]).unwrap()
                } else {
                    Expr::int(0)
                }
            })
            .collect();
        let res = OperatorField::new(
            3,
            vars,
            ParamEnv::new(),
            entries,
            SampleBox::cube(0.5, 3),
            vec![],
        );
        assert!(matches!(res, Err(FieldError::Invalid(_))));
    }
}
