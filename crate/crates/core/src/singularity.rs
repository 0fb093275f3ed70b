//! Classification of differential singularities of the invariant map.
//!
//! At a point `p`, the rank of `dΦ_L = (∂σ_i/∂x^j)` decides the regime:
//! full rank is [`Regime::Regular`]; rank 1 with all 2×2 minors vanishing is
//! [`Regime::Rank1Locus`]; rank 2 in three dimensions triggers the fold test
//! of [`morse_on_level_curve`], and a critical-with-nondegenerate-second-
//! derivative outcome is [`Regime::Rank2Fold`]. Points whose pivots sit too
//! close to the rank threshold, and rank-2 points that fail the fold test,
//! are reported as [`Regime::Degenerate`] with diagnostics — an explicit
//! outcome, not an error.
//!
//! The joint level curve `{σ_i = 0, σ_j = 0}` is treated only
//! infinitesimally: the tangent comes from the kernel of the 2×3 submatrix,
//! the curve acceleration from implicit-function data, and the fold test
//! needs nothing beyond this 2-jet. The curve is never traced numerically.
//!
//! The rank-2 certificates here are pointwise. Sample sweeps certify
//! independence at the sampled points only; a hypothesis that differentials
//! stay independent throughout a neighborhood is strictly stronger than what
//! sampling can establish.

use thiserror::Error;

use crate::linalg::Mat;
use crate::nijenhuis::{FieldError, InvariantData, OperatorField};
use crate::tolerances;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorseError {
    #[error("point is not on the joint zero level of σ{i1} and σ{j1}: values ({vi:.3e}, {vj:.3e})", i1 = i + 1, j1 = j + 1)]
    NotOnLevelLine { i: usize, j: usize, vi: f64, vj: f64 },
    #[error("differentials dσ{a} and dσ{b} are not linearly independent at the point", a = .0 + 1, b = .1 + 1)]
    DependentDifferentials(usize, usize),
}

/// Pointwise regime of the invariant map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `rank(dΦ) = n`: no differential singularity.
    Regular,
    /// Rank 2 (in 3D) with a fold: the remaining invariant restricted to the
    /// joint level curve has a critical point with nonzero second derivative.
    Rank2Fold,
    /// Rank 1 with all 2×2 minors of the Jacobian vanishing to tolerance.
    Rank1Locus,
    /// Tolerances cannot separate ranks, or a low-rank point fails the
    /// structural checks of its rank class.
    Degenerate,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Regular => "Regular",
            Regime::Rank2Fold => "Rank2Fold",
            Regime::Rank1Locus => "Rank1Locus",
            Regime::Degenerate => "Degenerate",
        };
        f.write_str(s)
    }
}

/// Infinitesimal fold data on the joint level curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MorseData {
    /// Unit tangent of the level curve (kernel of the independent pair),
    /// sign fixed so the first component of magnitude above 1e-12 is
    /// positive.
    pub curve_tangent: Vec<f64>,
    /// Curve acceleration in the gauge `v · a = 0`.
    pub curve_accel: Vec<f64>,
    /// First derivative of the remaining invariant along the curve.
    pub h1: f64,
    /// Second derivative of the remaining invariant along the curve.
    pub h2: f64,
}

/// Per-point classification record.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityReport {
    pub point: Vec<f64>,
    pub rank: usize,
    /// Zero-based indices `(i, j)` of the invariants whose differentials
    /// certify rank 2 (σ indices are displayed one-based).
    pub independent_pair: Option<(usize, usize)>,
    pub morse: Option<MorseData>,
    pub regime: Regime,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Relative pivot tolerance for rank decisions.
    pub rank_tol: f64,
    /// Tolerance for the fold derivatives h1/h2 (scaled by the invariant
    /// data's magnitude).
    pub morse_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            rank_tol: tolerances::RANK_TOL_REL,
            morse_tol: tolerances::MORSE_TOL,
        }
    }
}

/// Classify a point of an operator field.
pub fn classify_point(
    field: &OperatorField,
    p: &[f64],
    opts: &ClassifyOptions,
) -> Result<SingularityReport, FieldError> {
    let inv = field.invariants_at(p)?;
    Ok(classify_invariants(&inv, opts))
}

/// Classify from precomputed invariant data.
pub fn classify_invariants(inv: &InvariantData, opts: &ClassifyOptions) -> SingularityReport {
    let n = inv.dim();
    let details = inv.jacobian.rank_details(opts.rank_tol);
    let rank = details.rank;
    let mut diagnostics = vec![format!(
        "jacobian pivots: [{}], cutoff {:.3e}",
        details
            .pivots
            .iter()
            .map(|p| format!("{p:.3e}"))
            .collect::<Vec<_>>()
            .join(", "),
        details.cutoff
    )];

    // Pivots within a factor 10 of the cutoff mean the rank itself is
    // ambiguous at this tolerance.
    let shaky = details
        .pivots
        .iter()
        .any(|&p| p > details.cutoff / 10.0 && p <= details.cutoff * 10.0 && details.cutoff > 0.0);
    if shaky {
        diagnostics.push("rank is tolerance-ambiguous: a pivot lies within 10x of the cutoff".into());
        return SingularityReport {
            point: inv.point.clone(),
            rank,
            independent_pair: None,
            morse: None,
            regime: Regime::Degenerate,
            diagnostics,
        };
    }

    if rank == n {
        return SingularityReport {
            point: inv.point.clone(),
            rank,
            independent_pair: None,
            morse: None,
            regime: Regime::Regular,
            diagnostics,
        };
    }

    if rank == 1 {
        // Structural double check through an independent route: every 2x2
        // minor of the Jacobian must vanish.
        let j = &inv.jacobian;
        let scale = 1.0 + j.max_abs();
        let tol = opts.rank_tol * scale * scale;
        let mut worst = 0.0f64;
        for r1 in 0..n {
            for r2 in r1 + 1..n {
                for c1 in 0..n {
                    for c2 in c1 + 1..n {
                        let minor = j.at(r1, c1) * j.at(r2, c2) - j.at(r1, c2) * j.at(r2, c1);
                        worst = worst.max(minor.abs());
                    }
                }
            }
        }
        diagnostics.push(format!("largest 2x2 minor: {worst:.3e}"));
        let regime = if worst <= tol {
            Regime::Rank1Locus
        } else {
            diagnostics.push("rank-1 pivot count but non-vanishing 2x2 minors".into());
            Regime::Degenerate
        };
        return SingularityReport {
            point: inv.point.clone(),
            rank,
            independent_pair: None,
            morse: None,
            regime,
            diagnostics,
        };
    }

    if rank == 2 && n == 3 {
        match choose_independent_pair(inv, opts) {
            Some((i, j)) => {
                let k = 3 - i - j;
                match morse_on_level_curve(inv, (i, j), k, opts.morse_tol) {
                    Ok(morse) => {
                        let scale = 1.0 + inv.max_abs();
                        let cut = opts.morse_tol * scale;
                        diagnostics.push(format!(
                            "fold data for σ{} on level curve of (σ{}, σ{}): h1 = {:.3e}, h2 = {:.6}",
                            k + 1,
                            i + 1,
                            j + 1,
                            morse.h1,
                            morse.h2
                        ));
                        let regime = if morse.h1.abs() <= cut && morse.h2.abs() > cut {
                            Regime::Rank2Fold
                        } else {
                            diagnostics.push(
                                "fold test failed: need |h1| within tolerance and |h2| above it"
                                    .into(),
                            );
                            Regime::Degenerate
                        };
                        return SingularityReport {
                            point: inv.point.clone(),
                            rank,
                            independent_pair: Some((i, j)),
                            morse: Some(morse),
                            regime,
                            diagnostics,
                        };
                    }
                    Err(e) => {
                        diagnostics.push(format!("fold test not applicable: {e}"));
                        return SingularityReport {
                            point: inv.point.clone(),
                            rank,
                            independent_pair: Some((i, j)),
                            morse: None,
                            regime: Regime::Degenerate,
                            diagnostics,
                        };
                    }
                }
            }
            None => {
                diagnostics.push("no independent pair of differentials found".into());
            }
        }
    }

    SingularityReport {
        point: inv.point.clone(),
        rank,
        independent_pair: None,
        morse: None,
        regime: Regime::Degenerate,
        diagnostics,
    }
}

/// Choose the invariant pair certifying rank 2: among pairs whose 2×3
/// submatrix is numerically independent, prefer pairs whose values both
/// vanish at the point (so the joint level curve passes through it), then the
/// pair maximizing the smallest pivot, then lexicographic order.
fn choose_independent_pair(inv: &InvariantData, opts: &ClassifyOptions) -> Option<(usize, usize)> {
    let n = inv.dim();
    let sigma_scale = 1.0 + inv.sigma.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let level_tol = opts.morse_tol * sigma_scale;
    let mut best: Option<(bool, f64, (usize, usize))> = None;
    for i in 0..n {
        for j in i + 1..n {
            let sub = Mat::from_rows(&[inv.jacobian.row(i).to_vec(), inv.jacobian.row(j).to_vec()]);
            let details = sub.rank_details(opts.rank_tol);
            if details.rank < 2 {
                continue;
            }
            let min_piv = details.pivots.iter().cloned().fold(f64::INFINITY, f64::min);
            let on_level = inv.sigma.coeffs[i].abs() <= level_tol
                && inv.sigma.coeffs[j].abs() <= level_tol;
            let candidate = (on_level, min_piv, (i, j));
            best = match best {
                None => Some(candidate),
                Some(cur) => {
                    // Higher priority: on-level pairs, then larger min pivot;
                    // exact ties keep the lexicographically earlier pair.
                    if (candidate.0, candidate.1) > (cur.0, cur.1) {
                        Some(candidate)
                    } else {
                        Some(cur)
                    }
                }
            };
        }
    }
    best.map(|(_, _, pair)| pair)
}

/// Fold test for invariant `k` on the joint zero-level curve of invariants
/// `i` and `j` (all zero-based), in three dimensions.
///
/// The tangent `v` spans the kernel of `[∇σ_i; ∇σ_j]`; the acceleration `a`
/// solves `{∇σ_i·a = −vᵀH_i v, ∇σ_j·a = −vᵀH_j v, v·a = 0}` (the last row is
/// the parametrization gauge); then `h1 = ∇σ_k·v` and
/// `h2 = vᵀH_k v + ∇σ_k·a`.
pub fn morse_on_level_curve(
    inv: &InvariantData,
    pair: (usize, usize),
    k: usize,
    morse_tol: f64,
) -> Result<MorseData, MorseError> {
    assert_eq!(inv.dim(), 3, "the fold test is three-dimensional");
    let (i, j) = pair;
    let gi = inv.jacobian.row(i).to_vec();
    let gj = inv.jacobian.row(j).to_vec();

    let sub = Mat::from_rows(&[gi.clone(), gj.clone()]);
    if sub.rank_details(tolerances::RANK_TOL_REL).rank < 2 {
        return Err(MorseError::DependentDifferentials(i, j));
    }

    let sigma_scale = 1.0 + inv.sigma.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let level_tol = morse_tol * sigma_scale;
    let (vi, vj) = (inv.sigma.coeffs[i], inv.sigma.coeffs[j]);
    if vi.abs() > level_tol || vj.abs() > level_tol {
        return Err(MorseError::NotOnLevelLine { i, j, vi, vj });
    }

    // Kernel of the pair via the cross product, normalized, sign-fixed.
    let mut v = [
        gi[1] * gj[2] - gi[2] * gj[1],
        gi[2] * gj[0] - gi[0] * gj[2],
        gi[0] * gj[1] - gi[1] * gj[0],
    ];
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if norm == 0.0 {
        return Err(MorseError::DependentDifferentials(i, j));
    }
    for c in v.iter_mut() {
        *c /= norm;
    }
    if let Some(lead) = v.iter().find(|c| c.abs() > 1e-12) {
        if *lead < 0.0 {
            for c in v.iter_mut() {
                *c = -*c;
            }
        }
    }

    let quad = |h: &Mat| -> f64 {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += v[a] * h.at(a, b) * v[b];
            }
        }
        s
    };
    let system = Mat::from_rows(&[gi.clone(), gj.clone(), v.to_vec()]);
    let rhs = [-quad(&inv.hessians[i]), -quad(&inv.hessians[j]), 0.0];
    let accel = system
        .solve(&rhs)
        .map_err(|_| MorseError::DependentDifferentials(i, j))?;

    let gk = inv.jacobian.row(k);
    let h1: f64 = gk.iter().zip(&v).map(|(a, b)| a * b).sum();
    let h2 = quad(&inv.hessians[k]) + gk.iter().zip(&accel).map(|(a, b)| a * b).sum::<f64>();

    Ok(MorseData {
        curve_tangent: v.to_vec(),
        curve_accel: accel,
        h1,
        h2,
    })
}

/// Fold data recomputed in the gauge `v · a = c0` instead of `v · a = 0`;
/// diagnostic companion to [`morse_on_level_curve`]. Changing the gauge
/// shifts `h2` by exactly `c0 · h1`, so `h2` is gauge-invariant precisely at
/// critical points.
pub fn morse_with_gauge(
    inv: &InvariantData,
    pair: (usize, usize),
    k: usize,
    morse_tol: f64,
    gauge: f64,
) -> Result<MorseData, MorseError> {
    let base = morse_on_level_curve(inv, pair, k, morse_tol)?;
    let v = &base.curve_tangent;
    let accel: Vec<f64> = base
        .curve_accel
        .iter()
        .zip(v)
        .map(|(a, t)| a + gauge * t)
        .collect();
    let gk = inv.jacobian.row(k);
    let h2 = base.h2 - base.curve_accel.iter().zip(gk).map(|(a, g)| a * g).sum::<f64>()
        + accel.iter().zip(gk).map(|(a, g)| a * g).sum::<f64>();
    Ok(MorseData {
        curve_tangent: base.curve_tangent.clone(),
        curve_accel: accel,
        h1: base.h1,
        h2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, ParamEnv};
    use crate::nijenhuis::invariants_from_exprs;

    fn vars3() -> Vec<String> {
        vec!["x".into(), "y".into(), "z".into()]
    }

    fn inv_from(sigma: &[&str], env: &ParamEnv, p: &[f64]) -> InvariantData {
        let vars = vars3();
        let names: Vec<String> = env.names().map(String::from).collect();
        let exprs: Vec<_> = sigma
            .iter()
            .map(|t| parse_expr(t, &vars, &names).unwrap())
            .collect();
        invariants_from_exprs(&exprs, p, env).unwrap()
    }

    #[test]
    fn identity_coefficients_are_regular() {
        let inv = inv_from(&["x", "y", "z"], &ParamEnv::new(), &[0.0, 0.0, 0.0]);
        let rep = classify_invariants(&inv, &ClassifyOptions::default());
        assert_eq!(rep.regime, Regime::Regular);
        assert_eq!(rep.rank, 3);
        assert!(rep.morse.is_none());
    }

    #[test]
    fn t4_coefficients_fold_at_origin() {
        // σ = (x, y² + cx + z/c − c², z) with c = 1.
        let env = ParamEnv::new().bind("c", 1.0);
        let inv = inv_from(&["x", "y^2 + c*x + z/c - c^2", "z"], &env, &[0.0, 0.0, 0.0]);
        let rep = classify_invariants(&inv, &ClassifyOptions::default());
        assert_eq!(rep.rank, 2);
        assert_eq!(rep.independent_pair, Some((0, 2)));
        assert_eq!(rep.regime, Regime::Rank2Fold);
        let morse = rep.morse.unwrap();
        assert!(morse.h1.abs() < 1e-12);
        assert!((morse.h2 - 2.0).abs() < 1e-12);
        // Tangent along +y, acceleration zero in this flat configuration.
        assert!((morse.curve_tangent[1] - 1.0).abs() < 1e-12);
        assert!(morse.curve_accel.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn t3_coefficients_fold_with_lower_sign() {
        let env = ParamEnv::new().bind("c", 1.0);
        let inv = inv_from(&["-x^2 + y/c - z/c^2 + c", "y", "z"], &env, &[0.0, 0.0, 0.0]);
        let rep = classify_invariants(&inv, &ClassifyOptions::default());
        assert_eq!(rep.regime, Regime::Rank2Fold);
        assert_eq!(rep.independent_pair, Some((1, 2)));
        let morse = rep.morse.unwrap();
        assert!((morse.h2 + 2.0).abs() < 1e-12);
        assert!((morse.curve_tangent[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn t5_coefficients_fold_along_z() {
        let env = ParamEnv::new().bind("c", 1.0).bind("c13", 1.0);
        let inv = inv_from(
            &["x", "y", "z^2 + c13*y - c13^2*x + c"],
            &env,
            &[0.0, 0.0, 0.0],
        );
        let rep = classify_invariants(&inv, &ClassifyOptions::default());
        assert_eq!(rep.regime, Regime::Rank2Fold);
        assert_eq!(rep.independent_pair, Some((0, 1)));
        let morse = rep.morse.unwrap();
        assert!((morse.h2 - 2.0).abs() < 1e-12);
        assert!((morse.curve_tangent[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_locus_for_x_only_coefficients() {
        let env = ParamEnv::new();
        let inv = inv_from(&["-x", "x^2/3", "-x^3/27"], &env, &[0.2, 0.1, -0.1]);
        let rep = classify_invariants(&inv, &ClassifyOptions::default());
        assert_eq!(rep.rank, 1);
        assert_eq!(rep.regime, Regime::Rank1Locus);
    }

    #[test]
    fn near_threshold_pivot_reports_degenerate() {
        let env = ParamEnv::new();
        // Third coefficient's gradient is 5e-9 of the others: right at the
        // default 1e-8 relative cutoff.
        let inv = inv_from(&["x", "y", "0.000000005*z"], &env, &[0.1, 0.1, 0.1]);
        let rep = classify_invariants(&inv, &ClassifyOptions::default());
        assert_eq!(rep.regime, Regime::Degenerate);
        assert!(rep
            .diagnostics
            .iter()
            .any(|d| d.contains("tolerance-ambiguous")));
    }

    #[test]
    fn zero_jacobian_is_degenerate() {
        let inv = inv_from(&["1", "2", "3"], &ParamEnv::new(), &[0.0, 0.0, 0.0]);
        let rep = classify_invariants(&inv, &ClassifyOptions::default());
        assert_eq!(rep.rank, 0);
        assert_eq!(rep.regime, Regime::Degenerate);
    }

    #[test]
    fn rank2_off_level_is_degenerate_with_note() {
        // Rank 2 everywhere, but the pair values are far from zero.
        let inv = inv_from(&["x + 1", "y + 1", "x + y"], &ParamEnv::new(), &[0.0, 0.0, 0.0]);
        let rep = classify_invariants(&inv, &ClassifyOptions::default());
        assert_eq!(rep.rank, 2);
        assert_eq!(rep.regime, Regime::Degenerate);
        assert!(rep
            .diagnostics
            .iter()
            .any(|d| d.contains("not applicable") || d.contains("fold test failed")));
    }

    #[test]
    fn gauge_change_shifts_h2_by_h1_times_gauge() {
        // A configuration with h1 != 0: σ3 rises linearly along the curve.
        let inv = inv_from(&["x", "z", "y + x"], &ParamEnv::new(), &[0.0, 0.0, 0.0]);
        let base = morse_on_level_curve(&inv, (0, 1), 2, 1e-6).unwrap();
        assert!((base.h1 - 1.0).abs() < 1e-12);
        for gauge in [0.1, -0.35, 2.0] {
            let shifted = morse_with_gauge(&inv, (0, 1), 2, 1e-6, gauge).unwrap();
            assert!(
                (shifted.h2 - base.h2 - gauge * base.h1).abs() < 1e-9,
                "gauge {gauge}: {} vs {}",
                shifted.h2,
                base.h2 + gauge * base.h1
            );
        }
    }

    #[test]
    fn tangent_sign_flip_leaves_h2_invariant() {
        // h1² and h2 are sign invariant; negating the pair gradients flips
        // the cross product, and the report's sign convention undoes it.
        let env = ParamEnv::new().bind("c", 1.0);
        let inv1 = inv_from(&["x", "y^2 + c*x + z/c - c^2", "z"], &env, &[0.0, 0.0, 0.0]);
        let m1 = morse_on_level_curve(&inv1, (0, 2), 1, 1e-6).unwrap();
        let inv2 = inv_from(&["-x", "y^2 + c*x + z/c - c^2", "-z"], &env, &[0.0, 0.0, 0.0]);
        let m2 = morse_on_level_curve(&inv2, (0, 2), 1, 1e-6).unwrap();
        assert!((m1.h1 * m1.h1 - m2.h1 * m2.h1).abs() < 1e-12);
        assert!((m1.h2 - m2.h2).abs() < 1e-12);
    }

    #[test]
    fn dependent_differentials_are_rejected() {
        let inv = inv_from(&["x", "2*x", "y"], &ParamEnv::new(), &[0.0, 0.0, 0.0]);
        let err = morse_on_level_curve(&inv, (0, 1), 2, 1e-6).unwrap_err();
        assert!(matches!(err, MorseError::DependentDifferentials(0, 1)));
    }
}
