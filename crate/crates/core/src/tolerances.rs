//! Centralized verification thresholds.
//!
//! Every pass/fail cutoff used by the check batteries and the acceptance
//! suite lives here, with its rationale. Scale-aware checks normalize the raw
//! residual by a per-point scale factor before comparing against the base
//! threshold, so reports always show a constant threshold next to a
//! normalized residual.

/// Torsion-vanishing base threshold. The effective cutoff at a point `p` is
/// `TORSION_EPS_BASE · (1 + s)` where `s` is the largest magnitude among the
/// operator entries and their first derivatives at `p`; a raw absolute cutoff
/// would be meaningless for large-coefficient families.
pub const TORSION_EPS_BASE: f64 = 1e-9;

/// Componentwise agreement between the two independent torsion
/// implementations on polynomial fields of small degree.
pub const ORACLE_AGREEMENT: f64 = 1e-10;

/// Match between the characteristic polynomial of an operator evaluation and
/// the family's displayed coefficient expressions, normalized by
/// `1 + max|σ_i|`.
pub const CHARPOLY_MATCH: f64 = 1e-10;

/// Residual of a differential system evaluated on its exact solution. These
/// substitute closed forms into closed forms, so only rounding remains.
pub const RESIDUAL_SOLUTION: f64 = 1e-11;

/// A documented negative control must exceed this residual; this validates
/// that the residual checks have the power to reject wrong solutions.
pub const RESIDUAL_NEGATIVE_CONTROL: f64 = 1e-4;

/// A perturbed (non-Nijenhuis) operator must show a torsion component above
/// this within a standard sweep.
pub const TORSION_NEGATIVE_CONTROL: f64 = 1e-4;

/// Round-trip accuracy of the companion-conjugation constructor: the
/// characteristic polynomial of the constructed operator against the
/// prescribed coefficient values.
pub const CONSTRUCT_ROUNDTRIP: f64 = 1e-9;

/// Torsion of a constructed operator field near the construction point,
/// normalized by the same first-order scale as `TORSION_EPS_BASE`.
pub const CONSTRUCT_TORSION: f64 = 1e-8;

/// Max-norm residual of the covector identity
/// `Lᵀ∇σ_i = ∇σ_{i+1} − σ_i ∇σ_1` (with `∇σ_{n+1} = 0`).
pub const COVECTOR_IDENTITY: f64 = 1e-9;

/// Relative pivot tolerance for numerical rank decisions.
pub const RANK_TOL_REL: f64 = 1e-8;

/// Fold-test tolerance for the along-curve derivatives `h1`, `h2`. Looser
/// than the linear-algebra tolerances because `h2` mixes Hessian scales.
pub const MORSE_TOL: f64 = 1e-6;

/// Agreement of closed-form cubic eigenvalues with catalogued singular-point
/// spectra, scaled by `1 + |c|`.
pub const SPECTRUM_MATCH: f64 = 1e-8;

/// Margin used when rejecting sample points too close to a declared excluded
/// zero set.
pub const EXCLUSION_MARGIN: f64 = 1e-4;
