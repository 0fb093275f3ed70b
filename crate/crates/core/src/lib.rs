//! Numerical verification toolkit for Nijenhuis operator fields.
//!
//! An operator field `L` (a matrix of scalar-field expressions) is a
//! Nijenhuis operator when its torsion
//!
//! ```text
//! N_L(u, v) = L²[u, v] + [Lu, Lv] − L[Lu, v] − L[u, Lv]
//! ```
//!
//! vanishes identically. This crate evaluates operator fields with exact
//! second-order forward-mode differentiation (2-jets), computes the torsion
//! through two independent code paths, extracts the characteristic
//! coefficients `σ_i` of `χ(t) = det(tI − L)` together with their exact
//! Jacobian and Hessians, classifies differential singularities of the
//! invariant map `p ↦ (σ_1(p), …, σ_n(p))`, and ships an executable catalog
//! of classified three-dimensional families with residual checkers for the
//! differential systems they satisfy.
//!
//! Everything is sampled-numerical and deterministic: quasi-random
//! (low-discrepancy) points, scale-aware tolerances, and byte-stable reports.

pub mod catalog;
pub mod expr;
pub mod jet;
pub mod linalg;
pub mod nijenhuis;
pub mod report;
pub mod sample;
pub mod singularity;
pub mod specfile;
pub mod testutil;
pub mod tolerances;
pub mod verify;

pub use expr::{eval_jet2, eval_scalar, parse_expr, EvalError, Expr, ParamEnv, ParseError};
pub use jet::{Jet2, NumError};
pub use linalg::{charpoly, companion, solve_cubic, CharPoly, CubicRoots, LinalgError, Mat};
pub use nijenhuis::{
    construct_from_invariants, InvariantData, OperatorField, PrescribedField, TorsionTensor,
};
pub use singularity::{classify_point, ClassifyOptions, MorseData, Regime, SingularityReport};
