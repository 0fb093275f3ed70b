//! Verification sweeps: reusable check runners over sampled points, and the
//! full per-family battery behind the `catalog` command.

use crate::catalog::{
    self, pde_residuals, spectrum_diagnostics, t2_companion_experiment, t2_factorization_residual,
    t2_negative_control, t2_ode_residuals, t4_negative_control, CatalogError, FamilyId,
    FamilySpec, SpectrumStatus,
};
use crate::linalg::charpoly;
use crate::nijenhuis::{invariants_from_exprs, OperatorField};
use crate::report::{digest_str, CheckRecord, Report, Status};
use crate::sample::{sample_points, SampleBox};
use crate::singularity::{classify_invariants, classify_point, ClassifyOptions, Regime};
use crate::tolerances;

#[derive(Debug, Clone, Copy)]
pub struct BatteryOptions {
    /// Points per torsion / coefficient-match sweep.
    pub points: usize,
    /// Points for the covector-identity and rank sweeps.
    pub identity_points: usize,
    /// Arguments per residual-system sweep.
    pub residual_args: usize,
    /// Offset into the low-discrepancy sequence.
    pub seed: u64,
    /// Base torsion threshold (scale-aware).
    pub torsion_tol: f64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions {
            points: 200,
            identity_points: 100,
            residual_args: 100,
            seed: 7,
            torsion_tol: tolerances::TORSION_EPS_BASE,
        }
    }
}

fn fmt_point(p: &[f64]) -> String {
    let coords: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", coords.join(", "))
}

/// Both torsion paths plus their agreement over a sweep of the field's
/// domain. Residuals are normalized by `1 + scale` where `scale` is the
/// largest entry/first-derivative magnitude at the point.
pub fn torsion_records(
    prefix: &str,
    field: &OperatorField,
    points: usize,
    seed: u64,
    tol_base: f64,
) -> Result<Vec<CheckRecord>, CatalogError> {
    let pts = sample_points(
        field.domain(),
        field.excluded(),
        field.params(),
        points,
        seed,
        tolerances::EXCLUSION_MARGIN,
    )
    .map_err(catalog::CatalogError::from)?;
    let plan = field.oracle_plan();
    let mut worst_coord = (0.0f64, Vec::new(), (0, 0, 0, 0.0));
    let mut worst_oracle = (0.0f64, Vec::new());
    let mut worst_diff = (0.0f64, Vec::new());
    for p in &pts {
        let scale = field.scale_at(p)?;
        let denom = 1.0 + scale;
        let tc = field.torsion_coordinate(p)?;
        let to = plan.torsion_at(p)?;
        let nc = tc.max_abs() / denom;
        if nc > worst_coord.0 {
            worst_coord = (nc, p.clone(), tc.argmax());
        }
        let no = to.max_abs() / denom;
        if no > worst_oracle.0 {
            worst_oracle = (no, p.clone());
        }
        let d = tc.max_diff(&to);
        if d > worst_diff.0 {
            worst_diff = (d, p.clone());
        }
    }
    let n = pts.len();
    let mut coord = CheckRecord::residual_check(
        format!("{prefix}/torsion/coordinate"),
        worst_coord.0,
        tol_base,
        n,
    );
    if !worst_coord.1.is_empty() {
        let (k, i, j, v) = worst_coord.2;
        coord = coord.with_diagnostic(format!(
            "worst component N^{}_{}{} = {v:.6e} at {}",
            k + 1,
            i + 1,
            j + 1,
            fmt_point(&worst_coord.1)
        ));
    }
    let mut oracle = CheckRecord::residual_check(
        format!("{prefix}/torsion/oracle"),
        worst_oracle.0,
        tol_base,
        n,
    );
    if !worst_oracle.1.is_empty() {
        oracle = oracle.with_diagnostic(format!("worst point {}", fmt_point(&worst_oracle.1)));
    }
    let agreement = CheckRecord::residual_check(
        format!("{prefix}/torsion/agreement"),
        worst_diff.0,
        tolerances::ORACLE_AGREEMENT,
        n,
    );
    Ok(vec![coord, oracle, agreement])
}

/// Match between the operator's computed characteristic coefficients and the
/// family's displayed coefficient expressions.
pub fn charpoly_match_record(
    prefix: &str,
    spec: &FamilySpec,
    points: usize,
    seed: u64,
) -> Result<CheckRecord, CatalogError> {
    let op = spec
        .operator
        .as_ref()
        .expect("coefficient match needs an operator");
    let pts = sample_points(
        op.domain(),
        op.excluded(),
        op.params(),
        points,
        seed,
        tolerances::EXCLUSION_MARGIN,
    )?;
    let mut worst = 0.0f64;
    let mut worst_p = Vec::new();
    for p in &pts {
        let computed = charpoly(&op.values_at(p)?);
        let displayed = spec.charpoly_values(p)?;
        let scale = 1.0 + displayed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in computed.coeffs.iter().zip(&displayed) {
            let r = (a - b).abs() / scale;
            if r > worst {
                worst = r;
                worst_p = p.clone();
            }
        }
    }
    let mut rec = CheckRecord::residual_check(
        format!("{prefix}/charpoly/match"),
        worst,
        tolerances::CHARPOLY_MATCH,
        pts.len(),
    );
    if !worst_p.is_empty() {
        rec = rec.with_diagnostic(format!("worst point {}", fmt_point(&worst_p)));
    }
    Ok(rec)
}

/// Covector-identity residual sweep.
pub fn covector_record(
    prefix: &str,
    field: &OperatorField,
    points: usize,
    seed: u64,
) -> Result<CheckRecord, CatalogError> {
    let pts = sample_points(
        field.domain(),
        field.excluded(),
        field.params(),
        points,
        seed,
        tolerances::EXCLUSION_MARGIN,
    )?;
    let mut worst = 0.0f64;
    for p in &pts {
        worst = worst.max(field.covector_identity_residual(p)?);
    }
    Ok(CheckRecord::residual_check(
        format!("{prefix}/identity/covector"),
        worst,
        tolerances::COVECTOR_IDENTITY,
        pts.len(),
    ))
}

/// Fold classification at the family's declared singular point: regime must
/// be `Rank2Fold` with `|h1|` within tolerance, `|h2| = 2` in catalog
/// coordinates, and the sign of `h2` matching the family's expectation.
fn fold_record(prefix: &str, spec: &FamilySpec) -> Result<CheckRecord, CatalogError> {
    let p = spec.singular_point.clone().expect("fold family has a singular point");
    let op = spec.operator.as_ref().expect("fold family has an operator");
    let rep = classify_point(op, &p, &ClassifyOptions::default())?;
    let id = format!("{prefix}/singularity/fold");
    let mut diagnostics = vec![format!("regime {} (rank {})", rep.regime, rep.rank)];
    if let Some((i, j)) = rep.independent_pair {
        diagnostics.push(format!("independent pair (σ{}, σ{})", i + 1, j + 1));
    }
    match (&rep.morse, rep.regime) {
        (Some(m), Regime::Rank2Fold) => {
            let expected_sign = spec.expected_h2_sign.expect("fold family has expected h2 sign");
            diagnostics.push(format!("h1 = {:.3e}, h2 = {:.9}", m.h1, m.h2));
            let residual = m.h1.abs().max((m.h2.abs() - 2.0).abs());
            let mut rec = CheckRecord::residual_check(id, residual, tolerances::MORSE_TOL, 1);
            if m.h2 * expected_sign <= 0.0 {
                rec = rec.with_status(Status::Fail).with_diagnostic(format!(
                    "h2 sign {} does not match the family's expected sign {}",
                    m.h2.signum(),
                    expected_sign
                ));
            }
            rec.diagnostics.extend(diagnostics);
            Ok(rec)
        }
        _ => {
            let mut rec = CheckRecord {
                id,
                status: Status::Fail,
                points: Some(1),
                residual: None,
                threshold: Some(tolerances::MORSE_TOL),
                diagnostics,
            };
            rec.diagnostics.extend(rep.diagnostics);
            Ok(rec)
        }
    }
}

/// Rank-1 sweep: every sampled point must classify as `Rank1Locus`.
fn rank1_record(
    prefix: &str,
    spec: &FamilySpec,
    points: usize,
    seed: u64,
) -> Result<CheckRecord, CatalogError> {
    let pts = sample_points(
        &spec.domain,
        &[],
        &spec.params,
        points,
        seed,
        tolerances::EXCLUSION_MARGIN,
    )?;
    let opts = ClassifyOptions::default();
    let mut failures = Vec::new();
    for p in &pts {
        let rep = match &spec.operator {
            Some(op) => classify_point(op, p, &opts)?,
            None => {
                let inv = invariants_from_exprs(&spec.charpoly_exprs, p, &spec.params)?;
                classify_invariants(&inv, &opts)
            }
        };
        if rep.regime != Regime::Rank1Locus {
            failures.push(format!(
                "{} classified {} (rank {})",
                fmt_point(p),
                rep.regime,
                rep.rank
            ));
        }
    }
    let mut rec = CheckRecord {
        id: format!("{prefix}/singularity/rank1"),
        status: if failures.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        },
        points: Some(pts.len() as u64),
        residual: None,
        threshold: None,
        diagnostics: vec![format!(
            "{} of {} points classified Rank1Locus",
            pts.len() - failures.len(),
            pts.len()
        )],
    };
    for f in failures.into_iter().take(5) {
        rec = rec.with_diagnostic(f);
    }
    Ok(rec)
}

fn spectrum_record(prefix: &str, spec: &FamilySpec) -> Result<CheckRecord, CatalogError> {
    let rep = spectrum_diagnostics(spec)?;
    let status = match rep.status {
        SpectrumStatus::Match => Status::Pass,
        SpectrumStatus::KnownSignDiscrepancy => Status::Warn,
        SpectrumStatus::NotApplicable => Status::Info,
        SpectrumStatus::Mismatch => Status::Fail,
    };
    let mut diagnostics = vec![format!(
        "σ at singular point: ({})",
        rep.sigma
            .iter()
            .map(|v| format!("{v:.9}"))
            .collect::<Vec<_>>()
            .join(", ")
    )];
    diagnostics.extend(rep.messages);
    Ok(CheckRecord {
        id: format!("{prefix}/spectrum/normal-form"),
        status,
        points: Some(1),
        residual: None,
        threshold: None,
        diagnostics,
    })
}

/// One-dimensional Halton arguments in `[-0.5, 0.5]` for the rank-1
/// residual systems.
fn residual_xs(count: usize, seed: u64) -> Vec<f64> {
    sample_points(
        &SampleBox::cube(0.5, 1),
        &[],
        &crate::expr::ParamEnv::new(),
        count,
        seed,
        tolerances::EXCLUSION_MARGIN,
    )
    .expect("unconstrained sampling cannot fail")
    .into_iter()
    .map(|p| p[0])
    .collect()
}

/// Two-dimensional Halton arguments in `[-0.4, 0.4]²` for the fold residual
/// systems.
fn residual_args2(count: usize, seed: u64) -> Vec<[f64; 2]> {
    sample_points(
        &SampleBox::cube(0.4, 2),
        &[],
        &crate::expr::ParamEnv::new(),
        count,
        seed,
        tolerances::EXCLUSION_MARGIN,
    )
    .expect("unconstrained sampling cannot fail")
    .into_iter()
    .map(|p| [p[0], p[1]])
    .collect()
}

/// The family's full battery: torsion (both paths), coefficient match,
/// covector identity, residual systems with their documented negative
/// controls, singularity regime, and singular-point spectrum diagnostics.
pub fn run_family_battery(
    spec: &FamilySpec,
    opts: &BatteryOptions,
) -> Result<Vec<CheckRecord>, CatalogError> {
    let prefix = spec.label.clone();
    let mut records = Vec::new();

    if let Some(op) = &spec.operator {
        records.extend(torsion_records(
            &prefix,
            op,
            opts.points,
            opts.seed,
            opts.torsion_tol,
        )?);
        records.push(charpoly_match_record(&prefix, spec, opts.points, opts.seed)?);
        records.push(covector_record(&prefix, op, opts.identity_points, opts.seed)?);
    }

    match spec.id {
        FamilyId::T2C1 | FamilyId::T2C2 | FamilyId::T2C3 => {
            records.push(rank1_record(&prefix, spec, opts.identity_points, opts.seed)?);
            let xs = residual_xs(opts.residual_args, opts.seed);
            for r in t2_ode_residuals(spec, &xs)? {
                records.push(CheckRecord::residual_check(
                    format!("{prefix}/residual/{}", r.id),
                    r.max_abs,
                    tolerances::RESIDUAL_SOLUTION,
                    r.points,
                ));
            }
            let ts = [-1.0, -0.35, 0.0, 0.4, 1.0];
            let fr = t2_factorization_residual(spec, &xs, &ts)?;
            records.push(CheckRecord::residual_check(
                format!("{prefix}/residual/{}", fr.id),
                fr.max_abs,
                tolerances::RESIDUAL_SOLUTION,
                fr.points,
            ));
            if spec.id == FamilyId::T2C2 {
                let nc = t2_negative_control(&xs)?;
                records.push(CheckRecord::negative_control(
                    format!("{prefix}/residual/{}", nc.id),
                    nc.max_abs,
                    tolerances::RESIDUAL_NEGATIVE_CONTROL,
                    nc.points,
                ));
            }
            if spec.operator.is_none() {
                // Candidate-realization experiment; outcome reported, never
                // asserted.
                let (worst, n) = t2_companion_experiment(spec, opts.identity_points, opts.seed)?;
                records.push(CheckRecord::info(
                    format!("{prefix}/experiment/companion-field"),
                    vec![format!(
                        "companion field of the displayed coefficients: max scaled torsion {worst:.3e} over {n} points"
                    )],
                ));
            }
        }
        FamilyId::T3 | FamilyId::T4 | FamilyId::T5 => {
            records.push(fold_record(&prefix, spec)?);
            let args = residual_args2(opts.residual_args, opts.seed);
            for r in pde_residuals(spec, &args)? {
                records.push(CheckRecord::residual_check(
                    format!("{prefix}/residual/{}", r.id),
                    r.max_abs,
                    tolerances::RESIDUAL_SOLUTION,
                    r.points,
                ));
            }
            if spec.id == FamilyId::T4 {
                let c = spec.param("c").expect("T4 has parameter c");
                let nc = t4_negative_control(c, &args)?;
                records.push(CheckRecord::negative_control(
                    format!("{prefix}/residual/{}", nc.id),
                    nc.max_abs,
                    tolerances::RESIDUAL_NEGATIVE_CONTROL,
                    nc.points,
                ));
            }
            records.push(spectrum_record(&prefix, spec)?);
        }
        FamilyId::T3R => {
            records.push(fold_record(&prefix, spec)?);
            records.push(spectrum_record(&prefix, spec)?);
        }
    }

    Ok(records)
}

/// Battery over the default instances of the given families, plus the
/// parameter-free diagnostics attached to a family as a whole.
pub fn run_catalog(
    ids: &[FamilyId],
    opts: &BatteryOptions,
) -> Result<Vec<CheckRecord>, CatalogError> {
    let mut records = Vec::new();
    for id in ids {
        for spec in catalog::default_instances(*id)? {
            records.extend(run_family_battery(&spec, opts)?);
        }
        if *id == FamilyId::T5 {
            records.push(CheckRecord::info(
                "T5/diagnostic/nonsmooth-branch".to_string(),
                catalog::t5_branch_blowup_diagnostic()?,
            ));
        }
    }
    Ok(records)
}

/// Assemble the catalog report with a digest of the run configuration.
pub fn catalog_report(ids: &[FamilyId], opts: &BatteryOptions) -> Result<Report, CatalogError> {
    let id_list: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
    let config = format!(
        "catalog:families={};points={};identity_points={};residual_args={};seed={};torsion_tol={:e}",
        id_list.join(","),
        opts.points,
        opts.identity_points,
        opts.residual_args,
        opts.seed,
        opts.torsion_tol
    );
    let records = run_catalog(ids, opts)?;
    Ok(Report::new(digest_str(&config), records))
}
