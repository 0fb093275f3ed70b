//! Acceptance suite: every release criterion as one test, each printing a
//! single PASS line (run with `--nocapture` to see them). Thresholds are
//! pinned in `nijenhuis_core::tolerances`.

use std::process::Command;

use nijenhuis_core::catalog::{
    default_instances, pde_residuals, spectrum_diagnostics, t2_negative_control,
    t2_ode_residuals, t4_negative_control, FamilyId, SpectrumStatus,
};
use nijenhuis_core::expr::parse_expr;
use nijenhuis_core::linalg::{charpoly, CubicRoots};
use nijenhuis_core::report::Status;
use nijenhuis_core::sample::{sample_points, SampleBox};
use nijenhuis_core::singularity::{classify_invariants, classify_point, ClassifyOptions, Regime};
use nijenhuis_core::testutil::{
    random_point, random_polynomial_field, random_prescribed_field, SplitMix64,
};
use nijenhuis_core::tolerances;
use nijenhuis_core::verify::{charpoly_match_record, covector_record, torsion_records};
use nijenhuis_core::ParamEnv;

const SEED: u64 = 7;

fn pass(n: u32, name: &str) {
    println!("ACCEPTANCE {n:02} {name}: PASS");
}

fn fold_family_instances() -> Vec<nijenhuis_core::catalog::FamilySpec> {
    let mut specs = Vec::new();
    for id in [FamilyId::T3, FamilyId::T3R, FamilyId::T4, FamilyId::T5] {
        specs.extend(default_instances(id).unwrap());
    }
    specs
}

fn operator_instances() -> Vec<nijenhuis_core::catalog::FamilySpec> {
    FamilyId::ALL
        .iter()
        .flat_map(|id| default_instances(*id).unwrap())
        .filter(|s| s.operator.is_some())
        .collect()
}

/// Criterion 1: torsion of every fold-family instance (both signs, the
/// standard parameter sweep, 200 quasi-random points, both implementations)
/// stays below the scale-aware threshold.
#[test]
fn criterion_01_torsion_vanishing() {
    let specs = fold_family_instances();
    assert_eq!(specs.len(), 8 + 8 + 8 + 10);
    for spec in &specs {
        let op = spec.operator.as_ref().unwrap();
        let records =
            torsion_records(&spec.label, op, 200, SEED, tolerances::TORSION_EPS_BASE).unwrap();
        for r in &records {
            assert_eq!(
                r.status,
                Status::Pass,
                "{}: residual {:?} (diagnostics {:?})",
                r.id,
                r.residual,
                r.diagnostics
            );
        }
    }
    pass(1, "torsion vanishing on all fold families");
}

/// Criterion 2: the two torsion implementations agree componentwise to 1e-10
/// on 1000 random polynomial operator fields of degree at most two.
#[test]
fn criterion_02_oracle_equivalence() {
    let mut rng = SplitMix64::new(20240 + SEED);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let field = random_polynomial_field(&mut rng, 3);
        let p = random_point(&mut rng, 3, 0.5);
        let a = field.torsion_coordinate(&p).unwrap();
        let b = field.torsion_oracle(&p).unwrap();
        worst = worst.max(a.max_diff(&b));
    }
    assert!(
        worst <= tolerances::ORACLE_AGREEMENT,
        "worst componentwise disagreement {worst}"
    );
    pass(2, "torsion oracle equivalence on 1000 random fields");
}

/// Criterion 3: the characteristic polynomial of every catalog operator
/// matches its displayed coefficient expressions at 200 points.
#[test]
fn criterion_03_charpoly_identity() {
    for spec in operator_instances() {
        let rec = charpoly_match_record(&spec.label, &spec, 200, SEED).unwrap();
        assert_eq!(rec.status, Status::Pass, "{}: {:?}", rec.id, rec.residual);
    }
    pass(3, "characteristic-polynomial identity on all catalog operators");
}

/// Criterion 4: all residual systems evaluate below 1e-11 on the catalogued
/// solutions at 100 arguments, and every documented negative control
/// exceeds 1e-4.
#[test]
fn criterion_04_residual_systems() {
    let xs: Vec<f64> = sample_points(
        &SampleBox::cube(0.5, 1),
        &[],
        &ParamEnv::new(),
        100,
        SEED,
        tolerances::EXCLUSION_MARGIN,
    )
    .unwrap()
    .into_iter()
    .map(|p| p[0])
    .collect();
    let args2: Vec<[f64; 2]> = sample_points(
        &SampleBox::cube(0.4, 2),
        &[],
        &ParamEnv::new(),
        100,
        SEED,
        tolerances::EXCLUSION_MARGIN,
    )
    .unwrap()
    .into_iter()
    .map(|p| [p[0], p[1]])
    .collect();

    for id in [FamilyId::T2C1, FamilyId::T2C2, FamilyId::T2C3] {
        for spec in default_instances(id).unwrap() {
            for r in t2_ode_residuals(&spec, &xs).unwrap() {
                assert!(
                    r.max_abs < tolerances::RESIDUAL_SOLUTION,
                    "{} {}: {}",
                    spec.label,
                    r.id,
                    r.max_abs
                );
            }
        }
    }
    for id in [FamilyId::T3, FamilyId::T4, FamilyId::T5] {
        for spec in default_instances(id).unwrap() {
            for r in pde_residuals(&spec, &args2).unwrap() {
                assert!(
                    r.max_abs < tolerances::RESIDUAL_SOLUTION,
                    "{} {}: {}",
                    spec.label,
                    r.id,
                    r.max_abs
                );
            }
        }
    }
    let nc = t2_negative_control(&xs).unwrap();
    assert!(nc.max_abs > tolerances::RESIDUAL_NEGATIVE_CONTROL, "{}", nc.max_abs);
    let nc = t4_negative_control(1.0, &args2).unwrap();
    assert!(nc.max_abs > tolerances::RESIDUAL_NEGATIVE_CONTROL, "{}", nc.max_abs);
    pass(4, "residual systems vanish on solutions; negative controls detected");
}

/// Criterion 5: the companion-conjugation constructor round-trips the
/// characteristic polynomial to 1e-9 and yields torsion below 1e-8·scale
/// near the construction point, over 100 random nondegenerate coefficient
/// triples.
#[test]
fn criterion_05_constructor_roundtrip() {
    let mut rng = SplitMix64::new(50 + SEED);
    let mut done = 0;
    while done < 100 {
        let field = random_prescribed_field(&mut rng);
        let p = random_point(&mut rng, 3, 0.4);
        let inv = field.invariants_at(&p).unwrap();
        if inv.jacobian.det().abs() < 0.05 {
            continue; // nondegeneracy check at the sample point
        }
        let l = field.matrix_at(&p).unwrap();
        let cp = charpoly(&l);
        for (a, b) in cp.coeffs.iter().zip(&inv.sigma.coeffs) {
            assert!(
                (a - b).abs() <= tolerances::CONSTRUCT_ROUNDTRIP * (1.0 + b.abs()),
                "round trip {a} vs {b}"
            );
        }
        for step in [[0.02, 0.0, -0.01], [-0.015, 0.01, 0.02]] {
            let q: Vec<f64> = p.iter().zip(step).map(|(a, d)| a + d).collect();
            if let (Ok(t), Ok(scale)) = (field.torsion_at(&q), field.scale_at(&q)) {
                assert!(
                    t.max_abs() <= tolerances::CONSTRUCT_TORSION * (1.0 + scale),
                    "torsion {} near {:?}",
                    t.max_abs(),
                    p
                );
            }
        }
        done += 1;
    }
    pass(5, "constructor round trip and torsion on 100 random triples");
}

/// Criterion 6: the rank-1 realization classifies Rank1Locus at 100 points;
/// every fold family classifies Rank2Fold at the origin with |h1| within
/// 1e-6 and |h2| within 1e-6 of 2; prescribed fields classify Regular at
/// nondegenerate points.
#[test]
fn criterion_06_singularity_classification() {
    let opts = ClassifyOptions::default();

    // Rank-1 realization.
    let spec = default_instances(FamilyId::T2C1)
        .unwrap()
        .into_iter()
        .find(|s| s.operator.is_some())
        .unwrap();
    let op = spec.operator.as_ref().unwrap();
    let pts = sample_points(
        op.domain(),
        &[],
        op.params(),
        100,
        SEED,
        tolerances::EXCLUSION_MARGIN,
    )
    .unwrap();
    assert_eq!(pts.len(), 100);
    for p in &pts {
        let rep = classify_point(op, p, &opts).unwrap();
        assert_eq!(rep.rank, 1, "at {p:?}");
        assert_eq!(rep.regime, Regime::Rank1Locus, "at {p:?}");
    }

    // Fold families at the origin.
    for id in [FamilyId::T3, FamilyId::T4, FamilyId::T5] {
        for spec in default_instances(id).unwrap() {
            let op = spec.operator.as_ref().unwrap();
            let rep = classify_point(op, &[0.0, 0.0, 0.0], &opts).unwrap();
            assert_eq!(rep.regime, Regime::Rank2Fold, "{}", spec.label);
            let m = rep.morse.unwrap();
            assert!(m.h1.abs() <= tolerances::MORSE_TOL, "{}: h1 {}", spec.label, m.h1);
            assert!(
                (m.h2.abs() - 2.0).abs() <= tolerances::MORSE_TOL,
                "{}: h2 {}",
                spec.label,
                m.h2
            );
            let expected = spec.expected_h2_sign.unwrap();
            assert!(m.h2 * expected > 0.0, "{}: h2 sign {}", spec.label, m.h2);
        }
    }

    // Prescribed (companion-conjugate) fields are regular where the
    // coefficients are independent.
    let vars: Vec<String> = vec!["x".into(), "y".into(), "z".into()];
    let sigma: Vec<_> = ["x", "y", "z"]
        .iter()
        .map(|t| parse_expr(t, &vars, &[]).unwrap())
        .collect();
    let field =
        nijenhuis_core::PrescribedField::new(sigma, vars, ParamEnv::new()).unwrap();
    let rep = classify_invariants(&field.invariants_at(&[0.1, -0.2, 0.3]).unwrap(), &opts);
    assert_eq!(rep.regime, Regime::Regular);
    let mut rng = SplitMix64::new(60 + SEED);
    let mut done = 0;
    while done < 25 {
        let f = random_prescribed_field(&mut rng);
        let p = random_point(&mut rng, 3, 0.4);
        let inv = f.invariants_at(&p).unwrap();
        if inv.jacobian.det().abs() < 0.05 {
            continue;
        }
        assert_eq!(classify_invariants(&inv, &opts).regime, Regime::Regular);
        done += 1;
    }
    pass(6, "singularity classification across all regimes");
}

/// Criterion 7: singular-point spectra match the catalogued normal forms:
/// T4 gives the root multiset {0, c, −c}, T5 one real root and a complex
/// pair solving t³ + c, and T3 computes t²(t + c) while raising the
/// documented warning against the catalogued t²(t − c).
#[test]
fn criterion_07_spectrum_diagnostics() {
    for spec in default_instances(FamilyId::T4).unwrap() {
        let rep = spectrum_diagnostics(&spec).unwrap();
        assert_eq!(rep.status, SpectrumStatus::Match, "{}", spec.label);
        let c = spec.param("c").unwrap();
        match rep.roots {
            CubicRoots::ThreeReal(r) => {
                let mut want = [0.0, c, -c];
                want.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for (a, b) in r.iter().zip(want) {
                    assert!((a - b).abs() <= tolerances::SPECTRUM_MATCH * (1.0 + c.abs()));
                }
            }
            _ => panic!("{}: expected real spectrum", spec.label),
        }
    }
    for spec in default_instances(FamilyId::T5).unwrap() {
        let rep = spectrum_diagnostics(&spec).unwrap();
        let c = spec.param("c").unwrap();
        if c == 0.0 {
            assert_eq!(rep.status, SpectrumStatus::NotApplicable, "{}", spec.label);
        } else {
            assert_eq!(rep.status, SpectrumStatus::Match, "{}", spec.label);
            assert!(matches!(rep.roots, CubicRoots::OneReal { .. }));
        }
    }
    for spec in default_instances(FamilyId::T3).unwrap() {
        let rep = spectrum_diagnostics(&spec).unwrap();
        assert_eq!(
            rep.status,
            SpectrumStatus::KnownSignDiscrepancy,
            "{}",
            spec.label
        );
        let c = spec.param("c").unwrap();
        match rep.roots {
            CubicRoots::ThreeReal(r) => {
                // Computed form t²(t + c): roots {0, 0, −c}.
                let mut want = [0.0, 0.0, -c];
                want.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for (a, b) in r.iter().zip(want) {
                    assert!((a - b).abs() <= tolerances::SPECTRUM_MATCH * (1.0 + c.abs()));
                }
            }
            _ => panic!("{}: expected real spectrum", spec.label),
        }
    }
    pass(7, "singular-point spectra incl. documented T3 warning");
}

/// Criterion 8: the covector identity Lᵀ∇σ_i = ∇σ_{i+1} − σ_i∇σ_1 holds to
/// 1e-9 at 100 points for every catalog operator family.
#[test]
fn criterion_08_covector_identity() {
    for spec in operator_instances() {
        let op = spec.operator.as_ref().unwrap();
        let rec = covector_record(&spec.label, op, 100, SEED).unwrap();
        assert_eq!(rec.status, Status::Pass, "{}: {:?}", rec.id, rec.residual);
    }
    pass(8, "covector identity on all catalog operators");
}

/// Criterion 9: two catalog runs with the same seed produce byte-identical
/// reports (both formats).
#[test]
fn criterion_09_report_determinism() {
    let bin = env!("CARGO_BIN_EXE_nijenhuis");
    for format in ["structured", "human"] {
        let run = || {
            let out = Command::new(bin)
                .args([
                    "catalog", "--family", "all", "--seed", "7", "--format", format,
                ])
                .output()
                .expect("catalog run");
            assert!(out.status.success(), "catalog run failed: {out:?}");
            out.stdout
        };
        let a = run();
        let b = run();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{format} reports differ between runs");
    }
    pass(9, "byte-identical catalog reports");
}

/// Criterion 10: perturbing any single entry of T3/T4/T5 by 1e-3·x produces
/// a torsion failure within a 200-point sweep — the suite detects
/// non-Nijenhuis fields.
#[test]
fn criterion_10_perturbation_power() {
    let vars: Vec<String> = vec!["x".into(), "y".into(), "z".into()];
    let delta = parse_expr("0.001*x", &vars, &[]).unwrap();
    for id in [FamilyId::T3, FamilyId::T4, FamilyId::T5] {
        let spec = default_instances(id)
            .unwrap()
            .into_iter()
            .find(|s| s.param("c") == Some(1.0) && s.sign == Some(nijenhuis_core::catalog::Sign::Upper))
            .unwrap();
        let op = spec.operator.as_ref().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let perturbed = op.with_entry_added(i, j, delta.clone());
                let records = torsion_records(
                    &format!("{}+d{}{}", spec.label, i, j),
                    &perturbed,
                    200,
                    SEED,
                    tolerances::TORSION_EPS_BASE,
                )
                .unwrap();
                let coord = &records[0];
                assert_eq!(
                    coord.status,
                    Status::Fail,
                    "perturbing {} entry ({i},{j}) went undetected: {:?}",
                    spec.label,
                    coord.residual
                );
                assert!(
                    coord.residual.unwrap() > tolerances::TORSION_NEGATIVE_CONTROL / 1e3,
                    "{}: perturbed residual suspiciously small",
                    coord.id
                );
            }
        }
    }
    pass(10, "single-entry perturbations are detected");
}
