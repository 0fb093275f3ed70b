//! Cross-module properties on randomized inputs: oracle equivalence of the
//! two torsion paths, similarity invariance of the invariants, and
//! constructor round trips. The acceptance suite runs the full-volume
//! versions; these are the fast development-loop variants.

use nijenhuis_core::linalg::{charpoly, Mat};
use nijenhuis_core::testutil::{
    conjugate_field, random_point, random_polynomial_field, random_prescribed_field, SplitMix64,
};

#[test]
fn torsion_paths_agree_on_random_polynomial_fields() {
    let mut rng = SplitMix64::new(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let field = random_polynomial_field(&mut rng, 3);
        let p = random_point(&mut rng, 3, 0.5);
        let a = field.torsion_coordinate(&p).unwrap();
        let b = field.torsion_oracle(&p).unwrap();
        worst = worst.max(a.max_diff(&b));
    }
    assert!(worst <= 1e-10, "worst disagreement {worst}");
}

#[test]
fn invariants_are_similarity_invariant() {
    let mut rng = SplitMix64::new(99);
    // Constant invertible conjugators with exactly representable entries.
    let p_mats = [
        Mat::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]),
        Mat::from_rows(&[
            vec![1.0, 0.5, -0.25],
            vec![0.0, 1.0, 0.5],
            vec![0.0, 0.0, 2.0],
        ]),
        Mat::from_rows(&[
            vec![2.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
        ]),
    ];
    for pm in &p_mats {
        for _ in 0..20 {
            let field = random_polynomial_field(&mut rng, 3);
            let conj = conjugate_field(&field, pm);
            let x = random_point(&mut rng, 3, 0.5);
            let a = field.invariants_at(&x).unwrap();
            let b = conj.invariants_at(&x).unwrap();
            for (u, v) in a.sigma.coeffs.iter().zip(&b.sigma.coeffs) {
                assert!(
                    (u - v).abs() <= 1e-9 * (1.0 + u.abs().max(v.abs())),
                    "{u} vs {v}"
                );
            }
        }
    }
}

#[test]
fn constructor_roundtrip_on_random_coefficients() {
    let mut rng = SplitMix64::new(5);
    let mut done = 0;
    while done < 30 {
        let field = random_prescribed_field(&mut rng);
        let p = random_point(&mut rng, 3, 0.4);
        let inv = field.invariants_at(&p).unwrap();
        // Skip draws that land near a differential singularity.
        if inv.jacobian.det().abs() < 0.05 {
            continue;
        }
        let l = field.matrix_at(&p).unwrap();
        let cp = charpoly(&l);
        for (a, b) in cp.coeffs.iter().zip(&inv.sigma.coeffs) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
        // The constructed operator is torsion-free near the point.
        let t = field.torsion_at(&p).unwrap();
        let scale = field.scale_at(&p).unwrap();
        assert!(
            t.max_abs() <= 1e-8 * (1.0 + scale),
            "torsion {} at {:?}",
            t.max_abs(),
            p
        );
        done += 1;
    }
}
