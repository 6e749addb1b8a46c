mod common;

use std::f64::consts::TAU;

use oscnh::fbar::{eigenvalue_invariance_check, estimate_fbar, estimate_fbar_with, fbar_table, FbarConfig, HomogenizedOperator};
use oscnh::operators::{DirectionalOperator, Frame, NodeCoefficients};
use oscnh::{OperatorSpec, Result, SymmetricMatrix2};
use proptest::prelude::*;

/// `−a(y₀)∂₁₁ − ∂₂₂` with `a = 1/(2 + sin 2πy₀)`, outside the expression
/// language because of the reciprocal.
struct Reciprocal;

impl DirectionalOperator for Reciprocal {
    fn member_count(&self) -> usize {
        1
    }

    fn node_coefficients(&self, y: [f64; 2], frame: &Frame, out: &mut Vec<NodeCoefficients>) -> Result<()> {
        assert!(frame.is_axis_aligned());
        let a = 1.0 / (2.0 + (TAU * y[0]).sin());
        let b = frame.pull_back(&SymmetricMatrix2::diag(a, 1.0));
        out.clear();
        out.push([b.m11, 0.0, b.m22]);
        Ok(())
    }

    fn apply(&self, s: &[f64; 4], c: &[NodeCoefficients]) -> (f64, [f64; 4], u32) {
        let w = [-c[0][0], -c[0][2], 0.0, 0.0];
        (w[0] * s[0] + w[1] * s[1], w, 0)
    }

    fn uses_diagonals(&self, _frame: &Frame) -> bool {
        false
    }

    fn ellipticity(&self) -> (f64, f64) {
        (1.0 / 3.0, 1.0)
    }
}

fn harmonic_of_isotropic() -> f64 {
    // Harmonic mean of 2 + ½ sin 2πy.
    (4.0f64 - 0.25).sqrt()
}

#[test]
fn y_independent_operators_are_returned_exactly() {
    let cfg = FbarConfig::default();
    let lap = estimate_fbar(&OperatorSpec::laplacian(), &SymmetricMatrix2::diag(1.0, 2.0), &cfg).unwrap();
    assert!((lap.value + 3.0).abs() <= 1e-8 && lap.exact);
    let p = estimate_fbar(&OperatorSpec::pucci_plus(1.0, 2.0).unwrap(), &SymmetricMatrix2::diag(1.0, -1.0), &cfg).unwrap();
    assert!((p.value + 1.0).abs() <= 1e-8);
    let mm = common::min_max();
    let m = SymmetricMatrix2::new(0.3, 0.2, -0.7);
    assert!((estimate_fbar(&mm, &m, &cfg).unwrap().value - mm.eval(&m, [0.0, 0.0])).abs() <= 1e-8);
}

#[test]
fn one_dimensional_harmonic_mean() {
    // Invariant measure ∝ 1/a, so F̄(diag(1, 0)) = −1/⟨1/a⟩ = −1/2.
    let e = estimate_fbar_with(&Reciprocal, &SymmetricMatrix2::diag(1.0, 0.0), &FbarConfig::default()).unwrap();
    assert!((e.value + 0.5).abs() <= 2e-3, "{e:?}");
    assert!(e.rho_sequence.iter().all(|s| s.corrector_osc.is_finite()));
}

#[test]
fn isotropic_oscillation_homogenizes_to_harmonic_mean() {
    let op = common::oscillating_isotropic();
    let m = SymmetricMatrix2::new(0.4, 0.3, 1.0);
    let e = estimate_fbar(&op, &m, &FbarConfig::default()).unwrap();
    assert!((e.value + harmonic_of_isotropic() * m.trace()).abs() <= 2e-3, "{}", e.value);
}

#[test]
fn pucci_invariance_under_rotations() {
    let ms = [SymmetricMatrix2::diag(1.0, -0.5), SymmetricMatrix2::diag(2.0, 0.3), SymmetricMatrix2::new(1.0, 0.4, -1.0)];
    let angles: Vec<f64> = (0..8).map(|k| 0.37 + 0.71 * k as f64).collect();
    for op in [OperatorSpec::pucci_plus(1.0, 2.0).unwrap(), OperatorSpec::pucci_minus(0.5, 3.0).unwrap()] {
        let r = eigenvalue_invariance_check(&op, &ms, &angles, &FbarConfig::default()).unwrap();
        assert!(r.max_deviation <= 2e-9 && r.gate_passed, "{r:?}");
    }
}

#[test]
fn oscillating_invariance_within_extrapolation_error() {
    let r = eigenvalue_invariance_check(
        &common::oscillating_isotropic(),
        &[SymmetricMatrix2::diag(1.0, -0.5)],
        &[0.4, 1.9],
        &FbarConfig::default(),
    )
    .unwrap();
    assert!(r.max_deviation <= 2e-3, "{r:?}");
}

#[test]
fn tables_recover_closed_forms() {
    let cfg = FbarConfig::default();
    let t = fbar_table(&OperatorSpec::pucci_minus(1.0, 2.0).unwrap(), 16, &cfg).unwrap();
    assert!(t.fit.residual < 1e-12);
    assert!((t.value(&SymmetricMatrix2::diag(1.0, -1.0)) - OperatorSpec::pucci_minus(1.0, 2.0).unwrap().eval(&SymmetricMatrix2::diag(1.0, -1.0), [0.0; 2])).abs() < 1e-9);
    let lap = HomogenizedOperator::for_spec(&OperatorSpec::laplacian(), 16, &cfg).unwrap();
    assert!(matches!(lap, HomogenizedOperator::Spec(_)));
    assert!(fbar_table(&OperatorSpec::laplacian(), 4, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn estimate_is_positively_homogeneous(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, t in 0.2f64..4.0) {
        let op = common::oscillating_isotropic();
        let cfg = FbarConfig::default();
        let m = SymmetricMatrix2::new(a, b, c);
        let base = estimate_fbar(&op, &m, &cfg).unwrap().value;
        let scaled = estimate_fbar(&op, &m.scale(t), &cfg).unwrap().value;
        prop_assert!((scaled - t * base).abs() <= 1e-6 * (1.0 + t * base.abs()), "{} vs {}", scaled, t * base);
    }

    #[test]
    fn estimate_is_uniformly_elliptic(a in -1.0f64..1.0, c in -1.0f64..1.0, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0, th in 0.0f64..3.14) {
        let op = common::oscillating_isotropic();
        let cfg = FbarConfig::default();
        let m = SymmetricMatrix2::diag(a, c);
        let n = SymmetricMatrix2::from_eigen([e1.max(e2), e1.min(e2)], th);
        let gap = estimate_fbar(&op, &m, &cfg).unwrap().value - estimate_fbar(&op, &m.plus(&n), &cfg).unwrap().value;
        prop_assert!(gap >= op.lambda * n.norm() - 1e-6, "gap {} for ‖N‖ {}", gap, n.norm());
        prop_assert!(gap <= 2.0 * op.big_lambda * n.trace() + 1e-6);
    }
}
