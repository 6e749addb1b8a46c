mod common;

use oscnh::operators::{check_ellipticity, sample_g, Coefficients};
use oscnh::{eval_operator, Error, Expr, NeumannData, OperatorSpec, SymmetricMatrix2};
use proptest::prelude::*;

#[test]
fn pucci_plus_formula() {
    let op = OperatorSpec::pucci_plus(1.0, 2.0).unwrap();
    assert_eq!(eval_operator(&op, &SymmetricMatrix2::diag(1.0, -1.0), [0.3, 0.4]), -1.0);
}

#[test]
fn every_variant_vanishes_at_zero() {
    for (name, op) in common::battery() {
        for y in [[0.0, 0.0], [0.37, 0.81]] {
            assert_eq!(eval_operator(&op, &SymmetricMatrix2::diag(0.0, 0.0), y), 0.0, "{name}");
        }
    }
}

#[test]
fn laplacian_is_minus_trace() {
    let op = OperatorSpec::laplacian();
    assert_eq!(eval_operator(&op, &SymmetricMatrix2::diag(1.0, 2.0), [0.9, 0.1]), -3.0);
}

#[test]
fn ellipticity_checks() {
    let pucci = check_ellipticity(&OperatorSpec::pucci_plus(1.0, 2.0).unwrap(), 10_000, 1).unwrap();
    assert!(pucci.max_violation <= 1e-12, "{pucci:?}");
    let osc = check_ellipticity(&common::oscillating_isotropic(), 10_000, 2).unwrap();
    assert!(osc.max_violation <= 1e-10);
    // Oracle: 2 + ½ sin 2πy₀ ranges over [1.5, 2.5], so λ = 3 is false.
    let a = Expr::add(vec![Expr::c(2.0), Expr::sin_mode(0.5, [1, 0])]);
    let wrong = OperatorSpec::linear(Coefficients::from_exprs(a.clone(), Expr::c(0.0), a).unwrap(), 3.0, 3.0).unwrap();
    assert!(matches!(check_ellipticity(&wrong, 100, 3), Err(Error::SpecRejected(_))));
    for (name, op) in common::battery() {
        assert!(check_ellipticity(&op, 2000, 4).is_ok(), "{name}");
    }
}

#[test]
fn neumann_data_samples() {
    let c = NeumannData::constant(1.5).unwrap();
    assert_eq!(sample_g(&c, [0.3, 7.9]), 1.5);
    let s = NeumannData::new(Expr::add(vec![Expr::c(1.5), Expr::sin_mode(0.5, [1, 0])])).unwrap();
    assert!((sample_g(&s, [0.25, 0.0]) - 2.0).abs() < 1e-15);
    let t = NeumannData::standard_trig();
    assert!((sample_g(&t, [0.0, 0.0]) - sample_g(&t, [3.0, -5.0])).abs() < 1e-13);
    assert!((t.min() - 1.0).abs() < 1e-3 && (t.max() - 2.0).abs() < 1e-3);
    assert!(NeumannData::constant(2.5).is_err());
}

#[test]
fn eigenvalues_reconstruct() {
    let m = SymmetricMatrix2::new(0.3, -1.2, 2.5);
    let (e, theta) = m.eigen();
    assert!(e[0] >= e[1]);
    let back = SymmetricMatrix2::from_eigen(e, theta);
    assert!((back.m11 - m.m11).abs() < 1e-12 && (back.m12 - m.m12).abs() < 1e-12 && (back.m22 - m.m22).abs() < 1e-12);
}

fn matrix() -> impl Strategy<Value = SymmetricMatrix2> {
    (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0).prop_map(|(a, b, c)| SymmetricMatrix2::new(a, b, c))
}

fn psd() -> impl Strategy<Value = SymmetricMatrix2> {
    (0.0f64..3.0, 0.0f64..3.0, 0.0f64..3.14).prop_map(|(a, b, t)| SymmetricMatrix2::from_eigen([a.max(b), a.min(b)], t))
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| [a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn eigen_decomposition_is_accurate(m in matrix()) {
        let (e, t) = m.eigen();
        prop_assert!(e[0] >= e[1]);
        let b = SymmetricMatrix2::from_eigen(e, t);
        let err = (b.m11 - m.m11).abs().max((b.m12 - m.m12).abs()).max((b.m22 - m.m22).abs());
        prop_assert!(err <= 1e-12 * (1.0 + m.norm()));
    }

    #[test]
    fn operators_are_positively_homogeneous(m in matrix(), y in point(), t in 0.01f64..50.0) {
        for (name, op) in common::battery() {
            let a = eval_operator(&op, &m.scale(t), y);
            let b = t * eval_operator(&op, &m, y);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{}: {} vs {}", name, a, b);
        }
    }

    #[test]
    fn operators_are_periodic(m in matrix(), y in point(), z0 in -20i32..20, z1 in -20i32..20) {
        for (name, op) in common::battery() {
            let a = eval_operator(&op, &m, y);
            let b = eval_operator(&op, &m, [y[0] + z0 as f64, y[1] + z1 as f64]);
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + m.norm()) * 10.0, "{}: {} vs {}", name, a, b);
        }
    }

    #[test]
    fn operators_are_monotone(m in matrix(), n in psd(), y in point()) {
        for (name, op) in common::battery() {
            let gap = eval_operator(&op, &m, y) - eval_operator(&op, &m.plus(&n), y);
            prop_assert!(gap >= op.lambda * n.norm() - 1e-10, "{}: gap {} for ‖N‖ {}", name, gap, n.norm());
            if n.norm() > 1e-9 {
                prop_assert!(gap > 0.0, "{}", name);
            }
        }
    }

    #[test]
    fn pucci_operators_coincide_for_equal_constants(m in matrix(), l in 0.1f64..5.0, y in point()) {
        let plus = eval_operator(&OperatorSpec::pucci_plus(l, l).unwrap(), &m, y);
        let minus = eval_operator(&OperatorSpec::pucci_minus(l, l).unwrap(), &m, y);
        prop_assert!((plus - minus).abs() <= 1e-12 * (1.0 + m.norm()));
        prop_assert!((plus + l * m.trace()).abs() <= 1e-12 * (1.0 + m.norm()));
    }

    #[test]
    fn neumann_data_is_periodic_and_in_range(y in point(), z0 in -50i32..50, z1 in -50i32..50) {
        let g = NeumannData::standard_trig();
        let a = sample_g(&g, y);
        prop_assert!((a - sample_g(&g, [y[0] + z0 as f64, y[1] + z1 as f64])).abs() < 1e-13);
        prop_assert!(a >= 1.0 - 1e-12 && a <= 2.0 + 1e-12);
        prop_assert!(a >= g.min() - 1e-3 && a <= g.max() + 1e-3);
    }

    #[test]
    fn neumann_data_respects_its_holder_bound(x in point(), y in point()) {
        let g = NeumannData::standard_trig();
        let d = (x[0] - y[0]).hypot(x[1] - y[1]);
        prop_assert!((g.eval(x) - g.eval(y)).abs() <= g.holder_constant * d.powf(g.holder_beta) + 1e-12);
    }
}
