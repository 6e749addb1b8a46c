mod common;

use std::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

use oscnh::cell::CellConfig;
use oscnh::fbar::HomogenizedOperator;
use oscnh::multiscale::{
    composite_barrier_check, projection_family, second_homogenization, slab_slopes, BarrierConfig, BarrierKind,
    ScaleBook, ScaleGates, SlabSlopes,
};
use oscnh::operators::Coefficients;
use oscnh::{Direction, Error, Expr, NeumannData, OperatorSpec};
use proptest::prelude::*;

/// `1.5 + ¼(sin 2πy₁ + cos 2πy₂)`.
fn quarter_trig() -> NeumannData {
    NeumannData::new(Expr::add(vec![Expr::c(1.5), Expr::sin_mode(0.25, [1, 0]), Expr::cos_mode(0.25, [0, 1])])).unwrap()
}

fn book(gates: ScaleGates) -> ScaleBook {
    ScaleBook::new(
        0.25,
        &Direction::e2(),
        &Direction::from_angle(FRAC_PI_2 + 0.07 * SQRT_2 / 1.4),
        &Direction::from_angle(FRAC_PI_2 - 0.05 / 1.1),
        1.0 / 32.0,
        gates,
    )
    .unwrap()
}

#[test]
fn family_examples() {
    let c = projection_family(&NeumannData::constant(1.5).unwrap(), 0.25).unwrap();
    assert_eq!(c.m, 5);
    assert!(c.members.iter().all(|g| g.eval([0.1, 0.9]) == 1.5));
    let f = projection_family(&quarter_trig(), 0.25).unwrap();
    for y1 in [0.0, 0.13, 0.5, 0.77] {
        let want = 1.5 + 0.25 * (TAU * y1).sin();
        assert!((f.members[1].eval([y1, 0.4]) - want).abs() < 1e-14);
    }
    // Adjacent slices differ by ¼|cos(2πδi) − cos(2πδ(i+1))| ≤ ¼·2π·δ.
    let gap = f.adjacent_gap(512);
    assert!((gap - 0.25).abs() < 1e-12, "{gap}");
    assert!(gap <= 0.25 * TAU * 0.25);
    assert!(projection_family(&quarter_trig(), 1.0).is_err());
}

#[test]
fn slab_slopes_of_constant_and_fourier_data() {
    let cfg = CellConfig::default();
    let c = projection_family(&NeumannData::constant(1.5).unwrap(), 0.25).unwrap();
    let s = slab_slopes(&Direction::from_angle(1.2), [0.0, 0.0], 1.0 / 16.0, 1, &c, &OperatorSpec::pucci_plus(1.0, 2.0).unwrap(), &cfg).unwrap();
    assert!(s.mu_k.iter().all(|m| (m - 1.5).abs() < 1e-9), "{:?}", s.mu_k);
    // Each member is its mean plus a zero-mean mode in x₁; the mean is
    // 1.5 + ¼cos(2π·δi) at slice i.
    let f = projection_family(&quarter_trig(), 0.25).unwrap();
    let s = slab_slopes(&Direction::e2(), [0.0, 0.0], 1.0 / 16.0, 1, &f, &OperatorSpec::laplacian(), &cfg).unwrap();
    for (i, m) in s.mu_k.iter().enumerate() {
        let want = 1.5 + 0.25 * (TAU * 0.25 * i as f64).cos();
        assert!((m - want).abs() <= 10.0 * s.h * s.h, "slice {i}: {m} vs {want}");
    }
    assert!(matches!(
        slab_slopes(&Direction::e2(), [0.0, 0.0], 1.0 / 16.0, 2, &f, &OperatorSpec::laplacian(), &cfg),
        Err(Error::InvalidInput(_))
    ));
}

fn pattern(mu: Vec<f64>) -> SlabSlopes {
    let n = mu.len();
    SlabSlopes { nu: Direction::e2(), eps: 1.0 / 32.0, n: 1, h: 1.0 / 256.0, mu_k: mu, lateral_sensitivity: vec![0.0; n], stats: vec![] }
}

#[test]
fn second_homogenization_examples() {
    let cfg = CellConfig::default();
    let lap = OperatorSpec::laplacian();
    let fbar = HomogenizedOperator::Spec(lap.clone());
    let h = 1.0 / 256.0;
    let flat = second_homogenization(&pattern(vec![1.5, 1.5]), &Direction::e2(), 1.0 / 32.0, 1, 4, &lap, Some(&fbar), &cfg).unwrap();
    assert!((flat.slope_homogenized - 1.5).abs() < 1e-9 && (flat.slope_oscillatory - 1.5).abs() < 1e-9);
    let alt = second_homogenization(&pattern(vec![1.4, 1.6]), &Direction::e2(), 1.0 / 32.0, 1, 4, &lap, Some(&fbar), &cfg).unwrap();
    assert!((alt.slope_homogenized - 1.5).abs() <= 10.0 * h * h, "{alt:?}");
    assert!(matches!(
        second_homogenization(&pattern(vec![1.4, 1.6]), &Direction::e2(), 1.0 / 32.0, 1, 20, &lap, Some(&fbar), &cfg),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn oscillating_operator_tracks_its_homogenization() {
    // For a(y) = α(y)·I the invariant measure is ∝ 1/α, so the homogenized
    // operator is −H·tr with H the harmonic mean of α = 2 + ½ sin 2πy₀.
    let harmonic = (4.0f64 - 0.25).sqrt();
    let fbar = HomogenizedOperator::Spec(
        OperatorSpec::linear(Coefficients::constant(harmonic, 0.0, harmonic), harmonic, harmonic).unwrap(),
    );
    let (eps, n) = (1.0 / 32.0, 1);
    let r = second_homogenization(
        &pattern(vec![1.4, 1.6, 1.5]),
        &Direction::from_angle(1.3),
        eps,
        n,
        4,
        &common::oscillating_isotropic(),
        Some(&fbar),
        &CellConfig::default(),
    )
    .unwrap();
    assert!(r.gap <= 0.25 * n as f64 * eps, "{r:?}");
}

#[test]
fn scale_book_gates() {
    let strict = book(ScaleGates::default());
    assert_eq!((strict.n, strict.m), (3, 5));
    assert!(strict.ordering_ok);
    assert!(!strict.eps0_gate_ok && !strict.eps_gate_ok);
    let relaxed = book(ScaleGates::relaxed());
    assert!(relaxed.eps_gate_ok);
    assert!(relaxed.warnings.iter().any(|w| w.contains("relaxed")));
}

#[test]
fn composite_with_constant_data_is_a_supersolution() {
    let b = book(ScaleGates::relaxed());
    let g = NeumannData::constant(1.5).unwrap();
    let r = composite_barrier_check(
        1.0 / 32.0,
        &b,
        &OperatorSpec::laplacian(),
        &g,
        1.5,
        BarrierKind::Super,
        &CellConfig::default(),
        &BarrierConfig::default(),
    )
    .unwrap();
    assert!(r.interior_ok(), "{r:?}");
    assert_eq!(r.dominates(), Some(true));
    assert!(r.slab_slopes.iter().all(|m| (m - 1.5).abs() < 1e-9));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn family_slices_are_exact_and_cover_g(delta in 0.05f64..0.9, y1 in 0.0f64..1.0, pick in 0usize..100) {
        let g = NeumannData::standard_trig();
        let f = projection_family(&g, delta).unwrap();
        prop_assert_eq!(f.m, (1.0 / delta).floor() as usize + 1);
        let i = pick % f.m;
        prop_assert!((f.members[i].eval([y1, 0.123]) - g.eval([y1, delta * i as f64])).abs() < 1e-13);
        let bound = g.holder_constant * delta.powf(g.holder_beta) + 1e-12;
        prop_assert!(f.adjacent_gap(64) <= bound);
        prop_assert!(f.coverage(&g, 24) <= bound);
    }

    #[test]
    fn piecewise_shift_is_invisible_to_the_homogenized_slope(shift in 0usize..3) {
        let mut mu = vec![1.3, 1.5, 1.7];
        mu.rotate_left(shift);
        let lap = OperatorSpec::laplacian();
        let fbar = HomogenizedOperator::Spec(lap.clone());
        let r = second_homogenization(&pattern(mu), &Direction::e2(), 1.0 / 32.0, 1, 2, &lap, Some(&fbar), &CellConfig::default()).unwrap();
        prop_assert!((r.slope_homogenized - 1.5).abs() <= 1e-4, "{:?}", r);
    }
}
