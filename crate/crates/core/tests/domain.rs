use std::f64::consts::TAU;

use oscnh::cell::{SlopeEntry, SlopeTable};
use oscnh::domain::{
    annulus_error, compact_subset, convergence_study, non_flatness_report, solve_eps_domain, solve_homogenized_domain,
    DomainSpec,
};
use oscnh::fbar::{HomogenizedOperator, InvarianceReport};
use oscnh::{Error, Expr, LevelSet, NeumannData, OperatorSpec, SolveConfig};

fn constant_table(v: f64) -> SlopeTable {
    SlopeTable {
        entries: (0..8)
            .map(|k| SlopeEntry { angle: TAU * k as f64 / 8.0, mu_bar: v, error_bar: 0.0, c1: 0.0, c2: 0.0, fallback: false })
            .collect(),
        operator_id: "test".into(),
        g_id: "test".into(),
        jumps: vec![0.0; 7],
        warnings: vec![],
        manifest: serde_json::Value::Null,
    }
}

fn laplacian_fbar() -> HomogenizedOperator {
    HomogenizedOperator::Spec(OperatorSpec::laplacian())
}

#[test]
fn unit_circle_non_flatness_matches_chords() {
    // On the unit circle |ν_x − ν_x₀| equals the chord |x − x₀|.
    let rep = non_flatness_report(&LevelSet::unit_disk(), &[0.1, 0.3], 32, None).unwrap();
    assert!(rep.accepted());
    assert!((rep.r0 - 0.5).abs() < 1e-6);
    for p in &rep.points {
        assert!((p.r_of_sigma[0] - 0.1).abs() < 1e-3, "{:?}", p.r_of_sigma);
        assert!((p.r_of_sigma[1] - 0.3).abs() < 1e-3);
    }
}

#[test]
fn ellipse_is_non_flat() {
    let rep = non_flatness_report(&DomainSpec::ellipse(2.0, 1.5).outer, &[0.05, 0.1, 0.2], 64, None).unwrap();
    assert!(rep.accepted());
    for p in &rep.points {
        assert!(p.r_of_sigma.iter().all(|r| r.is_finite() && *r <= rep.r0));
        assert!(p.r_of_sigma.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn flat_sides_are_rejected() {
    let rect = LevelSet::Rectangle { a: 2.0, b: 1.5 };
    let rep = non_flatness_report(&rect, &[0.05], 64, None).unwrap();
    assert!(!rep.accepted());
    let (x0, x) = rep.flat_witness.unwrap();
    assert!(rect.value(x0).abs() < 1e-6 && rect.value(x).abs() < 1e-6);
    let spec = DomainSpec { name: "box".into(), outer: rect, inner: LevelSet::unit_disk() };
    assert!(spec.validate().is_err());
    let tight = DomainSpec::annulus(1.0, 1.1);
    assert!(tight.validate().is_err());
}

#[test]
fn annulus_through_both_solvers() {
    let domain = DomainSpec::annulus(1.0, 2.0);
    let h = 1.0 / 32.0;
    let exact = 1.0 + 3.0 * 2f64.ln();
    let table = constant_table(1.5);
    let hom = solve_homogenized_domain(&domain, Some(&laplacian_fbar()), Some(&table), None, h, &SolveConfig::default(), None).unwrap();
    let (_, at) = annulus_error(&hom, 3.0, 2.0);
    assert!((at - exact).abs() <= 10.0 * h, "{at}");
    let eps = solve_eps_domain(&domain, &OperatorSpec::laplacian(), &NeumannData::constant(1.5).unwrap(), 8.0 * h, h, &SolveConfig::default()).unwrap();
    let gap = eps.field.values.iter().zip(&hom.field.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-8, "{gap}");
}

#[test]
fn missing_or_failed_inputs_are_dependency_errors() {
    let domain = DomainSpec::annulus(1.0, 2.0);
    let table = constant_table(1.5);
    let cfg = SolveConfig::default();
    let fbar = laplacian_fbar();
    assert!(matches!(solve_homogenized_domain(&domain, None, Some(&table), None, 0.125, &cfg, None), Err(Error::Dependency(_))));
    assert!(matches!(solve_homogenized_domain(&domain, Some(&fbar), None, None, 0.125, &cfg, None), Err(Error::Dependency(_))));
    let failed = InvarianceReport { max_deviation: 1.0, max_extrapolation_error: 0.0, gate_passed: false, entries: vec![] };
    assert!(matches!(
        solve_homogenized_domain(&domain, Some(&fbar), Some(&table), Some(&failed), 0.125, &cfg, None),
        Err(Error::Dependency(_))
    ));
}

#[test]
fn solutions_obey_the_comparison_bounds() {
    let domain = DomainSpec::ellipse(2.0, 1.5);
    let diam = 5.0;
    for op in [OperatorSpec::laplacian(), OperatorSpec::pucci_plus(1.0, 2.0).unwrap()] {
        let sol = solve_eps_domain(&domain, &op, &NeumannData::standard_trig(), 0.25, 1.0 / 32.0, &SolveConfig::default()).unwrap();
        for id in sol.grid.interior_nodes() {
            let u = sol.field.values[id];
            assert!(u >= 1.0 - 1e-9 && u <= 1.0 + 2.0 * diam, "{u}");
        }
    }
}

#[test]
fn lattice_shift_of_the_data_changes_nothing() {
    // g(y + z) for z = (3, −2) against g(y).
    let mode = |shift: [f64; 2]| {
        let arg = Expr::mul(vec![Expr::c(TAU), Expr::add(vec![Expr::coord(0), Expr::c(shift[0]), Expr::coord(1), Expr::c(shift[1])])]);
        NeumannData::new(Expr::add(vec![Expr::c(1.5), Expr::mul(vec![Expr::c(0.4), Expr::sin(arg)])])).unwrap()
    };
    let domain = DomainSpec::ellipse(2.0, 1.5);
    let cfg = SolveConfig::default();
    let a = solve_eps_domain(&domain, &OperatorSpec::laplacian(), &mode([0.0, 0.0]), 0.25, 1.0 / 32.0, &cfg).unwrap();
    let b = solve_eps_domain(&domain, &OperatorSpec::laplacian(), &mode([3.0, -2.0]), 0.25, 1.0 / 32.0, &cfg).unwrap();
    let gap = a.field.values.iter().zip(&b.field.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap <= 1e-9, "{gap}");
}

#[test]
fn homogenized_solution_is_unique() {
    let domain = DomainSpec::ellipse(2.0, 1.5);
    let table = constant_table(1.7);
    let h = 1.0 / 32.0;
    let cfg = SolveConfig::default();
    let pucci = HomogenizedOperator::Spec(OperatorSpec::pucci_minus(1.0, 2.0).unwrap());
    let a = solve_homogenized_domain(&domain, Some(&pucci), Some(&table), None, h, &cfg, None).unwrap();
    let high = vec![12.0; a.field.len()];
    let b = solve_homogenized_domain(&domain, Some(&pucci), Some(&table), None, h, &cfg, Some(&high)).unwrap();
    let tol = 2.0 * a.stats.tol_residual * h * h;
    let gap = a.field.values.iter().zip(&b.field.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap <= tol.max(1e-9), "{gap} vs {tol}");
}

#[test]
fn homogenized_solution_self_converges() {
    let domain = DomainSpec::ellipse(2.0, 1.5);
    let table = constant_table(1.5);
    let cfg = SolveConfig::default();
    let sols: Vec<_> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&h| solve_homogenized_domain(&domain, Some(&laplacian_fbar()), Some(&table), None, h, &cfg, None).unwrap())
        .collect();
    let coarse = &sols[0];
    let nodes = compact_subset(&domain, &coarse.grid, 0.15).unwrap();
    assert!(!nodes.is_empty());
    let at = |k: usize, x: [f64; 2]| {
        let s = &sols[k];
        let id = s.grid.nearest(x).unwrap();
        let y = s.grid.world_of(id);
        assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        s.field.values[id]
    };
    let (mut d1, mut d2) = (0.0f64, 0.0f64);
    for &id in &nodes {
        let x = coarse.grid.world_of(id);
        d1 = d1.max((at(0, x) - at(1, x)).abs());
        d2 = d2.max((at(1, x) - at(2, x)).abs());
    }
    assert!(d2 < d1 && d1 <= 10.0 / 16.0, "{d1} {d2}");
}

#[test]
fn foot_normals_point_outward() {
    let domain = DomainSpec::ellipse(2.0, 1.5);
    let sol = solve_homogenized_domain(&domain, Some(&laplacian_fbar()), Some(&constant_table(1.5)), None, 1.0 / 16.0, &SolveConfig::default(), None).unwrap();
    for gh in &sol.grid.ghosts {
        let out = [gh.foot[0] + 1e-6 * gh.normal[0], gh.foot[1] + 1e-6 * gh.normal[1]];
        let inn = [gh.foot[0] - 1e-6 * gh.normal[0], gh.foot[1] - 1e-6 * gh.normal[1]];
        assert!(domain.outer.value(out) > 0.0 && domain.outer.value(inn) < 0.0);
    }
}

#[test]
fn convergence_with_constant_and_oscillating_data() {
    let domain = DomainSpec::ellipse(2.0, 1.5);
    let cfg = SolveConfig::default();
    let eps = [0.25, 0.125, 0.0625];
    let lap = OperatorSpec::laplacian();
    let flat = convergence_study(&domain, &lap, &NeumannData::constant(1.5).unwrap(), &eps, 0.15, 8, Some(&laplacian_fbar()), Some(&constant_table(1.5)), &cfg).unwrap();
    assert!(flat.report.entries.iter().all(|e| e.sup_distance <= 1e-8), "{:?}", flat.report.entries);
    // For the Laplacian the slope is the mean of g, so the constant table is exact.
    let trig = convergence_study(&domain, &lap, &NeumannData::standard_trig(), &eps, 0.15, 8, Some(&laplacian_fbar()), Some(&constant_table(1.5)), &cfg).unwrap();
    let rep = &trig.report;
    assert!((rep.crude_bound - 5.0).abs() < 1e-2, "{}", rep.crude_bound);
    for e in &rep.entries {
        assert!(e.sup_distance <= rep.crude_bound && e.nodes > 0);
    }
    let mut csv = Vec::new();
    rep.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 4);
    assert!(convergence_study(&domain, &lap, &NeumannData::standard_trig(), &eps[..2], 0.15, 8, Some(&laplacian_fbar()), Some(&constant_table(1.5)), &cfg).is_err());
}
