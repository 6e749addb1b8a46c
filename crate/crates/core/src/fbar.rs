//! Effective operator `F̄(M)` from discounted periodic cell problems.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_torus_system, TorusGrid};
use crate::ident::stable_id;
use crate::operators::{Coefficients, DirectionalOperator, Frame, NodeCoefficients, OperatorSpec, SymmetricMatrix2};
use crate::solver::{solve_system, SolveConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FbarConfig {
    /// Torus nodes per side (`h = 1/n`).
    pub n: usize,
    /// Strictly decreasing discounts.
    pub rho_list: Vec<f64>,
    pub solve: SolveConfig,
}

impl Default for FbarConfig {
    fn default() -> Self {
        FbarConfig {
            n: 32,
            rho_list: vec![0.1, 0.03, 0.01],
            solve: SolveConfig { tol_residual: Some(1e-10), tol_update: 1e-11, ..SolveConfig::default() },
        }
    }
}

impl FbarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::InvalidConfig(format!("torus grid must resolve the period (n >= 16), got {}", self.n)));
        }
        if self.rho_list.is_empty() || self.rho_list.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidConfig("discounts must be positive".into()));
        }
        if self.rho_list.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidConfig("discounts must be strictly decreasing".into()));
        }
        self.solve.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoSample {
    pub rho: f64,
    /// Mean of `ρv` over the torus.
    pub rho_times_v: f64,
    /// `max v − min v`.
    pub corrector_osc: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbarEstimate {
    pub m: SymmetricMatrix2,
    pub value: f64,
    pub rho_sequence: Vec<RhoSample>,
    pub h: f64,
    /// `|last − previous|` of the `−ρv` sequence.
    pub cauchy_gap: f64,
    /// Gap between the extrapolated value and the finest discount.
    pub extrapolation_error: f64,
    /// The `−ρv` sequence failed to contract.
    pub flagged: bool,
    /// Short-circuited for an operator without fast-variable dependence.
    pub exact: bool,
}

/// Polynomial extrapolation to `ρ = 0` through all points (Neville).
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

/// `F̄(M)` for an operator spec.
pub fn estimate_fbar(spec: &OperatorSpec, m: &SymmetricMatrix2, config: &FbarConfig) -> Result<FbarEstimate> {
    config.validate()?;
    let h = 1.0 / config.n as f64;
    if spec.is_y_independent() {
        let f = spec.eval(m, [0.0, 0.0]);
        let rho_sequence = config
            .rho_list
            .iter()
            .map(|&rho| RhoSample { rho, rho_times_v: -f, corrector_osc: 0.0, iterations: 0 })
            .collect();
        return Ok(FbarEstimate {
            m: *m,
            value: f,
            rho_sequence,
            h,
            cauchy_gap: 0.0,
            extrapolation_error: 0.0,
            flagged: false,
            exact: true,
        });
    }
    estimate_fbar_with(spec, m, config)
}

/// Discounted-corrector estimate for any directional operator.
pub fn estimate_fbar_with(op: &dyn DirectionalOperator, m: &SymmetricMatrix2, config: &FbarConfig) -> Result<FbarEstimate> {
    config.validate()?;
    let grid = TorusGrid::new(config.n)?;
    let mut rho_sequence = Vec::new();
    let mut init = vec![0.0; grid.len()];
    let big_lambda = op.ellipticity().1;
    for &rho in &config.rho_list {
        let system = build_torus_system(&grid, op, m, rho)?;
        // Rounding floor of the residual: |v| ~ Λ‖M‖/ρ times stencil weights ~ 8Λ/h².
        let floor = 16.0 * f64::EPSILON * (big_lambda * m.norm() / rho + 1.0) * 8.0 * big_lambda / (grid.h * grid.h);
        let mut solve = config.solve.clone();
        solve.tol_residual = Some(solve.residual_tolerance(grid.h).max(floor));
        let (v, stats) = solve_system(&system, &init, &solve)?;
        if !stats.converged {
            return Err(Error::NotConverged { residual: stats.final_residual, iterations: stats.iterations });
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let lo = v.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        rho_sequence.push(RhoSample { rho, rho_times_v: rho * mean, corrector_osc: hi - lo, iterations: stats.iterations });
        init = v;
    }
    let xs: Vec<f64> = rho_sequence.iter().map(|s| s.rho).collect();
    let ys: Vec<f64> = rho_sequence.iter().map(|s| -s.rho_times_v).collect();
    let value = extrapolate_to_zero(&xs, &ys);
    let k = ys.len();
    let cauchy_gap = if k >= 2 { (ys[k - 1] - ys[k - 2]).abs() } else { 0.0 };
    let flagged = k >= 3 && (ys[k - 1] - ys[k - 2]).abs() > (ys[k - 2] - ys[k - 3]).abs() + 1e-12;
    Ok(FbarEstimate {
        m: *m,
        value,
        rho_sequence,
        h: grid.h,
        cauchy_gap,
        extrapolation_error: (value - ys[k - 1]).abs(),
        flagged,
        exact: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub max_deviation: f64,
    pub max_extrapolation_error: f64,
    /// Deviation within three times the extrapolation error.
    pub gate_passed: bool,
    /// `(matrix index, angle, deviation)`.
    pub entries: Vec<(usize, f64, f64)>,
}

/// Compares `F̄(M)` with `F̄(RMRᵀ)` over rotations.
pub fn eigenvalue_invariance_check(
    spec: &OperatorSpec,
    ms: &[SymmetricMatrix2],
    angles: &[f64],
    config: &FbarConfig,
) -> Result<InvarianceReport> {
    let mut entries = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut max_err: f64 = 0.0;
    for (k, m) in ms.iter().enumerate() {
        let base = estimate_fbar(spec, m, config)?;
        max_err = max_err.max(base.extrapolation_error);
        for &a in angles {
            let rotated = estimate_fbar(spec, &m.rotate(a), config)?;
            max_err = max_err.max(rotated.extrapolation_error);
            let d = (rotated.value - base.value).abs();
            max_dev = max_dev.max(d);
            entries.push((k, a, d));
        }
    }
    Ok(InvarianceReport {
        max_deviation: max_dev,
        max_extrapolation_error: max_err,
        gate_passed: max_dev <= 3.0 * max_err + 2e-9,
        entries,
    })
}

/// Least-squares fit `F̄(diag(c, s)) ≈ −(A·Σeᵢ⁺ + B·Σeᵢ⁻)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PucciFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
}

/// `F̄` on the unit circle of eigenvalue pairs `(cos θ, sin θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbarTable {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: PucciFit,
    pub lambda: f64,
    pub big_lambda: f64,
    pub spec_id: String,
}

/// Tabulates `F̄(diag(cos θ, sin θ))` on `count` equally spaced angles.
pub fn fbar_table(spec: &OperatorSpec, count: usize, config: &FbarConfig) -> Result<FbarTable> {
    if count < 8 {
        return Err(Error::InvalidConfig("F̄ table needs at least 8 angles".into()));
    }
    let thetas: Vec<f64> = (0..count).map(|k| std::f64::consts::TAU * k as f64 / count as f64).collect();
    let values = thetas
        .iter()
        .map(|&t| estimate_fbar(spec, &SymmetricMatrix2::diag(t.cos(), t.sin()), config).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_pucci(&thetas, &values);
    Ok(FbarTable { thetas, values, fit, lambda: spec.lambda, big_lambda: spec.big_lambda, spec_id: stable_id(spec) })
}

fn fit_pucci(thetas: &[f64], values: &[f64]) -> PucciFit {
    let (mut spp, mut spn, mut snn, mut sp_y, mut sn_y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let rows: Vec<(f64, f64)> = thetas
        .iter()
        .map(|&t| {
            let e = [t.cos(), t.sin()];
            let pos: f64 = e.iter().filter(|v| **v > 0.0).sum();
            let neg: f64 = e.iter().filter(|v| **v < 0.0).sum();
            (-pos, -neg)
        })
        .collect();
    for ((p, n), y) in rows.iter().zip(values) {
        spp += p * p;
        spn += p * n;
        snn += n * n;
        sp_y += p * y;
        sn_y += n * y;
    }
    let det = spp * snn - spn * spn;
    let a = (sp_y * snn - sn_y * spn) / det;
    let b = (spp * sn_y - spn * sp_y) / det;
    let rss: f64 = rows.iter().zip(values).map(|((p, n), y)| (y - a * p - b * n).powi(2)).sum();
    PucciFit { a, b, residual: (rss / values.len() as f64).sqrt() }
}

impl FbarTable {
    /// `F̄(M)` by positive homogeneity and periodic interpolation in the
    /// eigenvalue angle.
    pub fn value(&self, m: &SymmetricMatrix2) -> f64 {
        let e = m.eigenvalues();
        let r = e[0].hypot(e[1]);
        if r == 0.0 {
            return 0.0;
        }
        let tau = std::f64::consts::TAU;
        let theta = e[1].atan2(e[0]).rem_euclid(tau);
        let n = self.thetas.len();
        let step = tau / n as f64;
        let x = theta / step;
        let k = (x.floor() as usize).min(n - 1);
        let t = x - k as f64;
        r * ((1.0 - t) * self.values[k] + t * self.values[(k + 1) % n])
    }

    /// The homogenized operator: a linear or Pucci operator when the fit is
    /// within `tol`, otherwise the tabulated operator itself.
    pub fn homogenized_operator(&self, tol: f64) -> Result<HomogenizedOperator> {
        let PucciFit { a, b, residual } = self.fit;
        if residual <= tol && a > 0.0 && b > 0.0 {
            let lo = a.min(b);
            let hi = a.max(b);
            let spec = if (a - b).abs() <= tol {
                let c = 0.5 * (a + b);
                OperatorSpec::linear(Coefficients::constant(c, 0.0, c), c, c)?
            } else if a > b {
                OperatorSpec::pucci_plus(lo, hi)?
            } else {
                OperatorSpec::pucci_minus(lo, hi)?
            };
            return Ok(HomogenizedOperator::Spec(spec));
        }
        Ok(HomogenizedOperator::Tabulated(TabulatedOperator { table: self.clone() }))
    }
}

/// Rotation-invariant operator defined by an [`FbarTable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedOperator {
    pub table: FbarTable,
}

fn hessian_from_directional(s: &[f64; 4]) -> SymmetricMatrix2 {
    SymmetricMatrix2::new(s[0], 0.5 * (s[2] - s[3]), s[1])
}

impl DirectionalOperator for TabulatedOperator {
    fn member_count(&self) -> usize {
        0
    }

    fn node_coefficients(&self, _y: [f64; 2], _frame: &Frame, out: &mut Vec<NodeCoefficients>) -> Result<()> {
        out.clear();
        Ok(())
    }

    fn apply(&self, s: &[f64; 4], _coeffs: &[NodeCoefficients]) -> (f64, [f64; 4], u32) {
        let v = self.table.value(&hessian_from_directional(s));
        let mut w = [0.0; 4];
        for k in 0..4 {
            let d = 1e-7 * (1.0 + s[k].abs());
            let mut sp = *s;
            sp[k] += d;
            let mut sm = *s;
            sm[k] -= d;
            let slope = (self.table.value(&hessian_from_directional(&sp))
                - self.table.value(&hessian_from_directional(&sm)))
                / (2.0 * d);
            w[k] = slope.min(0.0);
        }
        let e = hessian_from_directional(s).eigenvalues();
        let bin = (e[1].atan2(e[0]).rem_euclid(std::f64::consts::TAU) * 64.0) as u32;
        (v, w, bin)
    }

    fn uses_diagonals(&self, _frame: &Frame) -> bool {
        true
    }

    fn ellipticity(&self) -> (f64, f64) {
        (self.table.lambda, self.table.big_lambda)
    }
}

/// Either a closed-form operator recovered from the table or the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum HomogenizedOperator {
    Spec(OperatorSpec),
    Tabulated(TabulatedOperator),
}

impl HomogenizedOperator {
    pub fn as_directional(&self) -> &dyn DirectionalOperator {
        match self {
            HomogenizedOperator::Spec(s) => s,
            HomogenizedOperator::Tabulated(t) => t,
        }
    }

    /// Closed form for operators without fast-variable dependence, otherwise
    /// a table with `count` angles.
    pub fn for_spec(spec: &OperatorSpec, count: usize, config: &FbarConfig) -> Result<Self> {
        if spec.is_y_independent() {
            return Ok(HomogenizedOperator::Spec(spec.clone()));
        }
        fbar_table(spec, count, config)?.homogenized_operator(1e-6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn y_independent_is_exact() {
        let e = estimate_fbar(&OperatorSpec::laplacian(), &SymmetricMatrix2::diag(1.0, 2.0), &FbarConfig::default())
            .unwrap();
        assert!(e.exact);
        assert!((e.value + 3.0).abs() < 1e-12);
    }

    #[test]
    fn neville_extrapolates_linear_exactly() {
        let v = extrapolate_to_zero(&[0.1, 0.03, 0.01], &[2.0 + 0.1 * 3.0, 2.0 + 0.03 * 3.0, 2.0 + 0.01 * 3.0]);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pucci_fit_recovers_constants() {
        let spec = OperatorSpec::pucci_plus(1.0, 2.0).unwrap();
        let t = fbar_table(&spec, 16, &FbarConfig::default()).unwrap();
        assert!((t.fit.a - 2.0).abs() < 1e-12 && (t.fit.b - 1.0).abs() < 1e-12);
        match t.homogenized_operator(1e-9).unwrap() {
            HomogenizedOperator::Spec(s) => assert_eq!(s.variant_name(), "pucci_plus"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oscillating_linear_uses_discounted_solve() {
        let a11 = Expr::add(vec![Expr::c(1.0), Expr::sin_mode(0.2, [1, 0])]);
        let coeffs = Coefficients::from_exprs(a11, Expr::c(0.0), Expr::c(1.0)).unwrap();
        let spec = OperatorSpec::linear(coeffs, 0.8, 1.2).unwrap();
        let cfg = FbarConfig { n: 16, ..FbarConfig::default() };
        let e = estimate_fbar(&spec, &SymmetricMatrix2::diag(0.0, 1.0), &cfg).unwrap();
        assert!(!e.exact);
        assert!((e.value + 1.0).abs() < 1e-6, "{}", e.value);
    }
}
