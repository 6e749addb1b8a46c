//! Strip cell problems: slopes `μ_ε(ν)`, mid-plane flatness, extrapolation
//! in `ε` and slope tables over directions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directions::{omega_hat, Direction, LatticeSearch};
use crate::error::{Error, Result};
use crate::grid::{build_strip_grid, Field, StripData, StripGrid};
use crate::ident::stable_id;
use crate::operators::{DirectionalOperator, NeumannData, OperatorSpec};
use crate::solver::{solve_strip, SolveConfig, SolveStats};

/// How the influence of the lateral truncation is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LateralSensitivity {
    /// Change of the slope at the last lateral-profile refit.
    Refit,
    /// Change of the slope when the lateral extent is doubled.
    Doubling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    /// Grid resolution `ε/h`; must be at least 8.
    pub points_per_period: u32,
    pub lateral_extent: f64,
    pub sensitivity: LateralSensitivity,
    /// Maximum number of lateral-profile refits after the first solve.
    pub max_refits: usize,
    /// Stop refitting once the slope changes by less than this.
    pub refit_tol: f64,
    pub solve: SolveConfig,
    pub search: LatticeSearch,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            points_per_period: 8,
            lateral_extent: 4.0,
            sensitivity: LateralSensitivity::Refit,
            max_refits: 4,
            refit_tol: 1e-9,
            solve: SolveConfig::default(),
            search: LatticeSearch::default(),
        }
    }
}

impl CellConfig {
    /// Grid spacing for a given `ε`; `1/h` must be an integer.
    pub fn spacing(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidConfig(format!("eps must lie in (0, 1/2), got {eps}")));
        }
        if self.points_per_period < 8 {
            return Err(Error::InvalidConfig(format!(
                "grid must resolve eps with h <= eps/8, got eps/h = {}",
                self.points_per_period
            )));
        }
        let h = eps / self.points_per_period as f64;
        let k = (1.0 / h).round();
        if (k * h - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("1/h = {} is not an integer for eps = {eps}", 1.0 / h)));
        }
        Ok(1.0 / k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeSample {
    pub nu: Direction,
    pub p: [f64; 2],
    pub eps: f64,
    pub h: f64,
    pub lateral_extent: f64,
    pub mu_eps: f64,
    pub mu_eps_alt: f64,
    pub flatness: f64,
    pub lateral_sensitivity: f64,
    pub stats: SolveStats,
}

impl SlopeSample {
    /// Slack allowed around the data range.
    pub fn slack(&self) -> f64 {
        10.0 * self.stats.tol_residual * self.h * self.h + self.lateral_sensitivity
    }
}

/// Oscillation of a field on the discrete hyperplane nearest a level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flatness {
    pub level: f64,
    pub value: f64,
    /// The level lies within `ε^{1/20}` of the Neumann face.
    pub boundary_layer: bool,
}

/// Column range of the center half `|s| < L/2` (half-open so that it spans
/// whole lateral periods on axis-aligned grids).
fn center_half(grid: &StripGrid) -> std::ops::Range<usize> {
    let c = grid.center();
    let half = grid.lateral_steps as usize / 2;
    (c - half)..(c + half)
}

fn row_of(grid: &StripGrid, t: f64) -> usize {
    let j = ((t + grid.width()) / grid.h).round().max(0.0) as usize;
    j.min(grid.top())
}

/// Lateral average of `u` over the center half at row `j`.
pub fn lateral_average(grid: &StripGrid, u: &Field, j: usize) -> f64 {
    let cols = center_half(grid);
    let n = cols.len() as f64;
    cols.map(|i| u.values[grid.id(i, j)]).sum::<f64>() / n
}

/// `2(ū(−½) − base)` on a width-one strip with bottom value `base`.
pub fn midplane_slope(grid: &StripGrid, u: &Field, base: f64) -> f64 {
    let j = row_of(grid, -0.5 * grid.width());
    (lateral_average(grid, u, j) - base) / (grid.t(j) + grid.width())
}

/// Least-squares slope of `t ↦ ū(t)` over `t ∈ [−0.9w, −0.2w]`.
pub fn least_squares_slope(grid: &StripGrid, u: &Field) -> f64 {
    let w = grid.width();
    let rows: Vec<usize> = (0..grid.n_normal)
        .filter(|&j| grid.t(j) >= -0.9 * w - 1e-12 && grid.t(j) <= -0.2 * w + 1e-12)
        .collect();
    let ts: Vec<f64> = rows.iter().map(|&j| grid.t(j)).collect();
    let vs: Vec<f64> = rows.iter().map(|&j| lateral_average(grid, u, j)).collect();
    let n = ts.len() as f64;
    let tm = ts.iter().sum::<f64>() / n;
    let vm = vs.iter().sum::<f64>() / n;
    let num: f64 = ts.iter().zip(&vs).map(|(t, v)| (t - tm) * (v - vm)).sum();
    let den: f64 = ts.iter().map(|t| (t - tm) * (t - tm)).sum();
    num / den
}

/// Oscillation (max − min) of `u` on the row nearest level `t`, center half.
pub fn flatness(grid: &StripGrid, u: &Field, t: f64, eps: f64) -> Flatness {
    let j = row_of(grid, t);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in center_half(grid) {
        let v = u.values[grid.id(i, j)];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Flatness { level: grid.t(j), value: hi - lo, boundary_layer: -t < eps.powf(0.05) }
}

fn solve_once(
    grid: &StripGrid,
    op: &dyn DirectionalOperator,
    eps: f64,
    data: &StripData,
    solve: &SolveConfig,
    init: Option<&[f64]>,
) -> Result<(Field, SolveStats)> {
    let (u, stats) = solve_strip(grid, op, eps, data, solve, init)?;
    if !stats.converged {
        return Err(Error::NotConverged { residual: stats.final_residual, iterations: stats.iterations });
    }
    Ok((u, stats))
}

/// Slab solve with lateral faces refitted to the measured mid-plane slope.
#[derive(Clone, Debug)]
pub struct RefittedSlab {
    pub field: Field,
    /// Mid-plane slope `(ū(−w/2) − ū(−w))/(w/2)`.
    pub slope: f64,
    /// Slope change at the last refit.
    pub last_change: f64,
    pub stats: SolveStats,
}

/// Solves a slab with face flux `top`, bottom values `bottom` and lateral
/// faces on `bottom_side + μ̂(t + w)`, re-solving with `μ̂` set to the
/// measured slope until it settles or `config.max_refits` is reached.
pub fn solve_refitted(
    grid: &StripGrid,
    op: &dyn DirectionalOperator,
    eps: f64,
    top: Vec<f64>,
    bottom: Vec<f64>,
    config: &CellConfig,
) -> Result<RefittedSlab> {
    if top.len() != grid.n_lateral || bottom.len() != grid.n_lateral {
        return Err(Error::InvalidInput("slab data does not match the grid".into()));
    }
    let cols = center_half(grid);
    let n = cols.len() as f64;
    let base = cols.clone().map(|i| bottom[i]).sum::<f64>() / n;
    let mut slope = cols.map(|i| top[i]).sum::<f64>() / n;
    let (b_left, b_right) = (bottom[0], bottom[grid.n_lateral - 1]);
    let mut data = StripData { top, bottom, left: Vec::new(), right: Vec::new() };
    let sides = |data: &mut StripData, slope: f64| {
        data.set_linear_sides(grid, slope, b_left);
        let right: Vec<f64> = (0..grid.n_normal).map(|j| slope * (grid.t(j) + grid.width()) + b_right).collect();
        data.right = right;
    };
    sides(&mut data, slope);
    let (mut u, mut stats) = solve_once(grid, op, eps, &data, &config.solve, None)?;
    slope = midplane_slope(grid, &u, base);
    let mut last_change = f64::INFINITY;
    for _ in 0..config.max_refits {
        sides(&mut data, slope);
        let (next, s) = solve_once(grid, op, eps, &data, &config.solve, Some(&u.values))?;
        stats.iterations += s.iterations;
        stats.wall_time += s.wall_time;
        stats.factorizations += s.factorizations;
        stats.final_residual = s.final_residual;
        u = next;
        let new_slope = midplane_slope(grid, &u, base);
        last_change = (new_slope - slope).abs();
        slope = new_slope;
        if last_change <= config.refit_tol {
            break;
        }
    }
    Ok(RefittedSlab { field: u, slope, last_change: if last_change.is_finite() { last_change } else { 0.0 }, stats })
}

/// Solved strip with its slope estimates.
#[derive(Clone, Debug)]
pub struct StripSolution {
    pub grid: StripGrid,
    pub field: Field,
    pub sample: SlopeSample,
}

fn oscillatory_top(grid: &StripGrid, g: &NeumannData, eps: f64) -> Vec<f64> {
    (0..grid.n_lateral)
        .map(|i| {
            let x = grid.world(i, grid.top());
            g.eval([x[0] / eps, x[1] / eps])
        })
        .collect()
}

/// Solves the strip problem and returns the field along with the sample.
pub fn solve_cell(
    nu: &Direction,
    p: [f64; 2],
    eps: f64,
    op: &dyn DirectionalOperator,
    g: &NeumannData,
    config: &CellConfig,
) -> Result<StripSolution> {
    let h = config.spacing(eps)?;
    let grid = build_strip_grid(nu, p, h, config.lateral_extent)?;
    let slab = solve_refitted(&grid, op, eps, oscillatory_top(&grid, g, eps), vec![1.0; grid.n_lateral], config)?;
    let mu = slab.slope;
    let sensitivity = match config.sensitivity {
        LateralSensitivity::Refit => slab.last_change,
        LateralSensitivity::Doubling => {
            let wide = build_strip_grid(nu, p, h, 2.0 * config.lateral_extent)?;
            let data = StripData::oscillatory(&wide, g, eps, 1.0, mu);
            let (uw, _) = solve_once(&wide, op, eps, &data, &config.solve, None)?;
            (midplane_slope(&wide, &uw, 1.0) - mu).abs()
        }
    };
    let u = slab.field;
    let sample = SlopeSample {
        nu: *nu,
        p,
        eps,
        h,
        lateral_extent: config.lateral_extent,
        mu_eps: mu,
        mu_eps_alt: least_squares_slope(&grid, &u),
        flatness: flatness(&grid, &u, -0.5, eps).value,
        lateral_sensitivity: sensitivity,
        stats: slab.stats,
    };
    Ok(StripSolution { grid, field: u, sample })
}

/// `μ_ε(ν)` with its diagnostics.
pub fn slope_sample(
    nu: &Direction,
    p: [f64; 2],
    eps: f64,
    op: &dyn DirectionalOperator,
    g: &NeumannData,
    config: &CellConfig,
) -> Result<SlopeSample> {
    Ok(solve_cell(nu, p, eps, op, g, config)?.sample)
}

/// Fitted model `μ_ε = μ̄ + σ₁C₁ε^{α/20} + σ₂C₂ω̂(ε)^β`, `C₁, C₂ ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub mu_bar: f64,
    pub c1: f64,
    pub c2: f64,
    /// Signs `σ₁, σ₂` of the two correction terms.
    pub signs: [f64; 2],
    pub alpha: f64,
    pub beta: f64,
    pub omega_samples: Vec<(f64, f64)>,
    /// Root-mean-square fit residual.
    pub residual: f64,
}

impl ErrorModel {
    pub fn predict(&self, eps: f64, omega: f64) -> f64 {
        self.mu_bar
            + self.signs[0] * self.c1 * eps.powf(self.alpha / 20.0)
            + self.signs[1] * self.c2 * omega.powf(self.beta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub samples: Vec<SlopeSample>,
    pub mu_bar: f64,
    pub model: ErrorModel,
    /// `|μ_{ε_k} − μ_{ε_{k+1}}|` along the list.
    pub cauchy: Vec<f64>,
    /// Largest minus smallest sampled slope.
    pub spread: f64,
    /// The fit was rejected and `μ̄` is the mean of the two finest samples.
    pub fallback: bool,
}

impl Sweep {
    /// Error bar combining the last Cauchy difference, the fit residual and
    /// the lateral sensitivity.
    pub fn error_bar(&self) -> f64 {
        let cauchy = self.cauchy.last().copied().unwrap_or(0.0);
        let lateral = self.samples.iter().fold(0.0f64, |m, s| m.max(s.lateral_sensitivity));
        cauchy.max(self.model.residual) + lateral
    }
}

/// Least squares of `y ≈ m + Σ c_k x_k` with the listed columns; returns
/// `(m, coefficients, rss)`.
fn least_squares(y: &[f64], cols: &[&[f64]]) -> Option<(f64, Vec<f64>, f64)> {
    let n = y.len();
    let k = cols.len() + 1;
    if n < k {
        return None;
    }
    // Normal equations, small and dense.
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..n {
        let mut row = vec![1.0];
        row.extend(cols.iter().map(|c| c[i]));
        for r in 0..k {
            for c in 0..k {
                a[r][c] += row[r] * row[c];
            }
            a[r][k] += row[r] * y[i];
        }
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let x: Vec<f64> = (0..k).map(|r| a[r][k] / a[r][r]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let rss = (0..n)
        .map(|i| {
            let pred = x[0] + cols.iter().enumerate().map(|(c, col)| x[c + 1] * col[i]).sum::<f64>();
            (y[i] - pred).powi(2)
        })
        .sum();
    Some((x[0], x[1..].to_vec(), rss))
}

/// Fits the error model over `α ∈ [0.1, 1)` with nonnegative amplitudes.
pub fn fit_error_model(eps: &[f64], mu: &[f64], omega: &[f64], beta: f64) -> ErrorModel {
    let n = mu.len();
    let mean = mu.iter().sum::<f64>() / n as f64;
    let mut best = ErrorModel {
        mu_bar: mean,
        c1: 0.0,
        c2: 0.0,
        signs: [1.0, 1.0],
        alpha: 0.5,
        beta,
        omega_samples: eps.iter().copied().zip(omega.iter().copied()).collect(),
        residual: (mu.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n as f64).sqrt(),
    };
    let mut best_terms = 0usize;
    let omega_b: Vec<f64> = omega.iter().map(|w| w.powf(beta)).collect();
    let omega_usable = omega_b.iter().any(|&w| w > 1e-14)
        && omega_b.iter().fold(f64::NEG_INFINITY, |m, &w| m.max(w))
            - omega_b.iter().fold(f64::INFINITY, |m, &w| m.min(w))
            > 1e-14;
    let scale = 1.0 + mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for step in 0..18 {
        let alpha = 0.1 + 0.05 * step as f64;
        let e: Vec<f64> = eps.iter().map(|x| x.powf(alpha / 20.0)).collect();
        let mut try_fit = |cols: Vec<&[f64]>, which: [bool; 2]| {
            let Some((m, c, rss)) = least_squares(mu, &cols) else { return };
            let rms = (rss / n as f64).sqrt();
            let terms = c.len();
            let better = rms < best.residual - 1e-12 * scale
                || (rms <= best.residual + 1e-12 * scale && terms < best_terms);
            if !better {
                return;
            }
            let mut model = best.clone();
            model.mu_bar = m;
            model.alpha = alpha;
            model.residual = rms;
            model.c1 = 0.0;
            model.c2 = 0.0;
            model.signs = [1.0, 1.0];
            let mut k = 0;
            if which[0] {
                model.c1 = c[k].abs();
                model.signs[0] = c[k].signum();
                k += 1;
            }
            if which[1] {
                model.c2 = c[k].abs();
                model.signs[1] = c[k].signum();
            }
            best = model;
            best_terms = terms;
        };
        try_fit(vec![&e], [true, false]);
        if omega_usable {
            try_fit(vec![&omega_b], [false, true]);
            try_fit(vec![&e, &omega_b], [true, true]);
        }
    }
    best
}

/// Samples `μ_ε` over a strictly decreasing `ε` list and extrapolates.
pub fn sweep_and_extrapolate(
    nu: &Direction,
    p: [f64; 2],
    eps_list: &[f64],
    op: &dyn DirectionalOperator,
    g: &NeumannData,
    config: &CellConfig,
) -> Result<Sweep> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidInput("eps list needs at least three values".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps list must be strictly decreasing".into()));
    }
    let samples = eps_list
        .iter()
        .map(|&eps| slope_sample(nu, p, eps, op, g, config))
        .collect::<Result<Vec<_>>>()?;
    let omega = eps_list
        .iter()
        .map(|&eps| omega_hat(nu, eps, &config.search))
        .collect::<Result<Vec<_>>>()?;
    Ok(extrapolate(samples, &omega, g.holder_beta))
}

/// Fits and applies the fallback rules to precomputed samples.
pub fn extrapolate(samples: Vec<SlopeSample>, omega: &[f64], beta: f64) -> Sweep {
    let eps: Vec<f64> = samples.iter().map(|s| s.eps).collect();
    let mu: Vec<f64> = samples.iter().map(|s| s.mu_eps).collect();
    let model = fit_error_model(&eps, &mu, omega, beta);
    let lo = mu.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let hi = mu.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let spread = hi - lo;
    let cauchy = mu.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    let out_of_band = model.mu_bar < lo - spread - 1e-12 || model.mu_bar > hi + spread + 1e-12;
    let poor_fit = model.residual > spread + 1e-12;
    let fallback = out_of_band || poor_fit;
    let mu_bar = if fallback {
        let k = mu.len();
        0.5 * (mu[k - 1] + mu[k - 2])
    } else {
        model.mu_bar
    };
    Sweep { samples, mu_bar, model, cauchy, spread, fallback }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEntry {
    pub angle: f64,
    pub mu_bar: f64,
    pub error_bar: f64,
    pub c1: f64,
    pub c2: f64,
    pub fallback: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeTable {
    pub entries: Vec<SlopeEntry>,
    pub operator_id: String,
    pub g_id: String,
    /// `|μ̄_{k+1} − μ̄_k|` between adjacent angles.
    pub jumps: Vec<f64>,
    pub warnings: Vec<String>,
    pub manifest: serde_json::Value,
}

impl SlopeTable {
    /// `μ̄(θ)` by periodic linear interpolation in angle.
    pub fn interpolate(&self, angle: f64) -> f64 {
        let n = self.entries.len();
        if n == 1 {
            return self.entries[0].mu_bar;
        }
        let tau = std::f64::consts::TAU;
        let a = angle.rem_euclid(tau);
        for k in 0..n {
            let e0 = &self.entries[k];
            let e1 = &self.entries[(k + 1) % n];
            let (a0, mut a1) = (e0.angle, e1.angle);
            if k + 1 == n {
                a1 += tau;
            }
            let mut x = a;
            if x < a0 {
                x += tau;
            }
            if x >= a0 && x <= a1 {
                let t = if a1 > a0 { (x - a0) / (a1 - a0) } else { 0.0 };
                return e0.mu_bar + t * (e1.mu_bar - e0.mu_bar);
            }
        }
        self.entries[0].mu_bar
    }

    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "angle,mu_bar,error_bar,c1,c2")?;
        for e in &self.entries {
            writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", e.angle, e.mu_bar, e.error_bar, e.c1, e.c2)?;
        }
        Ok(())
    }
}

/// Builds the slope table over an angle list (sorted into `[0, 2π)`).
pub fn slope_table(
    angles: &[f64],
    spec: &OperatorSpec,
    g: &NeumannData,
    eps_list: &[f64],
    config: &CellConfig,
) -> Result<SlopeTable> {
    let tau = std::f64::consts::TAU;
    let mut sorted: Vec<f64> = angles.iter().map(|a| a.rem_euclid(tau)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.is_empty() || sorted.windows(2).any(|w| w[1] - w[0] < 1e-12) {
        return Err(Error::InvalidInput("angle list must be nonempty with distinct angles".into()));
    }
    let sweeps: Vec<Sweep> = sorted
        .par_iter()
        .map(|&a| sweep_and_extrapolate(&Direction::from_angle(a), [0.0, 0.0], eps_list, spec, g, config))
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<SlopeEntry> = sorted
        .iter()
        .zip(&sweeps)
        .map(|(&angle, s)| SlopeEntry {
            angle,
            mu_bar: s.mu_bar,
            error_bar: s.error_bar(),
            c1: s.model.c1,
            c2: s.model.c2,
            fallback: s.fallback,
        })
        .collect();
    let mut warnings = Vec::new();
    let jumps: Vec<f64> = entries.windows(2).map(|w| (w[1].mu_bar - w[0].mu_bar).abs()).collect();
    for (k, w) in entries.windows(2).enumerate() {
        let bar = w[0].error_bar.max(w[1].error_bar);
        if jumps[k] > 5.0 * bar && jumps[k] > 1e-9 {
            warnings.push(format!(
                "continuity: jump {:.3e} between angles {:.6} and {:.6} exceeds 5x the local error bar {:.3e}",
                jumps[k], w[0].angle, w[1].angle, bar
            ));
        }
    }
    for e in &entries {
        if e.mu_bar < g.min() - e.error_bar - 1e-9 || e.mu_bar > g.max() + e.error_bar + 1e-9 {
            warnings.push(format!("range: mu_bar {:.6} at angle {:.6} leaves the data range", e.mu_bar, e.angle));
        }
    }
    let manifest = serde_json::json!({
        "angles": sorted,
        "eps_list": eps_list,
        "config": config,
        "operator": spec,
        "g": g.g,
    });
    Ok(SlopeTable { entries, operator_id: stable_id(spec), g_id: stable_id(&g.g), jumps, warnings, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_data_gives_exact_slope() {
        let g = NeumannData::constant(1.5).unwrap();
        let op = OperatorSpec::pucci_minus(1.0, 2.0).unwrap();
        let s = slope_sample(&Direction::golden(), [0.0, 0.0], 0.125, &op, &g, &CellConfig::default()).unwrap();
        assert!((s.mu_eps - 1.5).abs() < 1e-9, "{}", s.mu_eps);
        assert!((s.mu_eps_alt - 1.5).abs() < 1e-9);
        assert!(s.flatness < 1e-9);
    }

    #[test]
    fn spacing_requires_resolution() {
        let cfg = CellConfig { points_per_period: 4, ..CellConfig::default() };
        assert!(cfg.spacing(0.125).is_err());
        assert!(CellConfig::default().spacing(0.6).is_err());
    }

    #[test]
    fn fit_recovers_constant() {
        let m = fit_error_model(&[0.125, 0.0625, 0.03125], &[1.5, 1.5, 1.5], &[0.0, 0.0, 0.0], 1.0);
        assert!((m.mu_bar - 1.5).abs() < 1e-12);
        assert!(m.c1 < 1e-12 && m.c2 < 1e-12);
    }
}
