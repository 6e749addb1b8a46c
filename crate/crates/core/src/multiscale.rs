//! Probes of the slope-continuity mechanism: data families projected onto
//! horizontal slices, near-boundary slab slopes, a second homogenization
//! with piecewise-constant Neumann data, and a three-region composite
//! barrier assembled on one discrete strip.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell::{solve_cell, solve_refitted, CellConfig};
use crate::directions::Direction;
use crate::error::{Error, Result};
use crate::fbar::HomogenizedOperator;
use crate::grid::{build_slab_grid, build_strip_grid, build_strip_system, RowClass, StripData, StripGrid};
use crate::operators::{DirectionalOperator, NeumannData};
use crate::solver::SolveStats;

/// `g_i(y₁) = g(y₁, δ(i−1))` for `i = 1..=m`, `m = ⌊1/δ⌋ + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionFamily {
    pub delta: f64,
    pub m: usize,
    pub members: Vec<NeumannData>,
}

pub fn projection_family(g: &NeumannData, delta: f64) -> Result<ProjectionFamily> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    let m = (1.0 / delta).floor() as usize + 1;
    let members = (0..m)
        .map(|i| NeumannData::new(g.g.source().substitute(1, delta * i as f64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionFamily { delta, m, members })
}

impl ProjectionFamily {
    /// `max_i sup_{y₁} |g_i − g_{i+1}|`, sampled on `samples` points.
    pub fn adjacent_gap(&self, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for w in self.members.windows(2) {
            for k in 0..samples {
                let y = [k as f64 / samples as f64, 0.0];
                worst = worst.max((w[0].eval(y) - w[1].eval(y)).abs());
            }
        }
        worst
    }

    /// `max_y min_i |g(y) − g_i(y₁)|` over a `samples²` torus grid.
    pub fn coverage(&self, g: &NeumannData, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..samples {
            for b in 0..samples {
                let y = [a as f64 / samples as f64, b as f64 / samples as f64];
                let v = g.eval(y);
                let best = self.members.iter().map(|gi| (v - gi.eval(y)).abs()).fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
        worst
    }

    /// Index of the slice nearest to the fractional height `frac(y₂)`.
    pub fn nearest_member(&self, y2: f64) -> usize {
        let q = y2.rem_euclid(1.0) / self.delta;
        (q.round() as usize) % self.m.max(1)
    }
}

/// Slab slopes `μ_k`, one per family member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabSlopes {
    pub nu: Direction,
    pub eps: f64,
    pub n: usize,
    pub h: f64,
    pub mu_k: Vec<f64>,
    pub lateral_sensitivity: Vec<f64>,
    pub stats: Vec<SolveStats>,
}

impl SlabSlopes {
    pub fn min(&self) -> f64 {
        self.mu_k.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.mu_k.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.mu_k.iter().sum::<f64>() / self.mu_k.len() as f64
    }
}

fn snap(x: f64, h: f64) -> f64 {
    (x / h).round() * h
}

/// Lateral extent for a slab of width `w`: `config.lateral_extent · w`,
/// at least `4w`, on the grid.
fn slab_extent(config: &CellConfig, w: f64, h: f64) -> f64 {
    snap(config.lateral_extent.max(4.0) * w, h).max(snap(4.0 * w, h))
}

/// Solves each member's slab `{−2Nε ≤ (x−p)·ν₁ ≤ 0}` with flux `g_k(x₁/ε)`
/// and bottom value 1, reading the slope on the mid-slab plane
/// `{(x−p)·ν₁ = −Nε}` with the sign of `φ = μ((x−p)·ν₁ + 2Nε) + 1`.
pub fn slab_slopes(
    nu1: &Direction,
    p: [f64; 2],
    eps: f64,
    n: usize,
    family: &ProjectionFamily,
    op: &(dyn DirectionalOperator + Sync),
    config: &CellConfig,
) -> Result<SlabSlopes> {
    if n == 0 || n as f64 * eps > 0.1 + 1e-12 {
        return Err(Error::InvalidInput(format!("slabs need N ≥ 1 and N·ε ≤ 0.1, got N = {n}, ε = {eps}")));
    }
    let h = config.spacing(eps)?;
    let w = 2.0 * n as f64 * eps;
    let grid = build_slab_grid(nu1, p, h, slab_extent(config, w, h), w)?;
    let results: Vec<(f64, f64, SolveStats)> = family
        .members
        .par_iter()
        .map(|gk| {
            let top = (0..grid.n_lateral)
                .map(|i| {
                    let x = grid.world(i, grid.top());
                    gk.eval([x[0] / eps, x[1] / eps])
                })
                .collect();
            let slab = solve_refitted(&grid, op, eps, top, vec![1.0; grid.n_lateral], config)?;
            Ok((slab.slope, slab.last_change, slab.stats))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SlabSlopes {
        nu: *nu1,
        eps,
        n,
        h,
        mu_k: Vec::with_capacity(results.len()),
        lateral_sensitivity: Vec::with_capacity(results.len()),
        stats: Vec::with_capacity(results.len()),
    };
    for (mu, lat, st) in results {
        out.mu_k.push(mu);
        out.lateral_sensitivity.push(lat);
        out.stats.push(st);
    }
    Ok(out)
}

/// Empirical threshold: the smallest `N ≤ n_max` at which doubling `N`
/// changes the slab slope of `member` by less than `δ/4`.
pub fn estimate_n0(
    nu1: &Direction,
    eps: f64,
    family: &ProjectionFamily,
    member: usize,
    op: &(dyn DirectionalOperator + Sync),
    config: &CellConfig,
    n_max: usize,
) -> Result<Option<usize>> {
    let single = ProjectionFamily {
        delta: family.delta,
        m: 1,
        members: vec![family
            .members
            .get(member)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("member {member} out of range")))?],
    };
    let mut n = 1;
    while 2 * n <= n_max {
        let a = slab_slopes(nu1, [0.0, 0.0], eps, n, &single, op, config)?.mu_k[0];
        let b = slab_slopes(nu1, [0.0, 0.0], eps, 2 * n, &single, op, config)?.mu_k[0];
        if (a - b).abs() < family.delta / 4.0 {
            return Ok(Some(n));
        }
        n *= 2;
    }
    Ok(None)
}

/// Slopes of the middle-region problem under both operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondHomogenization {
    pub slope_oscillatory: f64,
    pub slope_homogenized: f64,
    pub gap: f64,
    /// Slab width `K·m·N·ε`.
    pub width: f64,
    /// Data period `m·N·ε`.
    pub period: f64,
}

/// Piecewise-constant data repeating `μ_k` on consecutive lateral segments
/// of length `segment`.
fn piecewise(mu: &[f64], segment: f64, s: f64) -> f64 {
    let period = segment * mu.len() as f64;
    let k = ((s.rem_euclid(period) / segment + 1e-9).floor() as usize).min(mu.len() - 1);
    mu[k]
}

/// Solves the slab of width `K·m·N·ε` with flux `μ_k` on segments of length
/// `Nε` (period `m·N·ε`) and bottom value 1, once with `op` at scale `ε` and
/// once with the homogenized operator, and returns both mid-plane slopes.
#[allow(clippy::too_many_arguments)]
pub fn second_homogenization(
    slopes: &SlabSlopes,
    nu1: &Direction,
    eps: f64,
    n: usize,
    k_rep: usize,
    op: &dyn DirectionalOperator,
    fbar: Option<&HomogenizedOperator>,
    config: &CellConfig,
) -> Result<SecondHomogenization> {
    let fbar = fbar.ok_or_else(|| Error::Dependency("second homogenization needs the homogenized operator".into()))?;
    let m = slopes.mu_k.len();
    if m == 0 || n == 0 || k_rep == 0 {
        return Err(Error::InvalidInput("need at least one slope, N ≥ 1 and K ≥ 1".into()));
    }
    let segment = n as f64 * eps;
    let period = m as f64 * segment;
    let width = k_rep as f64 * period;
    if width > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!("K·m·N·ε = {width} exceeds 1")));
    }
    let h = config.spacing(eps)?;
    let mut extent = slab_extent(config, width, h);
    // Whole periods inside the averaging window.
    extent = (extent / period).ceil() * period;
    let grid = build_slab_grid(nu1, [0.0, 0.0], h, snap(extent, h), width)?;
    let top: Vec<f64> = (0..grid.n_lateral).map(|i| piecewise(&slopes.mu_k, segment, grid.s(i))).collect();
    let bottom = vec![1.0; grid.n_lateral];
    let osc = solve_refitted(&grid, op, eps, top.clone(), bottom.clone(), config)?;
    let hom = solve_refitted(&grid, fbar.as_directional(), eps, top, bottom, config)?;
    Ok(SecondHomogenization {
        slope_oscillatory: osc.slope,
        slope_homogenized: hom.slope,
        gap: (osc.slope - hom.slope).abs(),
        width,
        period,
    })
}

/// Gate exponents: `ε₀ ≤ min(δ^{eps0_exponent}, δ/N₀)` and
/// `ε ≤ δ·η₀^{eps_exponent}`. The strict values are 20 and 21/20.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleGates {
    pub eps0_exponent: f64,
    pub eps_exponent: f64,
    pub n0: Option<usize>,
}

pub const STRICT_EPS0_EXPONENT: f64 = 20.0;
pub const STRICT_EPS_EXPONENT: f64 = 21.0 / 20.0;

impl Default for ScaleGates {
    fn default() -> Self {
        ScaleGates { eps0_exponent: 3.0, eps_exponent: STRICT_EPS_EXPONENT, n0: None }
    }
}

impl ScaleGates {
    /// Desk-scale gates with `ε ≤ δ·η₀^{1/2}`.
    pub fn relaxed() -> Self {
        ScaleGates { eps_exponent: 0.5, ..Self::default() }
    }
}

/// Scale bookkeeping for a direction `ν` and two nearby directions
/// `ν₁, ν₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleBook {
    pub delta: f64,
    pub nu: Direction,
    pub nu1: Direction,
    pub nu2: Direction,
    /// `|ν₁ − ν|`.
    pub eps0: f64,
    /// `|ν₂ − ν|`.
    pub eta0: f64,
    /// `⌊δ/ε₀⌋`.
    pub n: usize,
    /// `⌊δ/η₀⌋`.
    pub m: usize,
    pub eps: f64,
    pub gates: ScaleGates,
    pub eps0_gate: f64,
    pub eps_gate: f64,
    pub eps0_gate_ok: bool,
    pub eps_gate_ok: bool,
    pub ordering_ok: bool,
    pub warnings: Vec<String>,
}

impl ScaleBook {
    pub fn new(delta: f64, nu: &Direction, nu1: &Direction, nu2: &Direction, eps: f64, gates: ScaleGates) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        let eps0 = nu1.distance(nu);
        let eta0 = nu2.distance(nu);
        if !(eps0 > 0.0 && eta0 > 0.0) {
            return Err(Error::InvalidInput("ν₁ and ν₂ must differ from ν".into()));
        }
        let n = (delta / eps0).floor() as usize;
        let m = (delta / eta0).floor() as usize;
        let mut eps0_gate = delta.powf(gates.eps0_exponent);
        if let Some(n0) = gates.n0 {
            eps0_gate = eps0_gate.min(delta / n0.max(1) as f64);
        }
        let eps_gate = delta * eta0.powf(gates.eps_exponent);
        let eps0_gate_ok = eps0 <= eps0_gate;
        let eps_gate_ok = eps <= eps_gate;
        let ordering_ok = eta0 <= eps0;
        let mut warnings = Vec::new();
        if gates.eps0_exponent < STRICT_EPS0_EXPONENT {
            warnings.push(format!(
                "scale gate relaxed: eps0 <= delta^{} (strict delta^{} = {:.3e})",
                gates.eps0_exponent,
                STRICT_EPS0_EXPONENT,
                delta.powf(STRICT_EPS0_EXPONENT)
            ));
        }
        if gates.eps_exponent < STRICT_EPS_EXPONENT {
            warnings.push(format!(
                "scale gate relaxed: eps <= delta*eta0^{} (strict exponent {})",
                gates.eps_exponent, STRICT_EPS_EXPONENT
            ));
        }
        if !eps0_gate_ok {
            warnings.push(format!("eps0 = {eps0:.4e} exceeds the gate {eps0_gate:.4e}"));
        }
        if !eps_gate_ok {
            warnings.push(format!("eps = {eps:.4e} exceeds the gate {eps_gate:.4e}"));
        }
        if !ordering_ok {
            warnings.push(format!("eta0 = {eta0:.4e} exceeds eps0 = {eps0:.4e}"));
        }
        if n == 0 {
            warnings.push("N = floor(delta/eps0) is zero".into());
        }
        Ok(ScaleBook {
            delta,
            nu: *nu,
            nu1: *nu1,
            nu2: *nu2,
            eps0,
            eta0,
            n,
            m,
            eps,
            gates,
            eps0_gate,
            eps_gate,
            eps0_gate_ok,
            eps_gate_ok,
            ordering_ok,
            warnings,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    /// `U_ε` with the slope raised by the margin.
    Super,
    /// `V_ε` with the slope lowered by the margin.
    Sub,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierConfig {
    /// The margin is `10·δ^{margin_exponent}`.
    pub margin_exponent: f64,
    /// Middle-region thickness in data periods `K`.
    pub repeats: usize,
    /// Width of the linear transition between slices, as a fraction of a
    /// slice, is `δ^β` with `β` the data's Hölder exponent.
    pub smooth_transitions: bool,
    /// Also solve the direct strip problem and measure domination.
    pub compare_direct: bool,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig { margin_exponent: 3.0, repeats: 1, smooth_transitions: true, compare_direct: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeReport {
    pub kind: BarrierKind,
    pub scalebook: ScaleBook,
    pub mu_bar_guess: f64,
    pub margin: f64,
    pub far_slope: f64,
    pub slab_slopes: Vec<f64>,
    /// Depths of the near/middle and middle/far interfaces.
    pub interfaces: [f64; 2],
    /// Residual extremes over region interiors, interfaces excluded.
    pub min_interior_residual: f64,
    pub max_interior_residual: f64,
    /// Worst residual (min for super, max for sub) on each interface row.
    pub interface_residual: [f64; 2],
    /// Mean one-sided normal-derivative jumps (below minus above).
    pub interface_derivative_gaps: [f64; 2],
    /// Worst face-row residual (same sense as the interfaces).
    pub neumann_residual: f64,
    /// Largest `u_ε − U_ε` (super) or `V_ε − u_ε` (sub); `None` if skipped.
    pub domination_gap: Option<f64>,
    pub residual_tolerance: f64,
    pub value_tolerance: f64,
    pub warnings: Vec<String>,
}

impl CompositeReport {
    /// Interior residual has the barrier sign up to `10·tol`.
    pub fn interior_ok(&self) -> bool {
        match self.kind {
            BarrierKind::Super => self.min_interior_residual >= -10.0 * self.residual_tolerance,
            BarrierKind::Sub => self.max_interior_residual <= 10.0 * self.residual_tolerance,
        }
    }

    pub fn dominates(&self) -> Option<bool> {
        self.domination_gap.map(|g| g <= 2.0 * self.value_tolerance)
    }
}

/// Middle-region flux along the interface at lateral column `i`: the slab
/// slope of the slice nearest to the face point's height, optionally blended
/// linearly with the neighbouring slice over a band of relative width `band`.
fn middle_flux(family_delta: f64, mu: &[f64], y2: f64, band: f64) -> f64 {
    let m = mu.len();
    let q = y2.rem_euclid(1.0) / family_delta;
    let k = q.round();
    let idx = |k: f64| (k.rem_euclid(m as f64) as usize) % m;
    let base = mu[idx(k)];
    if band <= 0.0 {
        return base;
    }
    let d = q - k;
    let half = 0.5 * band;
    if d.abs() <= 0.5 - half {
        return base;
    }
    let nb = mu[idx(if d > 0.0 { k + 1.0 } else { k - 1.0 })];
    let t = (d.abs() - (0.5 - half)) / band;
    base + t * (nb - base)
}

/// Assembles the composite barrier on the width-one strip normal to `ν₁`:
/// near region `0 ≥ t ≥ −2Nε` solved with the true data, middle region of
/// thickness `K·m·N·ε` solved with slab slopes plus half the margin as flux,
/// far region linear with slope `μ̄ ± margin`; then evaluates residuals and,
/// optionally, domination of the direct solve.
#[allow(clippy::too_many_arguments)]
pub fn composite_barrier_check(
    eps: f64,
    book: &ScaleBook,
    op: &(dyn DirectionalOperator + Sync),
    g: &NeumannData,
    mu_bar_guess: f64,
    kind: BarrierKind,
    config: &CellConfig,
    barrier: &BarrierConfig,
) -> Result<CompositeReport> {
    let nu1 = &book.nu1;
    let n = book.n.max(1);
    let family = projection_family(g, book.delta)?;
    let slopes = slab_slopes(nu1, [0.0, 0.0], eps, n, &family, op, config)?;
    let sign = match kind {
        BarrierKind::Super => 1.0,
        BarrierKind::Sub => -1.0,
    };
    let margin = 10.0 * book.delta.powf(barrier.margin_exponent);
    let far_slope = mu_bar_guess + sign * margin;
    let h = config.spacing(eps)?;
    let full = build_strip_grid(nu1, [0.0, 0.0], h, config.lateral_extent)?;
    let d_near = 2.0 * n as f64 * eps;
    let thickness = barrier.repeats.max(1) as f64 * family.m as f64 * n as f64 * eps;
    let d_mid = d_near + thickness;
    if d_mid > 1.0 - 2.0 * h {
        return Err(Error::InvalidConfig(format!(
            "near and middle regions ({d_mid:.4}) leave no far region in the unit strip"
        )));
    }
    let j_near = full.top() - (d_near / h).round() as usize;
    let j_mid = full.top() - (d_mid / h).round() as usize;
    let mut warnings = book.warnings.clone();

    // Middle region.
    let p_mid = [-d_near * nu1.components[0], -d_near * nu1.components[1]];
    let mid_grid = build_slab_grid(nu1, p_mid, h, config.lateral_extent, thickness)?;
    let band = if barrier.smooth_transitions { book.delta.powf(g.holder_beta).min(1.0) } else { 0.0 };
    let mid_top: Vec<f64> = (0..mid_grid.n_lateral)
        .map(|i| {
            let x = mid_grid.world(i, mid_grid.top());
            middle_flux(family.delta, &slopes.mu_k, x[1] / eps, band) + sign * 0.5 * margin
        })
        .collect();
    let base_mid = 1.0 + far_slope * (1.0 - d_mid);
    let mid = solve_refitted(&mid_grid, op, eps, mid_top, vec![base_mid; mid_grid.n_lateral], config)?;

    // Near region, bottom glued to the middle region's face.
    let near_grid = build_slab_grid(nu1, [0.0, 0.0], h, config.lateral_extent, d_near)?;
    let near_top: Vec<f64> = (0..near_grid.n_lateral)
        .map(|i| {
            let x = near_grid.world(i, near_grid.top());
            g.eval([x[0] / eps, x[1] / eps])
        })
        .collect();
    let near_bottom: Vec<f64> = (0..near_grid.n_lateral).map(|i| mid.field.values[mid_grid.id(i, mid_grid.top())]).collect();
    let near = solve_refitted(&near_grid, op, eps, near_top, near_bottom, config)?;

    // Assemble on the full strip.
    let mut u = vec![0.0; full.len()];
    for i in 0..full.n_lateral {
        for j in 0..full.n_normal {
            u[full.id(i, j)] = if j >= j_near {
                near.field.values[near_grid.id(i, j - j_near)]
            } else if j >= j_mid {
                mid.field.values[mid_grid.id(i, j - j_mid)]
            } else {
                1.0 + far_slope * (full.t(j) + 1.0)
            };
        }
    }

    let data = StripData {
        top: (0..full.n_lateral)
            .map(|i| {
                let x = full.world(i, full.top());
                g.eval([x[0] / eps, x[1] / eps])
            })
            .collect(),
        bottom: (0..full.n_lateral).map(|i| u[full.id(i, 0)]).collect(),
        left: (0..full.n_normal).map(|j| u[full.id(0, j)]).collect(),
        right: (0..full.n_normal).map(|j| u[full.id(full.n_lateral - 1, j)]).collect(),
    };
    let system = build_strip_system(&full, op, eps, &data)?;
    let tol = config.solve.residual_tolerance(h);
    let worst = |a: f64, b: f64| if sign > 0.0 { a.min(b) } else { a.max(b) };
    let init = if sign > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    let (mut min_r, mut max_r) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut iface = [init; 2];
    let mut face = init;
    for r in 0..full.len() {
        let (_, j) = full.index(r);
        match system.class[r] {
            RowClass::Interior => {
                let v = system.row_residual(&u, r);
                if j == j_near {
                    iface[0] = worst(iface[0], v);
                } else if j == j_mid {
                    iface[1] = worst(iface[1], v);
                } else {
                    min_r = min_r.min(v);
                    max_r = max_r.max(v);
                }
            }
            RowClass::Neumann => face = worst(face, system.row_residual(&u, r)),
            _ => {}
        }
    }
    let gaps = [derivative_gap(&full, &u, j_near), derivative_gap(&full, &u, j_mid)];

    let value_tol = tol * h * h;
    let domination_gap = if barrier.compare_direct {
        let direct = solve_cell(nu1, [0.0, 0.0], eps, op, g, config)?;
        let f = &direct.field.values;
        let gap = u.iter().zip(f).map(|(b, d)| sign * (d - b)).fold(f64::NEG_INFINITY, f64::max);
        if gap > 2.0 * value_tol {
            warnings.push(format!("composite does not dominate the direct solve: gap {gap:.3e}"));
        }
        Some(gap)
    } else {
        None
    };
    Ok(CompositeReport {
        kind,
        scalebook: book.clone(),
        mu_bar_guess,
        margin,
        far_slope,
        slab_slopes: slopes.mu_k,
        interfaces: [d_near, d_mid],
        min_interior_residual: min_r,
        max_interior_residual: max_r,
        interface_residual: iface,
        interface_derivative_gaps: gaps,
        neumann_residual: face,
        domination_gap,
        residual_tolerance: tol,
        value_tolerance: value_tol,
        warnings,
    })
}

/// Center-half mean of `(u_j − u_{j−1})/h − (u_{j+1} − u_j)/h` on row `j`.
fn derivative_gap(grid: &StripGrid, u: &[f64], j: usize) -> f64 {
    let c = grid.center();
    let half = grid.lateral_steps as usize / 2;
    let cols = (c - half)..(c + half);
    let n = cols.len() as f64;
    cols.map(|i| {
        let below = (u[grid.id(i, j)] - u[grid.id(i, j - 1)]) / grid.h;
        let above = (u[grid.id(i, j + 1)] - u[grid.id(i, j)]) / grid.h;
        below - above
    })
    .sum::<f64>()
        / n
}
