//! The end-to-end pipeline on a bounded domain `Ω ⊃ K`: the oscillatory
//! Neumann problem, the homogenized problem driven by a slope table, the
//! convergence study between the two, and the non-flatness condition on
//! `∂Ω`.

use serde::{Deserialize, Serialize};

use crate::cell::SlopeTable;
use crate::error::{Error, Result};
use crate::fbar::{HomogenizedOperator, InvarianceReport};
use crate::grid::{build_domain_grid, build_domain_system, DomainGrid, DomainNode, Field, LevelSet};
use crate::operators::{DirectionalOperator, Frame, NeumannData};
use crate::solver::{solve_system, SolveConfig, SolveStats};

/// Required clearance between `K` and `∂Ω`.
pub const MIN_CLEARANCE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub name: String,
    pub outer: LevelSet,
    pub inner: LevelSet,
}

const BOUNDARY_SAMPLES: usize = 2048;

impl DomainSpec {
    /// Ellipse with semi-axes `a, b` around the unit disk.
    pub fn ellipse(a: f64, b: f64) -> Self {
        DomainSpec {
            name: format!("ellipse_{a}_{b}"),
            outer: LevelSet::Ellipse { a, b, center: [0.0, 0.0] },
            inner: LevelSet::unit_disk(),
        }
    }

    /// Annulus `r1 < |x| < r2`, with `K` the disk of radius `r1`.
    pub fn annulus(r1: f64, r2: f64) -> Self {
        DomainSpec {
            name: format!("annulus_{r1}_{r2}"),
            outer: LevelSet::Circle { r: r2, center: [0.0, 0.0] },
            inner: LevelSet::Circle { r: r1, center: [0.0, 0.0] },
        }
    }

    /// Checks that both level sets are well formed, that `∂Ω` is smooth
    /// (bounded second derivatives of `φ` along the boundary, no kinks) and
    /// that `K` keeps a clearance of at least [`MIN_CLEARANCE`] from `∂Ω`.
    pub fn validate(&self) -> Result<()> {
        self.outer.validate()?;
        self.inner.validate()?;
        if matches!(self.outer, LevelSet::Rectangle { .. }) {
            return Err(Error::InvalidConfig(format!("{}: boundary has corners and is not C²", self.name)));
        }
        if let LevelSet::Expr { expr, .. } = &self.outer {
            for x in boundary_points(&self.outer, 256)? {
                let jet = expr.eval_jet(x);
                let bounded = jet.h.iter().flatten().all(|v| v.is_finite() && v.abs() < 1e8);
                if !bounded || jet.g[0].hypot(jet.g[1]) < 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "{}: level set is singular near ({:.4}, {:.4})",
                        self.name, x[0], x[1]
                    )));
                }
            }
        }
        let outer = boundary_points(&self.outer, BOUNDARY_SAMPLES)?;
        let inner = boundary_points(&self.inner, BOUNDARY_SAMPLES / 4)?;
        if inner.iter().any(|&x| self.outer.value(x) >= 0.0) {
            return Err(Error::InvalidConfig(format!("{}: K is not inside Ω", self.name)));
        }
        let gap = inner
            .iter()
            .map(|&x| nearest_distance(&outer, x))
            .fold(f64::INFINITY, f64::min);
        if gap < MIN_CLEARANCE {
            return Err(Error::InvalidConfig(format!(
                "{}: K comes within {gap:.4} of the boundary (need {MIN_CLEARANCE})",
                self.name
            )));
        }
        Ok(())
    }
}

fn center_of(ls: &LevelSet) -> [f64; 2] {
    match ls {
        LevelSet::Ellipse { center, .. } | LevelSet::Circle { center, .. } => *center,
        _ => {
            let b = ls.bounds();
            [0.5 * (b[0][0] + b[1][0]), 0.5 * (b[0][1] + b[1][1])]
        }
    }
}

/// Boundary point on the ray from the center at angle `phi`, by bisection.
/// The region must be star-shaped about its center.
fn ray_point(ls: &LevelSet, c: [f64; 2], far: f64, phi: f64) -> Result<[f64; 2]> {
    let d = [phi.cos(), phi.sin()];
    let at = |s: f64| [c[0] + s * d[0], c[1] + s * d[1]];
    if ls.value(c) >= 0.0 || ls.value(at(far)) <= 0.0 {
        return Err(Error::InvalidInput("level set is not star-shaped about its center".into()));
    }
    let (mut lo, mut hi) = (0.0, far);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ls.value(at(mid)) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(at(0.5 * (lo + hi)))
}

fn far_radius(ls: &LevelSet, c: [f64; 2]) -> f64 {
    let b = ls.bounds();
    let dx = (b[0][0] - c[0]).abs().max((b[1][0] - c[0]).abs());
    let dy = (b[0][1] - c[1]).abs().max((b[1][1] - c[1]).abs());
    2.0 * dx.hypot(dy) + 1.0
}

/// `count` boundary points at equally spaced ray angles.
pub fn boundary_points(ls: &LevelSet, count: usize) -> Result<Vec<[f64; 2]>> {
    let c = center_of(ls);
    let far = far_radius(ls, c);
    (0..count)
        .map(|k| ray_point(ls, c, far, std::f64::consts::TAU * k as f64 / count as f64))
        .collect()
}

fn nearest_distance(points: &[[f64; 2]], x: [f64; 2]) -> f64 {
    points.iter().map(|p| (p[0] - x[0]).hypot(p[1] - x[1])).fold(f64::INFINITY, f64::min)
}

/// Per-point entry of a [`NonFlatnessReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonFlatnessPoint {
    pub x0: [f64; 2],
    /// `r(σ)` for each σ of the report, nondecreasing.
    pub r_of_sigma: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonFlatnessReport {
    pub sigma_list: Vec<f64>,
    pub r0: f64,
    pub points: Vec<NonFlatnessPoint>,
    /// `(x₀, x)`: a boundary pair at distance about `r₀` whose normals
    /// differ by less than the smallest σ.
    pub flat_witness: Option<([f64; 2], [f64; 2])>,
}

impl NonFlatnessReport {
    pub fn accepted(&self) -> bool {
        self.flat_witness.is_none()
    }
}

/// For each of `samples` boundary points `x₀` and each σ, the smallest `r`
/// such that every boundary point `x` with `r < |x − x₀| < r₀` has
/// `|ν_x − ν_{x₀}| ≥ σ`. `r₀` defaults to a quarter of the diameter.
pub fn non_flatness_report(
    outer: &LevelSet,
    sigma_list: &[f64],
    samples: usize,
    r0: Option<f64>,
) -> Result<NonFlatnessReport> {
    if sigma_list.is_empty() || sigma_list.iter().any(|s| !(*s > 0.0)) || sigma_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sigma list must be positive and increasing".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one boundary sample".into()));
    }
    let dense = 8192;
    let c = center_of(outer);
    let far = far_radius(outer, c);
    let angle = |k: usize| std::f64::consts::TAU * k as f64 / dense as f64;
    let pts: Vec<[f64; 2]> = (0..dense).map(|k| ray_point(outer, c, far, angle(k))).collect::<Result<_>>()?;
    let normals: Vec<[f64; 2]> = pts
        .iter()
        .map(|&x| outer.normal(x).ok_or_else(|| Error::InvalidInput("level-set gradient vanishes on the boundary".into())))
        .collect::<Result<_>>()?;
    let r0 = match r0 {
        Some(r) => r,
        None => {
            let stride = (dense / 1024).max(1);
            let mut diam: f64 = 0.0;
            for a in (0..dense).step_by(stride) {
                for b in (a..dense).step_by(stride) {
                    diam = diam.max((pts[a][0] - pts[b][0]).hypot(pts[a][1] - pts[b][1]));
                }
            }
            0.25 * diam
        }
    };
    let ndiff = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]);
    let mut points = Vec::with_capacity(samples);
    let mut witness = None;
    for s in 0..samples {
        let k0 = s * dense / samples;
        let (x0, n0) = (pts[k0], normals[k0]);
        let mut rs = Vec::with_capacity(sigma_list.len());
        let mut running: f64 = 0.0;
        for (si, &sigma) in sigma_list.iter().enumerate() {
            let mut r: f64 = 0.0;
            let mut far_k = None;
            for k in 0..dense {
                if k == k0 {
                    continue;
                }
                let d = ndiff(pts[k], x0);
                if d < r0 && ndiff(normals[k], n0) < sigma && d > r {
                    r = d;
                    far_k = Some(k);
                }
            }
            // Refine between the farthest violating sample and its outer
            // neighbour along the boundary.
            if let Some(k) = far_k {
                for nb in [(k + 1) % dense, (k + dense - 1) % dense] {
                    if ndiff(pts[nb], x0) <= r || ndiff(normals[nb], n0) < sigma {
                        continue;
                    }
                    let (mut lo, mut hi) = (angle(k), angle(k) + if nb == (k + 1) % dense { 1.0 } else { -1.0 } * angle(1));
                    for _ in 0..50 {
                        let mid = 0.5 * (lo + hi);
                        let x = ray_point(outer, c, far, mid)?;
                        let n = outer.normal(x).unwrap_or(n0);
                        if ndiff(n, n0) < sigma && ndiff(x, x0) < r0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    r = r.max(ndiff(ray_point(outer, c, far, lo)?, x0));
                }
                if si == 0 && r >= 0.95 * r0 && witness.is_none() {
                    witness = Some((x0, pts[k]));
                }
            }
            running = running.max(r);
            rs.push(running);
        }
        points.push(NonFlatnessPoint { x0, r_of_sigma: rs });
    }
    Ok(NonFlatnessReport { sigma_list: sigma_list.to_vec(), r0, points, flat_witness: witness })
}

/// A solved domain problem.
#[derive(Clone, Debug)]
pub struct DomainSolution {
    pub grid: DomainGrid,
    pub field: Field,
    pub stats: SolveStats,
}

fn solve_on(
    grid: DomainGrid,
    op: &dyn DirectionalOperator,
    eps: f64,
    flux: &dyn Fn([f64; 2], [f64; 2]) -> f64,
    solve: &SolveConfig,
    init: Option<&[f64]>,
) -> Result<DomainSolution> {
    let system = build_domain_system(&grid, op, eps, flux, 1.0)?;
    let guess = match init {
        Some(u) if u.len() == grid.len() => u.to_vec(),
        _ => vec![1.0; grid.len()],
    };
    let (u, stats) = solve_system(&system, &guess, solve)?;
    if !stats.converged {
        return Err(Error::NotConverged { residual: stats.final_residual, iterations: stats.iterations });
    }
    Ok(DomainSolution { grid, field: Field::new(u), stats })
}

fn domain_grid(domain: &DomainSpec, op: &dyn DirectionalOperator, h: f64) -> Result<DomainGrid> {
    domain.validate()?;
    build_domain_grid(&domain.outer, &domain.inner, h, op.uses_diagonals(&Frame::IDENTITY))
}

/// Solves `F(D²u, x/ε) = 0` in `Ω ∖ K`, `∂u/∂ν = g(x/ε)` on `∂Ω`, `u = 1`
/// on `K`, with grid spacing `h ≤ ε/8`.
pub fn solve_eps_domain(
    domain: &DomainSpec,
    op: &dyn DirectionalOperator,
    g: &NeumannData,
    eps: f64,
    h: f64,
    solve: &SolveConfig,
) -> Result<DomainSolution> {
    if !(eps > 0.0) || h > eps / 8.0 + 1e-15 {
        return Err(Error::InvalidConfig(format!("need h ≤ ε/8, got h = {h}, ε = {eps}")));
    }
    let grid = domain_grid(domain, op, h)?;
    solve_on(grid, op, eps, &|foot, _| g.eval([foot[0] / eps, foot[1] / eps]), solve, None)
}

/// Solves `F̄(D²u) = 0` with `∂u/∂ν = μ̄(ν_x)` interpolated from the slope
/// table at each boundary foot point.
pub fn solve_homogenized_domain(
    domain: &DomainSpec,
    fbar: Option<&HomogenizedOperator>,
    slopes: Option<&SlopeTable>,
    invariance: Option<&InvarianceReport>,
    h: f64,
    solve: &SolveConfig,
    init: Option<&[f64]>,
) -> Result<DomainSolution> {
    let fbar = fbar.ok_or_else(|| Error::Dependency("homogenized solve needs the homogenized operator".into()))?;
    let slopes = slopes.ok_or_else(|| Error::Dependency("homogenized solve needs a slope table".into()))?;
    if let Some(rep) = invariance {
        if !rep.gate_passed {
            return Err(Error::Dependency(format!(
                "eigenvalue invariance failed (deviation {:.3e}); the slope table does not define the limit problem",
                rep.max_deviation
            )));
        }
    }
    let op = fbar.as_directional();
    let grid = domain_grid(domain, op, h)?;
    let flux = |_: [f64; 2], n: [f64; 2]| slopes.interpolate(n[1].atan2(n[0]));
    solve_on(grid, op, 1.0, &flux, solve, init)
}

/// Nodes of `Ω ∖ K` at distance at least `margin` from `∂Ω ∪ ∂K`.
pub fn compact_subset(domain: &DomainSpec, grid: &DomainGrid, margin: f64) -> Result<Vec<usize>> {
    let outer = boundary_points(&domain.outer, BOUNDARY_SAMPLES)?;
    let inner = boundary_points(&domain.inner, BOUNDARY_SAMPLES / 2)?;
    Ok(grid
        .interior_nodes()
        .filter(|&id| {
            let x = grid.world_of(id);
            nearest_distance(&outer, x) >= margin && nearest_distance(&inner, x) >= margin
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub eps: f64,
    pub h: f64,
    pub sup_distance: f64,
    pub nodes: usize,
    pub stats_eps: SolveStats,
    pub stats_homogenized: SolveStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub domain: String,
    pub margin: f64,
    pub entries: Vec<ConvergenceEntry>,
    pub strictly_decreasing: bool,
    /// `(max g − min g)·diam(Ω)`.
    pub crude_bound: f64,
}

impl ConvergenceReport {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "eps,sup_distance")?;
        for e in &self.entries {
            writeln!(w, "{:.17e},{:.17e}", e.eps, e.sup_distance)?;
        }
        Ok(())
    }
}

/// Sup-distance on the compact subset between `u_ε` (grid `h = ε/points`)
/// and the homogenized solution on the same grid, for each `ε`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_report(
    domain: &DomainSpec,
    op: &dyn DirectionalOperator,
    g: &NeumannData,
    eps_list: &[f64],
    margin: f64,
    points_per_period: u32,
    fbar: Option<&HomogenizedOperator>,
    slopes: Option<&SlopeTable>,
    solve: &SolveConfig,
) -> Result<ConvergenceReport> {
    convergence_study(domain, op, g, eps_list, margin, points_per_period, fbar, slopes, solve).map(|s| s.report)
}

/// A [`ConvergenceReport`] together with both solutions at the finest `ε`.
#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub report: ConvergenceReport,
    pub finest_eps: DomainSolution,
    pub finest_homogenized: DomainSolution,
}

#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    domain: &DomainSpec,
    op: &dyn DirectionalOperator,
    g: &NeumannData,
    eps_list: &[f64],
    margin: f64,
    points_per_period: u32,
    fbar: Option<&HomogenizedOperator>,
    slopes: Option<&SlopeTable>,
    solve: &SolveConfig,
) -> Result<ConvergenceStudy> {
    if eps_list.len() < 3 || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps list must be strictly decreasing with at least three entries".into()));
    }
    if !(margin > 0.0) || points_per_period < 8 {
        return Err(Error::InvalidInput("margin must be positive and points_per_period at least 8".into()));
    }
    let mut entries = Vec::with_capacity(eps_list.len());
    let mut finest = None;
    for &eps in eps_list {
        let h = eps / points_per_period as f64;
        let ue = solve_eps_domain(domain, op, g, eps, h, solve)?;
        let hom = solve_homogenized_domain(domain, fbar, slopes, None, h, solve, Some(&ue.field.values))?;
        let nodes = compact_subset(domain, &ue.grid, margin)?;
        let sup = nodes
            .iter()
            .map(|&id| (ue.field.values[id] - hom.field.values[id]).abs())
            .fold(0.0f64, f64::max);
        entries.push(ConvergenceEntry {
            eps,
            h,
            sup_distance: sup,
            nodes: nodes.len(),
            stats_eps: ue.stats.clone(),
            stats_homogenized: hom.stats.clone(),
        });
        finest = Some((ue, hom));
    }
    let strictly_decreasing = entries.windows(2).all(|w| w[1].sup_distance < w[0].sup_distance);
    let b = domain.outer.bounds();
    let diam = (b[1][0] - b[0][0]).hypot(b[1][1] - b[0][1]);
    let (finest_eps, finest_homogenized) = finest.expect("eps list is nonempty");
    Ok(ConvergenceStudy {
        report: ConvergenceReport {
            domain: domain.name.clone(),
            margin,
            entries,
            strictly_decreasing,
            crude_bound: (g.max() - g.min()) * diam,
        },
        finest_eps,
        finest_homogenized,
    })
}

/// Largest `|u − (1 + c ln r)|` over non-exterior nodes of an annulus
/// solution with flux `c/r₂` on the outer circle, and `u` at the outer
/// boundary point on the positive axis.
pub fn annulus_error(sol: &DomainSolution, c: f64, r2: f64) -> (f64, f64) {
    let g = &sol.grid;
    let mut worst: f64 = 0.0;
    for (id, k) in g.kinds.iter().enumerate() {
        if *k == DomainNode::Interior {
            let x = g.world_of(id);
            let r = x[0].hypot(x[1]);
            worst = worst.max((sol.field.values[id] - 1.0 - c * r.ln()).abs());
        }
    }
    let at = g.nearest([r2, 0.0]).map(|id| sol.field.values[id]).unwrap_or(f64::NAN);
    (worst, at)
}
