use serde::{Deserialize, Serialize};

use super::system::{collect_coefficients, DiscreteSystem, Nb, Row, RowClass, STENCIL_OFFSETS};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::operators::{DirectionalOperator, Frame};

/// Closed-form level set; the region is `{φ < 0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevelSet {
    /// `((x−c₀)/a)² + ((y−c₁)/b)² − 1`.
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `|x−c|²/r² − 1`.
    Circle {
        r: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `max(|x|/a, |y|/b) − 1`, an axis-aligned box with flat sides.
    Rectangle { a: f64, b: f64 },
    /// Arbitrary expression in world coordinates with an enclosing box.
    Expr { expr: Expr, bounds: [[f64; 2]; 2] },
}

impl LevelSet {
    pub fn unit_disk() -> Self {
        LevelSet::Circle { r: 1.0, center: [0.0, 0.0] }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            LevelSet::Ellipse { a, b, .. } | LevelSet::Rectangle { a, b } => *a > 0.0 && *b > 0.0,
            LevelSet::Circle { r, .. } => *r > 0.0,
            LevelSet::Expr { expr, bounds } => {
                expr.validate()?;
                bounds[0][0] < bounds[1][0] && bounds[0][1] < bounds[1][1]
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("degenerate level set {self:?}")))
        }
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        match self {
            LevelSet::Ellipse { a, b, center } => {
                let u = (x[0] - center[0]) / a;
                let v = (x[1] - center[1]) / b;
                u * u + v * v - 1.0
            }
            LevelSet::Circle { r, center } => {
                let u = (x[0] - center[0]) / r;
                let v = (x[1] - center[1]) / r;
                u * u + v * v - 1.0
            }
            LevelSet::Rectangle { a, b } => (x[0].abs() / a).max(x[1].abs() / b) - 1.0,
            LevelSet::Expr { expr, .. } => expr.eval(x),
        }
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        match self {
            LevelSet::Ellipse { a, b, center } => {
                [2.0 * (x[0] - center[0]) / (a * a), 2.0 * (x[1] - center[1]) / (b * b)]
            }
            LevelSet::Circle { r, center } => {
                [2.0 * (x[0] - center[0]) / (r * r), 2.0 * (x[1] - center[1]) / (r * r)]
            }
            LevelSet::Rectangle { a, b } => {
                if x[0].abs() / a >= x[1].abs() / b {
                    [x[0].signum() / a, 0.0]
                } else {
                    [0.0, x[1].signum() / b]
                }
            }
            LevelSet::Expr { expr, .. } => expr.eval_jet(x).g,
        }
    }

    /// Outward unit normal `∇φ/|∇φ|`.
    pub fn normal(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let g = self.gradient(x);
        let n = g[0].hypot(g[1]);
        (n > 0.0 && n.is_finite()).then(|| [g[0] / n, g[1] / n])
    }

    /// Axis-aligned bounding box `[min, max]`.
    pub fn bounds(&self) -> [[f64; 2]; 2] {
        match self {
            LevelSet::Ellipse { a, b, center } => {
                [[center[0] - a, center[1] - b], [center[0] + a, center[1] + b]]
            }
            LevelSet::Circle { r, center } => [[center[0] - r, center[1] - r], [center[0] + r, center[1] + r]],
            LevelSet::Rectangle { a, b } => [[-a, -b], [*a, *b]],
            LevelSet::Expr { bounds, .. } => *bounds,
        }
    }

    /// Point on `{φ = 0}` reached from `x` along `−∇φ(x)` (or `+∇φ` from
    /// inside), located by bisection.
    pub fn foot_point(&self, x: [f64; 2], reach: f64) -> Option<[f64; 2]> {
        let v0 = self.value(x);
        if v0 == 0.0 {
            return Some(x);
        }
        let n = self.normal(x)?;
        let dir = if v0 > 0.0 { -1.0 } else { 1.0 };
        let at = |s: f64| [x[0] + dir * s * n[0], x[1] + dir * s * n[1]];
        let steps = 64;
        let mut lo = 0.0;
        let mut hi = None;
        for k in 1..=steps {
            let s = reach * k as f64 / steps as f64;
            if self.value(at(s)).signum() != v0.signum() {
                hi = Some(s);
                break;
            }
            lo = s;
        }
        let mut hi = hi?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(at(mid)).signum() == v0.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        let a = at(lo);
        let b = at(hi);
        Some(if self.value(a).abs() <= self.value(b).abs() { a } else { b })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainNode {
    Interior,
    Dirichlet,
    /// Index into [`DomainGrid::ghosts`].
    Ghost(u32),
    Exterior,
}

/// Ghost node outside Ω with its boundary projection and the bilinear probe
/// used by its normal-difference row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhostNode {
    pub node: usize,
    pub foot: [f64; 2],
    pub normal: [f64; 2],
    /// Distance from the ghost to its foot point.
    pub distance: f64,
    /// Bilinear weights of the probe point `foot − h·normal`.
    pub probe: Vec<(usize, f64)>,
}

/// Cartesian grid on the bounding box of Ω with nodes classified by the
/// level sets; node `(i, j)` is at `origin + h·(i, j)` with id `i·ny + j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    pub h: f64,
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub outer: LevelSet,
    pub inner: LevelSet,
    pub kinds: Vec<DomainNode>,
    pub ghosts: Vec<GhostNode>,
    pub diagonals: bool,
}

impl DomainGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn id(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn index(&self, id: usize) -> (usize, usize) {
        (id / self.ny, id % self.ny)
    }

    pub fn world(&self, i: usize, j: usize) -> [f64; 2] {
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    pub fn world_of(&self, id: usize) -> [f64; 2] {
        let (i, j) = self.index(id);
        self.world(i, j)
    }

    /// Node nearest to a world point.
    pub fn nearest(&self, x: [f64; 2]) -> Option<usize> {
        let i = ((x[0] - self.origin[0]) / self.h).round();
        let j = ((x[1] - self.origin[1]) / self.h).round();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny)
            .then(|| self.id(i as usize, j as usize))
    }

    fn neighbor(&self, i: usize, j: usize, di: i64, dj: i64) -> Option<usize> {
        let a = i as i64 + di;
        let b = j as i64 + dj;
        (a >= 0 && b >= 0 && (a as usize) < self.nx && (b as usize) < self.ny).then(|| self.id(a as usize, b as usize))
    }

    /// Nodes of `Ω ∖ K` that carry the equation.
    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.kinds.iter().enumerate().filter(|(_, k)| **k == DomainNode::Interior).map(|(i, _)| i)
    }
}

/// Classifies a Cartesian grid against `Ω = {φ_outer < 0}` and
/// `K = {φ_inner ≤ 0}`. Exterior nodes adjacent (through the stencil) to an
/// interior node become ghosts.
pub fn build_domain_grid(outer: &LevelSet, inner: &LevelSet, h: f64, diagonals: bool) -> Result<DomainGrid> {
    outer.validate()?;
    inner.validate()?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("grid spacing must be positive, got {h}")));
    }
    let b = outer.bounds();
    let lo = [(b[0][0] / h).floor() - 2.0, (b[0][1] / h).floor() - 2.0];
    let hi = [(b[1][0] / h).ceil() + 2.0, (b[1][1] / h).ceil() + 2.0];
    let nx = (hi[0] - lo[0]) as usize + 1;
    let ny = (hi[1] - lo[1]) as usize + 1;
    if nx.saturating_mul(ny) > 50_000_000 {
        return Err(Error::InvalidConfig(format!("domain grid {nx}×{ny} is too large")));
    }
    let mut grid = DomainGrid {
        h,
        origin: [lo[0] * h, lo[1] * h],
        nx,
        ny,
        outer: outer.clone(),
        inner: inner.clone(),
        kinds: vec![DomainNode::Exterior; nx * ny],
        ghosts: Vec::new(),
        diagonals,
    };
    for i in 0..nx {
        for j in 0..ny {
            let x = grid.world(i, j);
            let id = grid.id(i, j);
            if outer.value(x) < 0.0 {
                grid.kinds[id] = if inner.value(x) <= 0.0 { DomainNode::Dirichlet } else { DomainNode::Interior };
            }
        }
    }
    let used = if diagonals { 8 } else { 4 };
    let mut ghost_ids = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if grid.kinds[grid.id(i, j)] != DomainNode::Interior {
                continue;
            }
            for &(di, dj) in &STENCIL_OFFSETS[..used] {
                let nb = grid.neighbor(i, j, di, dj).ok_or_else(|| Error::GridConstruction {
                    node: grid.id(i, j),
                    reason: "stencil leaves the grid".into(),
                })?;
                if grid.kinds[nb] == DomainNode::Exterior {
                    grid.kinds[nb] = DomainNode::Ghost(ghost_ids.len() as u32);
                    ghost_ids.push(nb);
                }
            }
        }
    }
    let mut ghosts = Vec::with_capacity(ghost_ids.len());
    for &g in &ghost_ids {
        let x = grid.world_of(g);
        let foot = outer.foot_point(x, 4.0 * h).ok_or_else(|| Error::GridConstruction {
            node: g,
            reason: "no boundary point found along the level-set normal".into(),
        })?;
        if outer.value(foot).abs() > 1e-10 {
            return Err(Error::GridConstruction { node: g, reason: "foot point is not on the boundary".into() });
        }
        let normal = outer
            .normal(foot)
            .ok_or_else(|| Error::GridConstruction { node: g, reason: "level-set gradient vanishes".into() })?;
        let distance = (x[0] - foot[0]).hypot(x[1] - foot[1]);
        let probe_pt = [foot[0] - h * normal[0], foot[1] - h * normal[1]];
        let probe = bilinear(&grid, probe_pt).ok_or_else(|| Error::GridConstruction {
            node: g,
            reason: "foot-point stencil underdetermined: probe cell touches exterior nodes".into(),
        })?;
        ghosts.push(GhostNode { node: g, foot, normal, distance, probe });
    }
    grid.ghosts = ghosts;
    Ok(grid)
}

fn bilinear(grid: &DomainGrid, x: [f64; 2]) -> Option<Vec<(usize, f64)>> {
    let fx = (x[0] - grid.origin[0]) / grid.h;
    let fy = (x[1] - grid.origin[1]) / grid.h;
    let i0 = fx.floor();
    let j0 = fy.floor();
    if i0 < 0.0 || j0 < 0.0 || i0 as usize + 1 >= grid.nx || j0 as usize + 1 >= grid.ny {
        return None;
    }
    let (i0, j0) = (i0 as usize, j0 as usize);
    let tx = fx - i0 as f64;
    let ty = fy - j0 as f64;
    let mut out = Vec::with_capacity(4);
    for (di, wx) in [(0, 1.0 - tx), (1, tx)] {
        for (dj, wy) in [(0, 1.0 - ty), (1, ty)] {
            let id = grid.id(i0 + di, j0 + dj);
            let w = wx * wy;
            if grid.kinds[id] == DomainNode::Exterior {
                if w > 0.0 {
                    return None;
                }
                continue;
            }
            if w != 0.0 {
                out.push((id, w));
            }
        }
    }
    Some(out)
}

/// Assembles the domain system: the equation at interior nodes, `u = value`
/// on `K`, and `(u_G − u(probe))/(d_G + h) = flux(foot, normal)` at ghosts.
pub fn build_domain_system<'a>(
    grid: &DomainGrid,
    op: &'a dyn DirectionalOperator,
    eps: f64,
    flux: &dyn Fn([f64; 2], [f64; 2]) -> f64,
    dirichlet_value: f64,
) -> Result<DiscreteSystem<'a>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if op.uses_diagonals(&Frame::IDENTITY) && !grid.diagonals {
        return Err(Error::InvalidConfig("operator needs diagonal neighbors; build the grid with diagonals".into()));
    }
    let n = grid.len();
    let mut rows = Vec::with_capacity(n);
    let mut class = Vec::with_capacity(n);
    let mut pde_nodes = Vec::new();
    for id in 0..n {
        let (i, j) = grid.index(id);
        let (row, cls) = match grid.kinds[id] {
            DomainNode::Exterior => (Row::Fixed(0.0), RowClass::Exterior),
            DomainNode::Dirichlet => (Row::Fixed(dirichlet_value), RowClass::Dirichlet),
            DomainNode::Interior => {
                let mut nb = [Nb::at(id); 8];
                let used = if grid.diagonals { 8 } else { 4 };
                for (slot, &(di, dj)) in STENCIL_OFFSETS[..used].iter().enumerate() {
                    nb[slot] = Nb::at(grid.neighbor(i, j, di, dj).expect("checked at grid construction"));
                }
                let coeff = pde_nodes.len() as u32;
                pde_nodes.push(id);
                (Row::Pde { nb, coeff }, RowClass::Interior)
            }
            DomainNode::Ghost(k) => {
                let gh = &grid.ghosts[k as usize];
                let scale = 1.0 / (gh.distance + grid.h);
                let mut terms: Vec<(u32, f64)> = vec![(id as u32, scale)];
                for &(c, w) in &gh.probe {
                    if c == id {
                        terms[0].1 -= w * scale;
                    } else {
                        terms.push((c as u32, -w * scale));
                    }
                }
                (Row::Linear { terms, rhs: flux(gh.foot, gh.normal) }, RowClass::Ghost)
            }
        };
        rows.push(row);
        class.push(cls);
    }
    let (members, coeffs) = collect_coefficients(
        op,
        &Frame::IDENTITY,
        pde_nodes.iter().map(|&id| {
            let x = grid.world_of(id);
            [x[0] / eps, x[1] / eps]
        }),
    )?;
    Ok(DiscreteSystem {
        rows,
        class,
        h: grid.h,
        op,
        members,
        coeffs,
        discount: 0.0,
        shift: [0.0; 4],
        diagonals: grid.diagonals,
    })
}
