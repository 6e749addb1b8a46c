use serde::{Deserialize, Serialize};

use super::system::{collect_coefficients, DiscreteSystem, Nb, Row, RowClass, STENCIL_OFFSETS};
use crate::directions::Direction;
use crate::error::{Error, Result};
use crate::operators::{DirectionalOperator, Frame, NeumannData};

/// Frame-aligned tensor grid on a truncated slab `{−w ≤ (x−p)·ν ≤ 0}`,
/// `|s| ≤ L` laterally. Node `(i, j)` sits at `p + (−L + ih)τ + (−w + jh)ν`
/// and has id `i·n_normal + j`; row `j = n_normal − 1` is the Neumann face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    pub nu: Direction,
    pub p: [f64; 2],
    pub h: f64,
    /// `1/h`.
    pub steps_per_unit: u32,
    /// Width in grid steps (`n_normal − 1`).
    pub width_steps: u32,
    /// `L/h`.
    pub lateral_steps: u32,
    pub n_normal: usize,
    pub n_lateral: usize,
    pub lateral_extent: f64,
    pub frame: Frame,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StripNode {
    Interior,
    Neumann,
    Bottom,
    Lateral,
}

fn steps_of(h: f64) -> Result<u32> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!("grid spacing must be positive, got {h}")));
    }
    let k = (1.0 / h).round();
    if k < 1.0 || (k * h - 1.0).abs() > 1e-9 || k > 1e7 {
        return Err(Error::InvalidConfig(format!("1/h must be a positive integer, got h = {h}")));
    }
    Ok(k as u32)
}

fn multiple_of(x: f64, k: u32, what: &str) -> Result<u32> {
    let n = (x * k as f64).round();
    if n < 1.0 || (n / k as f64 - x).abs() > 1e-9 * x.max(1.0) {
        return Err(Error::InvalidConfig(format!("{what} = {x} is not a multiple of h = 1/{k}")));
    }
    Ok(n as u32)
}

/// Width-1 strip grid.
pub fn build_strip_grid(nu: &Direction, p: [f64; 2], h: f64, lateral_extent: f64) -> Result<StripGrid> {
    build_slab_grid(nu, p, h, lateral_extent, 1.0)
}

/// Slab of arbitrary width `w` (a multiple of `h`) with `L ≥ 4w`.
pub fn build_slab_grid(nu: &Direction, p: [f64; 2], h: f64, lateral_extent: f64, width: f64) -> Result<StripGrid> {
    let k = steps_of(h)?;
    if !(width > 0.0) {
        return Err(Error::InvalidConfig(format!("slab width must be positive, got {width}")));
    }
    let width_steps = multiple_of(width, k, "width")?;
    if width_steps < 2 {
        return Err(Error::InvalidConfig("slab must span at least two grid steps".into()));
    }
    if !(lateral_extent >= 4.0 * width - 1e-12) {
        return Err(Error::InvalidConfig(format!(
            "lateral extent L = {lateral_extent} must be at least 4 times the width {width}"
        )));
    }
    let lateral_steps = multiple_of(lateral_extent, k, "lateral extent")?;
    let n_normal = width_steps as usize + 1;
    let n_lateral = 2 * lateral_steps as usize + 1;
    if n_normal.saturating_mul(n_lateral) > u32::MAX as usize / 2 {
        return Err(Error::InvalidConfig("grid too large".into()));
    }
    Ok(StripGrid {
        nu: *nu,
        p,
        h: 1.0 / k as f64,
        steps_per_unit: k,
        width_steps,
        lateral_steps,
        n_normal,
        n_lateral,
        lateral_extent,
        frame: Frame::from_normal(nu.components),
    })
}

impl StripGrid {
    pub fn len(&self) -> usize {
        self.n_normal * self.n_lateral
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> f64 {
        self.width_steps as f64 / self.steps_per_unit as f64
    }

    pub fn id(&self, i: usize, j: usize) -> usize {
        i * self.n_normal + j
    }

    pub fn index(&self, id: usize) -> (usize, usize) {
        (id / self.n_normal, id % self.n_normal)
    }

    /// Lateral frame coordinate of column `i`.
    pub fn s(&self, i: usize) -> f64 {
        (i as f64 - self.lateral_steps as f64) / self.steps_per_unit as f64
    }

    /// Normal frame coordinate of row `j`, `(x−p)·ν`.
    pub fn t(&self, j: usize) -> f64 {
        (j as f64 - self.width_steps as f64) / self.steps_per_unit as f64
    }

    pub fn world(&self, i: usize, j: usize) -> [f64; 2] {
        let d = self.frame.to_world(self.s(i), self.t(j));
        [self.p[0] + d[0], self.p[1] + d[1]]
    }

    pub fn top(&self) -> usize {
        self.n_normal - 1
    }

    pub fn kind(&self, i: usize, j: usize) -> StripNode {
        if j == 0 {
            StripNode::Bottom
        } else if i == 0 || i + 1 == self.n_lateral {
            StripNode::Lateral
        } else if j == self.top() {
            StripNode::Neumann
        } else {
            StripNode::Interior
        }
    }

    /// Center column index (`s = 0`).
    pub fn center(&self) -> usize {
        self.lateral_steps as usize
    }

    /// Linear profile `slope·(t + w) + base` on every node.
    pub fn linear_profile(&self, slope: f64, base: f64) -> Vec<f64> {
        let mut u = vec![0.0; self.len()];
        for i in 0..self.n_lateral {
            for j in 0..self.n_normal {
                u[self.id(i, j)] = slope * (self.t(j) + self.width()) + base;
            }
        }
        u
    }
}

/// Boundary data of a strip problem.
#[derive(Clone, Debug, PartialEq)]
pub struct StripData {
    /// Neumann flux per column on the face.
    pub top: Vec<f64>,
    /// Dirichlet values per column on the bottom row.
    pub bottom: Vec<f64>,
    /// Dirichlet values per row on the first and last columns.
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl StripData {
    /// Oscillatory flux `g(x/ε)`, bottom value `base` and lateral faces on
    /// the linear profile with the given slope.
    pub fn oscillatory(grid: &StripGrid, g: &NeumannData, eps: f64, base: f64, lateral_slope: f64) -> Self {
        Self::with_flux(grid, |x| g.eval([x[0] / eps, x[1] / eps]), base, lateral_slope)
    }

    pub fn with_flux(grid: &StripGrid, flux: impl Fn([f64; 2]) -> f64, base: f64, lateral_slope: f64) -> Self {
        let top = (0..grid.n_lateral).map(|i| flux(grid.world(i, grid.top()))).collect();
        let bottom = vec![base; grid.n_lateral];
        let mut data = StripData { top, bottom, left: Vec::new(), right: Vec::new() };
        data.set_linear_sides(grid, lateral_slope, base);
        data
    }

    pub fn set_linear_sides(&mut self, grid: &StripGrid, slope: f64, base: f64) {
        let side: Vec<f64> = (0..grid.n_normal).map(|j| slope * (grid.t(j) + grid.width()) + base).collect();
        self.left = side.clone();
        self.right = side;
    }

    /// Initial iterate that matches the Dirichlet data and is linear inside.
    pub fn initial_guess(&self, grid: &StripGrid, slope: f64) -> Vec<f64> {
        let mut u = vec![0.0; grid.len()];
        for i in 0..grid.n_lateral {
            for j in 0..grid.n_normal {
                u[grid.id(i, j)] = slope * (grid.t(j) + grid.width()) + self.bottom[i];
            }
        }
        self.impose_dirichlet(grid, &mut u);
        u
    }

    pub fn impose_dirichlet(&self, grid: &StripGrid, u: &mut [f64]) {
        let last = grid.n_lateral - 1;
        for j in 0..grid.n_normal {
            u[grid.id(0, j)] = self.left[j];
            u[grid.id(last, j)] = self.right[j];
        }
        for i in 0..grid.n_lateral {
            u[grid.id(i, 0)] = self.bottom[i];
        }
    }

    fn check(&self, grid: &StripGrid) -> Result<()> {
        if self.top.len() != grid.n_lateral
            || self.bottom.len() != grid.n_lateral
            || self.left.len() != grid.n_normal
            || self.right.len() != grid.n_normal
        {
            return Err(Error::InvalidInput("strip boundary data does not match the grid".into()));
        }
        Ok(())
    }
}

/// Assembles the strip system. The face row carries the equation with the
/// out-of-strip neighbors reflected across the face, `u(i', J+1) =
/// u(i', J−1) + 2h·g_{i'}`.
pub fn build_strip_system<'a>(
    grid: &StripGrid,
    op: &'a dyn DirectionalOperator,
    eps: f64,
    data: &StripData,
) -> Result<DiscreteSystem<'a>> {
    data.check(grid)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let n = grid.len();
    let top = grid.top();
    let mut rows = Vec::with_capacity(n);
    let mut class = Vec::with_capacity(n);
    let mut pde_nodes = Vec::new();
    for i in 0..grid.n_lateral {
        for j in 0..grid.n_normal {
            let (row, cls) = match grid.kind(i, j) {
                StripNode::Bottom => (Row::Fixed(data.bottom[i]), RowClass::Dirichlet),
                StripNode::Lateral => {
                    let v = if i == 0 { data.left[j] } else { data.right[j] };
                    (Row::Fixed(v), RowClass::Dirichlet)
                }
                kind => {
                    let mut nb = [Nb::at(0); 8];
                    for (slot, &(di, dj)) in STENCIL_OFFSETS.iter().enumerate() {
                        let ii = (i as i64 + di) as usize;
                        let jj = j as i64 + dj;
                        nb[slot] = if jj as usize > top {
                            Nb { idx: grid.id(ii, top - 1) as u32, offset: 2.0 * grid.h * data.top[ii] }
                        } else {
                            Nb::at(grid.id(ii, jj as usize))
                        };
                    }
                    let coeff = pde_nodes.len() as u32;
                    pde_nodes.push((i, j));
                    let cls = if kind == StripNode::Neumann { RowClass::Neumann } else { RowClass::Interior };
                    (Row::Pde { nb, coeff }, cls)
                }
            };
            rows.push(row);
            class.push(cls);
        }
    }
    let (members, coeffs) = collect_coefficients(
        op,
        &grid.frame,
        pde_nodes.iter().map(|&(i, j)| {
            let x = grid.world(i, j);
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
        diagonals: op.uses_diagonals(&grid.frame),
    })
}
