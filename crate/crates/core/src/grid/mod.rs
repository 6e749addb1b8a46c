//! Strip, slab, level-set and periodic grids with their monotone
//! finite-difference systems.

mod domain;
mod strip;
mod system;
mod torus;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use domain::{build_domain_grid, build_domain_system, DomainGrid, DomainNode, GhostNode, LevelSet};
pub use strip::{build_slab_grid, build_strip_grid, build_strip_system, StripData, StripGrid, StripNode};
pub use system::{directional_shift, DiscreteSystem, JacobianRow, Nb, Row, RowClass, STENCIL_OFFSETS};
pub use torus::{build_torus_system, TorusGrid};

use crate::error::{Error, Result};
use crate::operators::{DirectionalOperator, NeumannData};

/// Nodal values on a grid. Exterior nodes of level-set grids hold NaN.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Max of `|v|` over finite entries.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Min of the finite entries.
    pub fn min_finite(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Writes `i,j,world_x,world_y,value` rows.
    pub fn write_csv(&self, grid: GridRef<'_>, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "i,j,world_x,world_y,value")?;
        for (id, v) in self.values.iter().enumerate() {
            let (i, j) = grid.index(id);
            let x = grid.world(id);
            writeln!(w, "{i},{j},{:.17e},{:.17e},{:.17e}", x[0], x[1], v)?;
        }
        Ok(())
    }
}

/// Borrowed handle to any grid kind.
#[derive(Clone, Copy, Debug)]
pub enum GridRef<'a> {
    Strip(&'a StripGrid),
    Domain(&'a DomainGrid),
    Torus(&'a TorusGrid),
}

impl<'a> GridRef<'a> {
    pub fn len(&self) -> usize {
        match self {
            GridRef::Strip(g) => g.len(),
            GridRef::Domain(g) => g.len(),
            GridRef::Torus(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, id: usize) -> (usize, usize) {
        match self {
            GridRef::Strip(g) => g.index(id),
            GridRef::Domain(g) => g.index(id),
            GridRef::Torus(g) => (id / g.n, id % g.n),
        }
    }

    pub fn world(&self, id: usize) -> [f64; 2] {
        let (i, j) = self.index(id);
        match self {
            GridRef::Strip(g) => g.world(i, j),
            GridRef::Domain(g) => g.world(i, j),
            GridRef::Torus(g) => g.world(i, j),
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            GridRef::Strip(g) => g.h,
            GridRef::Domain(g) => g.h,
            GridRef::Torus(g) => g.h,
        }
    }

    /// JSON metadata for run manifests.
    pub fn metadata(&self) -> serde_json::Value {
        match self {
            GridRef::Strip(g) => serde_json::json!({
                "kind": "strip",
                "nu": g.nu.components,
                "p": g.p,
                "h": g.h,
                "width": g.width(),
                "lateral_extent": g.lateral_extent,
                "n_normal": g.n_normal,
                "n_lateral": g.n_lateral,
            }),
            GridRef::Domain(g) => serde_json::json!({
                "kind": "domain",
                "h": g.h,
                "origin": g.origin,
                "nx": g.nx,
                "ny": g.ny,
                "outer": g.outer,
                "inner": g.inner,
                "ghosts": g.ghosts.len(),
                "interior": g.interior_nodes().count(),
            }),
            GridRef::Torus(g) => serde_json::json!({ "kind": "torus", "n": g.n, "h": g.h }),
        }
    }
}

impl<'a> From<&'a StripGrid> for GridRef<'a> {
    fn from(g: &'a StripGrid) -> Self {
        GridRef::Strip(g)
    }
}

impl<'a> From<&'a DomainGrid> for GridRef<'a> {
    fn from(g: &'a DomainGrid) -> Self {
        GridRef::Domain(g)
    }
}

impl<'a> From<&'a TorusGrid> for GridRef<'a> {
    fn from(g: &'a TorusGrid) -> Self {
        GridRef::Torus(g)
    }
}

/// Source of Neumann data for boundary diagnostics.
pub enum NeumannMode<'a> {
    /// `g(x/ε)`.
    Oscillatory { g: &'a NeumannData, eps: f64 },
    /// `f(x, ν)`.
    Function(&'a dyn Fn([f64; 2], [f64; 2]) -> f64),
}

impl NeumannMode<'_> {
    pub fn flux(&self, x: [f64; 2], normal: [f64; 2]) -> f64 {
        match self {
            NeumannMode::Oscillatory { g, eps } => g.eval([x[0] / eps, x[1] / eps]),
            NeumannMode::Function(f) => f(x, normal),
        }
    }
}

fn check_len(grid: GridRef<'_>, u: &Field) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::InvalidInput(format!("field has {} values, grid has {} nodes", u.len(), grid.len())));
    }
    Ok(())
}

/// `F_h(u)` at interior nodes (strict interior for strips); NaN elsewhere.
pub fn interior_residual(op: &dyn DirectionalOperator, grid: GridRef<'_>, eps: f64, u: &Field) -> Result<Field> {
    check_len(grid, u)?;
    let system = match grid {
        GridRef::Strip(g) => {
            let mut data = StripData::with_flux(g, |_| 0.0, 0.0, 0.0);
            data.bottom = (0..g.n_lateral).map(|i| u.values[g.id(i, 0)]).collect();
            data.left = (0..g.n_normal).map(|j| u.values[g.id(0, j)]).collect();
            data.right = (0..g.n_normal).map(|j| u.values[g.id(g.n_lateral - 1, j)]).collect();
            build_strip_system(g, op, eps, &data)?
        }
        GridRef::Domain(g) => build_domain_system(g, op, eps, &|_, _| 0.0, 1.0)?,
        GridRef::Torus(_) => {
            return Err(Error::InvalidInput("interior residual on a torus needs a discount; use the system directly".into()))
        }
    };
    let values = (0..grid.len())
        .map(|r| if system.class[r] == RowClass::Interior { system.row_residual(&u.values, r) } else { f64::NAN })
        .collect();
    Ok(Field { values })
}

/// Boundary residuals: the second-order one-sided normal derivative minus
/// the data on strip faces (lateral columns excluded), the ghost normal
/// difference minus the data on domain grids, and `u − dirichlet_value` at
/// Dirichlet nodes of `K` or the strip bottom. NaN elsewhere.
pub fn boundary_residual(grid: GridRef<'_>, u: &Field, mode: &NeumannMode<'_>, dirichlet_value: f64) -> Result<Field> {
    check_len(grid, u)?;
    let mut out = vec![f64::NAN; grid.len()];
    match grid {
        GridRef::Strip(g) => {
            if g.n_normal < 3 {
                return Err(Error::InvalidConfig("one-sided derivative needs three nodes across the strip".into()));
            }
            let top = g.top();
            for i in 0..g.n_lateral {
                out[g.id(i, 0)] = u.values[g.id(i, 0)] - dirichlet_value;
                if i == 0 || i + 1 == g.n_lateral {
                    continue;
                }
                let d = (3.0 * u.values[g.id(i, top)] - 4.0 * u.values[g.id(i, top - 1)] + u.values[g.id(i, top - 2)])
                    / (2.0 * g.h);
                out[g.id(i, top)] = d - mode.flux(g.world(i, top), g.nu.components);
            }
        }
        GridRef::Domain(g) => {
            for (id, kind) in g.kinds.iter().enumerate() {
                match kind {
                    DomainNode::Dirichlet => out[id] = u.values[id] - dirichlet_value,
                    DomainNode::Ghost(k) => {
                        let gh = &g.ghosts[*k as usize];
                        let probe: f64 = gh.probe.iter().map(|&(c, w)| w * u.values[c]).sum();
                        out[id] = (u.values[id] - probe) / (gh.distance + g.h) - mode.flux(gh.foot, gh.normal);
                    }
                    _ => {}
                }
            }
        }
        GridRef::Torus(_) => return Err(Error::InvalidInput("the torus has no boundary".into())),
    }
    Ok(Field { values: out })
}
