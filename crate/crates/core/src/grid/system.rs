//! Assembled discrete systems `R(u) = 0`.
//!
//! Every node owns one row. Equation rows apply the wide-stencil operator to
//! the four unit-direction second differences built from eight neighbors,
//! each neighbor being `u[idx] + offset` (reflected ghost values carry the
//! Neumann flux in `offset`). Fixed rows pin a value; linear rows encode
//! ghost-node boundary conditions on level-set grids.

use crate::error::{Error, Result};
use crate::operators::{DirectionalOperator, Frame, NodeCoefficients, SymmetricMatrix2};

/// Neighbor slot order: +τ, −τ, +ν, −ν, +d₁, −d₁, +d₂, −d₂ with d₁ = τ+ν and
/// d₂ = τ−ν measured in grid steps.
pub const STENCIL_OFFSETS: [(i64, i64); 8] =
    [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (1, -1), (-1, 1)];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nb {
    pub idx: u32,
    pub offset: f64,
}

impl Nb {
    pub fn at(idx: usize) -> Self {
        Nb { idx: idx as u32, offset: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Row {
    /// `F_h(u)` at the node (plus the discount term).
    Pde { nb: [Nb; 8], coeff: u32 },
    /// `u − value`.
    Fixed(f64),
    /// `Σ c_k u_k − rhs`.
    Linear { terms: Vec<(u32, f64)>, rhs: f64 },
}

/// Which residual rows a diagnostic refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowClass {
    Interior,
    Neumann,
    Dirichlet,
    Ghost,
    Exterior,
}

pub struct DiscreteSystem<'a> {
    pub rows: Vec<Row>,
    pub class: Vec<RowClass>,
    pub h: f64,
    pub op: &'a dyn DirectionalOperator,
    pub members: usize,
    pub coeffs: Vec<NodeCoefficients>,
    pub discount: f64,
    /// Directional values `dᵀMd` of a constant matrix added to every stencil.
    pub shift: [f64; 4],
    pub diagonals: bool,
}

/// Jacobian row entries `(column, value)`; fixed columns are omitted.
pub type JacobianRow = Vec<(u32, f64)>;

impl<'a> DiscreteSystem<'a> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn inv_h2(&self) -> [f64; 4] {
        let a = 1.0 / (self.h * self.h);
        [a, a, 0.5 * a, 0.5 * a]
    }

    /// The four directional second differences at an equation row.
    pub fn directional(&self, u: &[f64], center: usize, nb: &[Nb; 8]) -> [f64; 4] {
        let ih = self.inv_h2();
        let uc = u[center];
        let mut s = [0.0; 4];
        for k in 0..4 {
            let a = nb[2 * k];
            let b = nb[2 * k + 1];
            let va = u[a.idx as usize] + a.offset;
            let vb = u[b.idx as usize] + b.offset;
            s[k] = (va + vb - 2.0 * uc) * ih[k] + self.shift[k];
        }
        s
    }

    fn node_coeffs(&self, coeff: u32) -> &[NodeCoefficients] {
        let start = coeff as usize * self.members;
        &self.coeffs[start..start + self.members]
    }

    /// Residual of one row.
    pub fn row_residual(&self, u: &[f64], r: usize) -> f64 {
        match &self.rows[r] {
            Row::Pde { nb, coeff } => {
                let s = self.directional(u, r, nb);
                let (v, _, _) = self.op.apply(&s, self.node_coeffs(*coeff));
                v + self.discount * u[r]
            }
            Row::Fixed(v) => u[r] - v,
            Row::Linear { terms, rhs } => {
                terms.iter().map(|&(c, w)| w * u[c as usize]).sum::<f64>() - rhs
            }
        }
    }

    pub fn residual(&self, u: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row_residual(u, r);
        }
    }

    /// Max-norm of the residual over non-fixed rows.
    pub fn residual_norm(&self, res: &[f64]) -> f64 {
        let mut m: f64 = 0.0;
        for (r, v) in res.iter().enumerate() {
            if !matches!(self.rows[r], Row::Fixed(_)) {
                if v.is_nan() {
                    return f64::NAN;
                }
                m = m.max(v.abs());
            }
        }
        m
    }

    pub fn is_fixed(&self, r: usize) -> bool {
        matches!(self.rows[r], Row::Fixed(_))
    }

    /// Residual and Jacobian row with its policy code. Columns of fixed rows
    /// are dropped since their increments vanish.
    pub fn linearize_row(&self, u: &[f64], r: usize, jac: &mut JacobianRow) -> (f64, u32) {
        jac.clear();
        match &self.rows[r] {
            Row::Pde { nb, coeff } => {
                let s = self.directional(u, r, nb);
                let (v, w, code) = self.op.apply(&s, self.node_coeffs(*coeff));
                let ih = self.inv_h2();
                let mut diag = self.discount;
                for k in 0..4 {
                    if w[k] == 0.0 {
                        continue;
                    }
                    diag -= 2.0 * w[k] * ih[k];
                    for nbk in [nb[2 * k], nb[2 * k + 1]] {
                        push(jac, self, nbk.idx, w[k] * ih[k]);
                    }
                }
                push(jac, self, r as u32, diag);
                (v + self.discount * u[r], code)
            }
            Row::Fixed(v) => {
                jac.push((r as u32, 1.0));
                (u[r] - v, 0)
            }
            Row::Linear { terms, rhs } => {
                let mut acc = -rhs;
                for &(c, w) in terms {
                    acc += w * u[c as usize];
                    push(jac, self, c, w);
                }
                (acc, 0)
            }
        }
    }

    /// Column pattern of each row's Jacobian, independent of the policy.
    pub fn pattern(&self) -> Vec<Vec<u32>> {
        let mut out = Vec::with_capacity(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            let mut cols: Vec<u32> = match row {
                Row::Pde { nb, .. } => {
                    let used = if self.diagonals { 8 } else { 4 };
                    nb[..used]
                        .iter()
                        .map(|n| n.idx)
                        .filter(|&c| !self.is_fixed(c as usize))
                        .chain(std::iter::once(r as u32))
                        .collect()
                }
                Row::Fixed(_) => vec![r as u32],
                Row::Linear { terms, .. } => terms
                    .iter()
                    .map(|t| t.0)
                    .filter(|&c| !self.is_fixed(c as usize) || c as usize == r)
                    .collect(),
            };
            cols.sort_unstable();
            cols.dedup();
            out.push(cols);
        }
        out
    }

    /// Solves row `r` for its own unknown with all other values frozen.
    /// Equation rows are strictly increasing, piecewise linear in `u[r]`, so a
    /// safeguarded Newton iteration on the scalar equation terminates.
    pub fn relax_row(&self, u: &mut [f64], r: usize) -> f64 {
        match &self.rows[r] {
            Row::Fixed(v) => *v,
            Row::Linear { terms, rhs } => {
                let mut diag = 0.0;
                let mut acc = *rhs;
                for &(c, w) in terms {
                    if c as usize == r {
                        diag += w;
                    } else {
                        acc -= w * u[c as usize];
                    }
                }
                acc / diag
            }
            Row::Pde { .. } => {
                let mut x = u[r];
                let mut jac = Vec::new();
                let (lo_slope, _) = self.op.ellipticity();
                let min_slope = lo_slope * 2.0 / (self.h * self.h) + self.discount;
                let mut lo = f64::NEG_INFINITY;
                let mut hi = f64::INFINITY;
                for _ in 0..60 {
                    let old = u[r];
                    u[r] = x;
                    let (f, _) = self.linearize_row(u, r, &mut jac);
                    u[r] = old;
                    if f == 0.0 {
                        return x;
                    }
                    if f > 0.0 {
                        hi = hi.min(x);
                    } else {
                        lo = lo.max(x);
                    }
                    let d = jac
                        .iter()
                        .find(|e| e.0 as usize == r)
                        .map(|e| e.1)
                        .unwrap_or(min_slope)
                        .max(min_slope);
                    let mut next = x - f / d;
                    if lo.is_finite() && hi.is_finite() && !(next > lo && next < hi) {
                        next = 0.5 * (lo + hi);
                    }
                    if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                        return next;
                    }
                    x = next;
                }
                x
            }
        }
    }

    /// Policy signature (active branch per row) at `u`.
    pub fn policy(&self, u: &[f64]) -> Vec<u32> {
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| match row {
                Row::Pde { nb, coeff } => {
                    let s = self.directional(u, r, nb);
                    self.op.apply(&s, self.node_coeffs(*coeff)).2
                }
                _ => 0,
            })
            .collect()
    }
}

fn push(jac: &mut JacobianRow, sys: &DiscreteSystem<'_>, col: u32, v: f64) {
    if sys.is_fixed(col as usize) {
        return;
    }
    if let Some(e) = jac.iter_mut().find(|e| e.0 == col) {
        e.1 += v;
    } else {
        jac.push((col, v));
    }
}

/// Frame-rotated coefficients at every equation row.
pub(crate) fn collect_coefficients(
    op: &dyn DirectionalOperator,
    frame: &Frame,
    ys: impl Iterator<Item = [f64; 2]>,
) -> Result<(usize, Vec<NodeCoefficients>)> {
    let members = op.member_count();
    let mut all = Vec::new();
    let mut buf = Vec::with_capacity(members);
    for y in ys {
        op.node_coefficients(y, frame, &mut buf)?;
        if buf.len() != members {
            return Err(Error::SpecRejected("operator returned wrong member count".into()));
        }
        all.extend_from_slice(&buf);
    }
    Ok((members, all))
}

/// Directional values `dᵀMd` for the four stencil directions of the frame.
pub fn directional_shift(m: &SymmetricMatrix2, frame: &Frame) -> [f64; 4] {
    let d = frame.stencil_directions();
    [m.quad(d[0]), m.quad(d[1]), m.quad(d[2]), m.quad(d[3])]
}
