use serde::{Deserialize, Serialize};

use super::system::{collect_coefficients, directional_shift, DiscreteSystem, Nb, Row, RowClass, STENCIL_OFFSETS};
use crate::error::{Error, Result};
use crate::operators::{DirectionalOperator, Frame, SymmetricMatrix2};

/// Uniform `n×n` grid on the unit torus, node `(i, j)` at `(i/n, j/n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    pub n: usize,
    pub h: f64,
}

impl TorusGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidConfig(format!("torus grid needs at least 4 nodes per side, got {n}")));
        }
        Ok(TorusGrid { n, h: 1.0 / n as f64 })
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn id(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn world(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.h, j as f64 * self.h]
    }
}

/// Periodic system `ρv + F(M + D²v, y) = 0`.
pub fn build_torus_system<'a>(
    grid: &TorusGrid,
    op: &'a dyn DirectionalOperator,
    m: &SymmetricMatrix2,
    rho: f64,
) -> Result<DiscreteSystem<'a>> {
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("discount must be positive, got {rho}")));
    }
    let n = grid.n as i64;
    let mut rows = Vec::with_capacity(grid.len());
    for i in 0..n {
        for j in 0..n {
            let mut nb = [Nb::at(0); 8];
            for (slot, &(di, dj)) in STENCIL_OFFSETS.iter().enumerate() {
                nb[slot] = Nb::at(grid.id((i + di).rem_euclid(n) as usize, (j + dj).rem_euclid(n) as usize));
            }
            rows.push(Row::Pde { nb, coeff: grid.id(i as usize, j as usize) as u32 });
        }
    }
    let (members, coeffs) = collect_coefficients(
        op,
        &Frame::IDENTITY,
        (0..grid.n).flat_map(|i| (0..grid.n).map(move |j| (i, j))).map(|(i, j)| grid.world(i, j)),
    )?;
    Ok(DiscreteSystem {
        class: vec![RowClass::Interior; rows.len()],
        rows,
        h: grid.h,
        op,
        members,
        coeffs,
        discount: rho,
        shift: directional_shift(m, &Frame::IDENTITY),
        diagonals: op.uses_diagonals(&Frame::IDENTITY),
    })
}
