//! Sparse LU with a fixed pattern, and the separable strip solver.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use rustdct::DctPlanner;

use crate::error::{Error, Result};

/// Sparse matrix with a pattern fixed at construction, refactorized
/// numerically on demand. The symbolic analysis is computed once.
pub struct SparseLu {
    n: usize,
    symbolic: SymbolicSparseColMat<usize>,
    symbolic_lu: SymbolicLu<usize>,
    /// Row-wise pattern: columns of row `r` are `row_cols[row_start[r]..row_start[r+1]]`.
    row_start: Vec<usize>,
    row_cols: Vec<u32>,
    /// Position of each row-wise entry in the column-major value array.
    row_pos: Vec<usize>,
    values: Vec<f64>,
    lu: Option<Lu<usize, f64>>,
}

impl SparseLu {
    /// `pattern[r]` lists the sorted, deduplicated columns of row `r`.
    pub fn new(pattern: &[Vec<u32>]) -> Result<Self> {
        let n = pattern.len();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut row_cols = Vec::new();
        row_start.push(0);
        let mut counts = vec![0usize; n + 1];
        for cols in pattern {
            for &c in cols {
                if c as usize >= n {
                    return Err(Error::LinearSolver(format!("column {c} out of range")));
                }
                counts[c as usize + 1] += 1;
                row_cols.push(c);
            }
            row_start.push(row_cols.len());
        }
        for c in 0..n {
            counts[c + 1] += counts[c];
        }
        let col_ptr = counts.clone();
        let mut fill = counts;
        let mut row_idx = vec![0usize; row_cols.len()];
        let mut row_pos = vec![0usize; row_cols.len()];
        for r in 0..n {
            for k in row_start[r]..row_start[r + 1] {
                let c = row_cols[k] as usize;
                row_idx[fill[c]] = r;
                row_pos[k] = fill[c];
                fill[c] += 1;
            }
        }
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        let symbolic_lu = SymbolicLu::try_new(symbolic.as_ref())
            .map_err(|e| Error::LinearSolver(format!("symbolic factorization failed: {e:?}")))?;
        let nnz = row_cols.len();
        Ok(SparseLu {
            n,
            symbolic,
            symbolic_lu,
            row_start,
            row_cols,
            row_pos,
            values: vec![0.0; nnz],
            lu: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Overwrites row `r` with `entries`; every column must be in the pattern.
    pub fn set_row(&mut self, r: usize, entries: &[(u32, f64)]) -> Result<()> {
        let cols = &self.row_cols[self.row_start[r]..self.row_start[r + 1]];
        for k in self.row_start[r]..self.row_start[r + 1] {
            self.values[self.row_pos[k]] = 0.0;
        }
        for &(c, v) in entries {
            let k = cols
                .binary_search(&c)
                .map_err(|_| Error::LinearSolver(format!("entry ({r}, {c}) outside the sparsity pattern")))?;
            self.values[self.row_pos[self.row_start[r] + k]] += v;
        }
        self.lu = None;
        Ok(())
    }

    pub fn factorize(&mut self) -> Result<()> {
        let a = SparseColMatRef::new(self.symbolic.as_ref(), &self.values);
        let lu = Lu::try_new_with_symbolic(self.symbolic_lu.clone(), a)
            .map_err(|e| Error::LinearSolver(format!("numeric factorization failed: {e:?}")))?;
        self.lu = Some(lu);
        Ok(())
    }

    pub fn is_factorized(&self) -> bool {
        self.lu.is_some()
    }

    /// Solves `A x = b` in place using the current factorization.
    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<()> {
        let lu = self.lu.as_ref().ok_or_else(|| Error::LinearSolver("matrix not factorized".into()))?;
        if b.len() != self.n {
            return Err(Error::LinearSolver("right-hand side has the wrong length".into()));
        }
        let rhs = MatMut::from_column_major_slice_mut(b, self.n, 1);
        lu.solve_in_place(rhs);
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolver("singular or ill-conditioned system".into()));
        }
        Ok(())
    }
}

/// Separable solve of `c·Δ_h u = 0` on a strip with Dirichlet bottom and
/// lateral columns and the reflected Neumann face, by a sine transform in
/// the lateral index and tridiagonal solves across the strip.
///
/// `u` is indexed `i·n_normal + j`; its bottom row and first and last
/// columns hold the Dirichlet data on entry, the rest is overwritten.
pub fn solve_separable_strip(u: &mut [f64], n_lateral: usize, n_normal: usize, h: f64, top_flux: &[f64]) -> Result<()> {
    if n_lateral < 3 || n_normal < 3 || u.len() != n_lateral * n_normal || top_flux.len() != n_lateral {
        return Err(Error::InvalidInput("separable strip solve: inconsistent sizes".into()));
    }
    let m = n_lateral - 2;
    let rows = n_normal - 1;
    let id = |i: usize, j: usize| i * n_normal + j;
    let jt = n_normal - 1;

    // Right-hand side f(k, j) for unknowns i = 1..=m, j = 1..=rows, stored row-major in j.
    let mut f = vec![0.0; m * rows];
    for j in 1..=rows {
        let fr = &mut f[(j - 1) * m..j * m];
        for (k, i) in (1..=m).enumerate() {
            let mut v = 0.0;
            if j == 1 {
                v -= u[id(i, 0)];
            }
            if j == jt {
                v -= 2.0 * h * top_flux[i];
            }
            fr[k] = v;
        }
        fr[0] -= u[id(0, j)];
        fr[m - 1] -= u[id(n_lateral - 1, j)];
    }

    let mut planner = DctPlanner::new();
    let dst = planner.plan_dst1(m);
    for row in f.chunks_mut(m) {
        dst.process_dst1(row);
    }

    // Tridiagonal solve across the strip for each sine mode.
    let mut c_prime = vec![0.0; rows];
    let mut d_prime = vec![0.0; rows];
    let mut col = vec![0.0; rows];
    for k in 0..m {
        let lam = -2.0 + 2.0 * (((k + 1) as f64) * std::f64::consts::PI / (m + 1) as f64).cos();
        let diag = -2.0 + lam;
        for (r, c) in col.iter_mut().enumerate() {
            *c = f[r * m + k];
        }
        for r in 0..rows {
            let sub = if r == 0 {
                0.0
            } else if r == rows - 1 {
                2.0
            } else {
                1.0
            };
            let sup = if r + 1 < rows { 1.0 } else { 0.0 };
            let denom = diag - sub * if r > 0 { c_prime[r - 1] } else { 0.0 };
            c_prime[r] = sup / denom;
            d_prime[r] = (col[r] - sub * if r > 0 { d_prime[r - 1] } else { 0.0 }) / denom;
        }
        for r in (0..rows).rev() {
            col[r] = d_prime[r] - if r + 1 < rows { c_prime[r] * col[r + 1] } else { 0.0 };
        }
        for (r, c) in col.iter().enumerate() {
            f[r * m + k] = *c;
        }
    }

    let scale = 2.0 / (m + 1) as f64;
    for (r, row) in f.chunks_mut(m).enumerate() {
        dst.process_dst1(row);
        for (k, v) in row.iter().enumerate() {
            u[id(k + 1, r + 1)] = v * scale;
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iteration: 0 });
    }
    Ok(())
}
