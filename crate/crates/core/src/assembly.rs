//! Collocation matrices `B` (birth) and `M` (transition) on a tensor grid.
//!
//! Integrals are replaced by the tensor Clenshaw–Curtis rule on the collocation
//! nodes themselves and derivatives by the spectral differentiation matrices.
//! Rows at boundary nodes carry the boundary conditions in `M` and are zero in
//! `B`.

use std::collections::BTreeSet;

use faer::Mat;

use crate::error::{Error, Result};
use crate::grid2d::TensorGrid;
use crate::model::{BcSide, ModelSpec};

/// Role of a collocation row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// PDE collocated at the node.
    Interior,
    /// Condition on the x-boundary (`beta` kernel); includes the corner node.
    XBoundary,
    /// Condition on the y-boundary (`alpha` kernel).
    YBoundary,
    /// `u = 0` at a node where `mu` is singular.
    Dirichlet,
}

/// Index of the boundary node along an axis of degree `n`.
pub fn boundary_index(side: BcSide, n: usize) -> usize {
    match side {
        BcSide::Low => 0,
        BcSide::High => n,
    }
}

/// Classifies every row of the pencil, in flat order.
pub fn row_kinds(spec: &ModelSpec, grid: &TensorGrid) -> Vec<RowKind> {
    let ib = boundary_index(spec.x_bc_side, grid.n());
    let jb = boundary_index(spec.y_bc_side, grid.m());
    let mut kinds = Vec::with_capacity(grid.dim());
    for i in 0..=grid.n() {
        for j in 0..=grid.m() {
            let (x, y) = grid.point(i, j);
            kinds.push(if i == ib {
                RowKind::XBoundary
            } else if j == jb {
                RowKind::YBoundary
            } else if spec.is_singular_node(x, y) {
                RowKind::Dirichlet
            } else {
                RowKind::Interior
            });
        }
    }
    kinds
}

/// The discrete eigenproblem `B Φ = λ M Φ`.
#[derive(Debug, Clone)]
pub struct DiscretePencil {
    pub b: Mat<f64>,
    pub m: Mat<f64>,
    pub grid: TensorGrid,
    /// Flat indices of rows carrying boundary conditions or Dirichlet replacements.
    pub boundary_index_set: BTreeSet<usize>,
}

impl DiscretePencil {
    /// Builds a pencil from raw matrices. The boundary set is inferred as the
    /// rows of `b` that are identically zero.
    pub fn from_matrices(b: Mat<f64>, m: Mat<f64>, grid: TensorGrid) -> Result<Self> {
        let n = grid.dim();
        if b.nrows() != n || b.ncols() != n || m.nrows() != n || m.ncols() != n {
            return Err(Error::invalid(format!(
                "pencil matrices must be {n}x{n} for this grid"
            )));
        }
        let boundary_index_set = (0..n).filter(|&r| (0..n).all(|c| b[(r, c)] == 0.0)).collect();
        Ok(Self { b, m, grid, boundary_index_set })
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
}

fn non_finite(what: &'static str, location: String) -> Error {
    Error::NonFinite { what, location }
}

/// Cubature-discretized birth matrix. Only interior rows are nonzero.
pub fn assemble_b(spec: &ModelSpec, grid: &TensorGrid) -> Result<Mat<f64>> {
    let dim = grid.dim();
    let mut b = Mat::<f64>::zeros(dim, dim);
    let Some(kernel) = spec.kernel_k.as_ref() else {
        return Ok(b);
    };
    let kinds = row_kinds(spec, grid);
    let ny = grid.gy.len();
    let rows: Vec<(usize, f64, f64)> = kinds
        .iter()
        .enumerate()
        .filter(|(_, k)| **k == RowKind::Interior)
        .map(|(r, _)| {
            let (x, y) = grid.point(r / ny, r % ny);
            (r, x, y)
        })
        .collect();
    let (wx, wy) = (grid.gx.quad_weights(), grid.gy.quad_weights());
    let (xs, ys) = (grid.gx.nodes(), grid.gy.nodes());
    // Column-major storage: fill one column at a time.
    for (k, &xk) in xs.iter().enumerate() {
        for (h, &yh) in ys.iter().enumerate() {
            let col = grid.index(k, h);
            let w = wx[k] * wy[h];
            let mut column = b.col_mut(col);
            for &(r, x, y) in &rows {
                let v = kernel(x, y, xk, yh);
                if !v.is_finite() {
                    return Err(non_finite("K", format!("({x}, {y}, {xk}, {yh})")));
                }
                column[r] = w * v;
            }
        }
    }
    Ok(b)
}

/// Transition matrix: differentiation-matrix rows for the PDE, identity minus
/// cubature rows for the nonlocal boundary conditions.
pub fn assemble_m(spec: &ModelSpec, grid: &TensorGrid) -> Result<Mat<f64>> {
    let dim = grid.dim();
    let mut mat = Mat::<f64>::zeros(dim, dim);
    let kinds = row_kinds(spec, grid);
    let (xs, ys) = (grid.gx.nodes(), grid.gy.nodes());
    let (wx, wy) = (grid.gx.quad_weights(), grid.gy.quad_weights());
    let (dx, dy) = (grid.gx.diff(), grid.gy.diff());

    let finite = |what: &'static str, v: f64, x: f64, y: f64| -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(non_finite(what, format!("({x}, {y})")))
        }
    };

    // b and d sampled once on the whole grid.
    let mut bvals = vec![0.0; dim];
    let mut dvals = vec![0.0; dim];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let r = grid.index(i, j);
            bvals[r] = finite("b", spec.b(x, y), x, y)?;
            dvals[r] = finite("d", spec.d(x, y), x, y)?;
        }
    }

    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let row = grid.index(i, j);
            match kinds[row] {
                RowKind::Interior => {
                    let a = finite("a", spec.a(x, y), x, y)?;
                    let c = finite("c", spec.c(x, y), x, y)?;
                    let mu = finite("mu", spec.mu(x, y), x, y)?;
                    if a != 0.0 {
                        for k in 0..xs.len() {
                            let col = grid.index(k, j);
                            mat[(row, col)] += a * dx[(i, k)] * bvals[col];
                        }
                    }
                    if c != 0.0 {
                        for h in 0..ys.len() {
                            let col = grid.index(i, h);
                            mat[(row, col)] += c * dy[(j, h)] * dvals[col];
                        }
                    }
                    mat[(row, row)] += mu;
                }
                RowKind::XBoundary => {
                    if spec.kernel_beta.is_some() {
                        for (k, &xk) in xs.iter().enumerate() {
                            for (h, &yh) in ys.iter().enumerate() {
                                let v = spec.beta(y, xk, yh);
                                if !v.is_finite() {
                                    return Err(non_finite("beta", format!("({y}, {xk}, {yh})")));
                                }
                                mat[(row, grid.index(k, h))] -= wx[k] * wy[h] * v;
                            }
                        }
                    }
                    mat[(row, row)] += 1.0;
                }
                RowKind::YBoundary => {
                    if spec.kernel_alpha.is_some() {
                        for (k, &xk) in xs.iter().enumerate() {
                            for (h, &yh) in ys.iter().enumerate() {
                                let v = spec.alpha(x, xk, yh);
                                if !v.is_finite() {
                                    return Err(non_finite("alpha", format!("({x}, {xk}, {yh})")));
                                }
                                mat[(row, grid.index(k, h))] -= wx[k] * wy[h] * v;
                            }
                        }
                    }
                    mat[(row, row)] += 1.0;
                }
                RowKind::Dirichlet => {
                    mat[(row, row)] = 1.0;
                }
            }
        }
    }
    Ok(mat)
}

/// Assembles both matrices on the Chebyshev grid of degrees `(n, m)`.
pub fn assemble(spec: &ModelSpec, n: usize, m: usize) -> Result<DiscretePencil> {
    let grid = spec.grid(n, m)?;
    assemble_on(spec, grid)
}

/// Assembles both matrices on a given grid after validating the model there.
pub fn assemble_on(spec: &ModelSpec, grid: TensorGrid) -> Result<DiscretePencil> {
    crate::model::validate(spec, &grid).into_result()?;
    let b = assemble_b(spec, &grid)?;
    let m = assemble_m(spec, &grid)?;
    let boundary_index_set = row_kinds(spec, &grid)
        .iter()
        .enumerate()
        .filter(|(_, k)| **k != RowKind::Interior)
        .map(|(r, _)| r)
        .collect();
    Ok(DiscretePencil { b, m, grid, boundary_index_set })
}
