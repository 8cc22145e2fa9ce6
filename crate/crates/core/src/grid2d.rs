//! Tensor-product grids and bivariate interpolation of nodal samples.

use crate::error::{Error, Result};
use crate::spectral1d::Grid1D;

/// Flat index of node `(i, j)` for a grid with `m + 1` nodes along y.
pub fn vec_index(i: usize, j: usize, n: usize, m: usize) -> Result<usize> {
    if i > n || j > m {
        return Err(Error::invalid(format!(
            "node ({i}, {j}) outside the {n}x{m} index range"
        )));
    }
    Ok(i * (m + 1) + j)
}

/// Inverse of [`vec_index`].
pub fn unvec_index(k: usize, n: usize, m: usize) -> Result<(usize, usize)> {
    if k >= (n + 1) * (m + 1) {
        return Err(Error::invalid(format!("flat index {k} out of range")));
    }
    Ok((k / (m + 1), k % (m + 1)))
}

/// Cartesian product of an x-grid of degree `n` and a y-grid of degree `m`.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub gx: Grid1D,
    pub gy: Grid1D,
}

impl TensorGrid {
    pub fn new(gx: Grid1D, gy: Grid1D) -> Self {
        Self { gx, gy }
    }

    pub fn chebyshev(n: usize, m: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        Ok(Self::new(Grid1D::chebyshev(n, x.0, x.1)?, Grid1D::chebyshev(m, y.0, y.1)?))
    }

    pub fn n(&self) -> usize {
        self.gx.degree()
    }

    pub fn m(&self) -> usize {
        self.gy.degree()
    }

    /// Total number of nodes, `(n + 1)(m + 1)`.
    pub fn dim(&self) -> usize {
        self.gx.len() * self.gy.len()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.gy.len() + j
    }

    /// Node coordinates `(x_i, y_j)`.
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.gx.nodes()[i], self.gy.nodes()[j])
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (sx, sy) = (self.gx.snap_tol(), self.gy.snap_tol());
        x >= self.gx.lo() - sx && x <= self.gx.hi() + sx && y >= self.gy.lo() - sy && y <= self.gy.hi() + sy
    }

    /// Samples `f` at every node in flat order.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        let mut values = Vec::with_capacity(self.dim());
        for &x in self.gx.nodes() {
            for &y in self.gy.nodes() {
                values.push(f(x, y));
            }
        }
        GridFunction { grid: self.clone(), values }
    }
}

/// Nodal values of a bivariate polynomial; `values[i * (m + 1) + j]` is the sample at `(x_i, y_j)`.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: TensorGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TensorGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.dim() {
            return Err(Error::invalid(format!(
                "expected {} samples, got {}",
                grid.dim(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Builds from a row-per-x-node array of shape `(n + 1) x (m + 1)`.
    pub fn from_rows(grid: TensorGrid, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != grid.gx.len() || rows.iter().any(|r| r.len() != grid.gy.len()) {
            return Err(Error::invalid("sample array shape does not match the grid"));
        }
        let values = rows.iter().flatten().copied().collect();
        Ok(Self { grid, values })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.grid.gy.len()).map(|c| c.to_vec()).collect()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Evaluates the interpolating polynomial at `(x, y)`; see [`interp2`].
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        interp2(self, x, y)
    }

    /// Evaluates the interpolant on the Cartesian product `xs x ys`.
    /// Result is indexed `[ix][iy]`.
    pub fn eval_grid(&self, xs: &[f64], ys: &[f64]) -> Result<Vec<Vec<f64>>> {
        let g = &self.grid;
        if let Some(&x) = xs.iter().find(|&&x| !g.contains(x, g.gy.lo())) {
            return Err(outside(x, g.gy.lo(), g));
        }
        if let Some(&y) = ys.iter().find(|&&y| !g.contains(g.gx.lo(), y)) {
            return Err(outside(g.gx.lo(), y, g));
        }
        let ly: Vec<Vec<f64>> = ys.iter().map(|&y| g.gy.lagrange_at(y)).collect();
        let ny = g.gy.len();
        let mut out = Vec::with_capacity(xs.len());
        let mut col = vec![0.0; ny];
        for &x in xs {
            let lx = g.gx.lagrange_at(x);
            col.iter_mut().for_each(|c| *c = 0.0);
            for (i, &l) in lx.iter().enumerate() {
                if l != 0.0 {
                    let row = &self.values[i * ny..(i + 1) * ny];
                    col.iter_mut().zip(row).for_each(|(c, v)| *c += l * v);
                }
            }
            out.push(ly.iter().map(|l| l.iter().zip(&col).map(|(a, b)| a * b).sum()).collect());
        }
        Ok(out)
    }
}

fn outside(x: f64, y: f64, g: &TensorGrid) -> Error {
    Error::invalid(format!(
        "point ({x}, {y}) outside [{}, {}] x [{}, {}]",
        g.gx.lo(),
        g.gx.hi(),
        g.gy.lo(),
        g.gy.hi()
    ))
}

/// Evaluates the tensor Lagrange interpolant of `f` at `(x, y)`.
///
/// The x-direction is collapsed first (one barycentric sum per y-node), then the
/// resulting univariate samples are interpolated in y. Points outside the
/// rectangle are refused.
pub fn interp2(f: &GridFunction, x: f64, y: f64) -> Result<f64> {
    let g = &f.grid;
    if !g.contains(x, y) {
        return Err(outside(x, y, g));
    }
    let ny = g.gy.len();
    let lx = g.gx.lagrange_at(x);
    let mut col = vec![0.0; ny];
    for (i, &l) in lx.iter().enumerate() {
        if l != 0.0 {
            let row = &f.values[i * ny..(i + 1) * ny];
            col.iter_mut().zip(row).for_each(|(c, v)| *c += l * v);
        }
    }
    Ok(g.gy.interp(&col, y))
}
