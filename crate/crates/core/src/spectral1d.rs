//! Univariate Chebyshev machinery on an interval `[lo, hi]`.
//!
//! Nodes are the Chebyshev extremal points mapped affinely onto the interval and
//! stored in ascending order, so index 0 is the left endpoint. Alongside the
//! nodes a [`Grid1D`] carries the Clenshaw–Curtis weights, the spectral
//! differentiation matrix and the barycentric weights of the Lagrange basis.

use std::f64::consts::PI;

use faer::Mat;

use crate::error::{Error, Result};

fn check_interval(n: usize, lo: f64, hi: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("polynomial degree must be at least 1"));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("interval bounds must be finite, got [{lo}, {hi}]")));
    }
    if lo >= hi {
        return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
    }
    Ok(())
}

fn check_nodes(nodes: &[f64]) -> Result<()> {
    if nodes.len() < 2 {
        return Err(Error::invalid("at least two nodes are required"));
    }
    if let Some(w) = nodes.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(format!(
            "nodes must be strictly increasing (found {} followed by {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Chebyshev extremal points of degree `n` on `[lo, hi]`, ascending.
///
/// The reference points `-cos(k pi / n)` are evaluated as `sin(pi (2k - n) / 2n)`,
/// which keeps them exactly antisymmetric, and the endpoints are snapped to
/// `lo` and `hi`.
pub fn cheb_nodes(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    check_interval(n, lo, hi)?;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let nf = n as f64;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|k| {
            let t = (PI * (2.0 * k as f64 - nf) / (2.0 * nf)).sin();
            mid + half * t
        })
        .collect();
    nodes[0] = lo;
    nodes[n] = hi;
    Ok(nodes)
}

/// Clenshaw–Curtis weights for the nodes of [`cheb_nodes`] with the same arguments.
pub fn cc_weights(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    check_interval(n, lo, hi)?;
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    let (end, half_terms) = if n % 2 == 0 {
        (1.0 / (nf * nf - 1.0), n / 2 - 1)
    } else {
        (1.0 / (nf * nf), (n - 1) / 2)
    };
    w[0] = end;
    w[n] = end;
    for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
        let theta = PI * i as f64 / nf;
        let mut v = 1.0;
        for k in 1..=half_terms {
            let kf = k as f64;
            v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
        }
        if n % 2 == 0 {
            v -= (nf * theta).cos() / (nf * nf - 1.0);
        }
        *wi = 2.0 * v / nf;
    }
    // The reference rule is symmetric, so the descending-to-ascending reversal
    // is a no-op; only the affine scaling remains.
    let scale = 0.5 * (hi - lo);
    w.iter_mut().for_each(|x| *x *= scale);
    Ok(w)
}

/// Barycentric weights `1 / prod_{k != j} (x_j - x_k)` for arbitrary distinct nodes,
/// normalized so the largest magnitude is 1.
///
/// Differences are measured in units of a quarter of the interval length (the
/// logarithmic capacity of the interval), which keeps the products in range for
/// large node counts.
pub fn bary_weights(nodes: &[f64]) -> Result<Vec<f64>> {
    check_nodes(nodes)?;
    let len = nodes[nodes.len() - 1] - nodes[0];
    let cap = 0.25 * len;
    let mut w: Vec<f64> = nodes
        .iter()
        .enumerate()
        .map(|(j, &xj)| {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != j)
                .map(|(_, &xk)| (xj - xk) / cap)
                .product();
            1.0 / prod
        })
        .collect();
    let max = w.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    w.iter_mut().for_each(|x| *x /= max);
    Ok(w)
}

/// Closed-form barycentric weights of the ascending extremal points:
/// `(-1)^(n-k)` with the two end weights halved.
pub fn cheb_bary_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let sign = if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n {
                0.5 * sign
            } else {
                sign
            }
        })
        .collect()
}

/// Spectral differentiation matrix for arbitrary distinct ascending nodes.
pub fn diff_matrix(nodes: &[f64]) -> Result<Mat<f64>> {
    let w = bary_weights(nodes)?;
    Ok(diff_matrix_with_weights(nodes, &w))
}

/// Differentiation matrix from nodes and matching barycentric weights.
///
/// Off-diagonal entries are `(w_j / w_i) / (x_i - x_j)`; each diagonal entry is
/// the negated sum of the rest of its row so that constants differentiate to
/// exactly zero.
pub fn diff_matrix_with_weights(nodes: &[f64], w: &[f64]) -> Mat<f64> {
    let n = nodes.len();
    let mut d = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                row_sum += v;
            }
        }
        d[(i, i)] = -row_sum;
    }
    d
}

/// Evaluates the Lagrange basis `l_0(x), ..., l_n(x)` at `x` using the second
/// barycentric form. Exact Kronecker delta when `x` is within `snap` of a node.
pub(crate) fn lagrange_basis_at(nodes: &[f64], bary: &[f64], x: f64, snap: f64) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    if let Some(k) = nodes.iter().position(|&xk| (x - xk).abs() <= snap) {
        out[k] = 1.0;
        return out;
    }
    let mut denom = 0.0;
    for ((o, &xk), &wk) in out.iter_mut().zip(nodes).zip(bary) {
        let t = wk / (x - xk);
        *o = t;
        denom += t;
    }
    out.iter_mut().for_each(|o| *o /= denom);
    out
}

/// Chebyshev grid on one axis.
#[derive(Debug, Clone)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
    nodes: Vec<f64>,
    quad_weights: Vec<f64>,
    diff: Mat<f64>,
    bary: Vec<f64>,
}

impl Grid1D {
    pub fn chebyshev(n: usize, lo: f64, hi: f64) -> Result<Self> {
        let nodes = cheb_nodes(n, lo, hi)?;
        let quad_weights = cc_weights(n, lo, hi)?;
        let bary = cheb_bary_weights(n);
        let diff = diff_matrix_with_weights(&nodes, &bary);
        Ok(Self { lo, hi, n, nodes, quad_weights, diff, bary })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Polynomial degree; there are `n + 1` nodes.
    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn diff(&self) -> &Mat<f64> {
        &self.diff
    }

    pub fn bary(&self) -> &[f64] {
        &self.bary
    }

    /// Absolute tolerance under which a point counts as sitting on a node.
    pub fn snap_tol(&self) -> f64 {
        1e-14 * (self.hi - self.lo)
    }

    /// Values of the Lagrange basis polynomials at `x`.
    pub fn lagrange_at(&self, x: f64) -> Vec<f64> {
        lagrange_basis_at(&self.nodes, &self.bary, x, self.snap_tol())
    }

    /// Evaluates the interpolant of `samples` at `x`.
    pub fn interp(&self, samples: &[f64], x: f64) -> f64 {
        self.lagrange_at(x).iter().zip(samples).map(|(l, f)| l * f).sum()
    }
}
