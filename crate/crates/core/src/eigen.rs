//! Dominant eigenpair of the pencil `B Φ = λ M Φ`.
//!
//! `M` is factorized once with partial pivoting and the map `Φ -> M⁻¹ B Φ` is
//! iterated. Rows of `B` carrying boundary conditions are zero, so `M⁻¹ B` has
//! a large null space; the iteration never sees it. If the iteration stalls
//! away from the roundoff floor (typically a complex or sign-alternating
//! dominant pair) the full spectrum of `M⁻¹ B` is computed instead.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Col, Mat};
use serde::Serialize;

use crate::assembly::DiscretePencil;
use crate::error::{Error, Result};
use crate::grid2d::GridFunction;

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Size of the uniform evaluation grid (per axis) used by [`match_exact`].
pub const EVAL_POINTS: usize = 101;

/// Largest pencil for which the dense fallback is attempted.
const DENSE_FALLBACK_MAX_DIM: usize = 2500;

/// Iterations without improvement before the power iteration is declared stalled.
const STALL_WINDOW: usize = 25;

/// Changes below this are treated as the roundoff floor of the iteration.
const ROUNDOFF_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    PowerIteration,
    DenseFallback,
}

#[derive(Debug, Clone)]
pub struct R0Result {
    /// Modulus of the dominant eigenvalue.
    pub r0: f64,
    /// The dominant eigenvalue itself (real).
    pub eigenvalue: f64,
    /// Eigenvector, scaled so its entry of largest magnitude is +1.
    pub eigvec: GridFunction,
    /// `‖B Φ - λ M Φ‖∞ / ‖Φ‖∞` on the original pencil.
    pub residual: f64,
    pub iterations: usize,
    /// Iteration settled and `residual <= tol`.
    pub converged: bool,
    pub method: EigenMethod,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

fn matvec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let xc = Col::<f64>::from_fn(x.len(), |i| x[i]);
    let y = a * &xc;
    (0..y.nrows()).map(|i| y[i]).collect()
}

/// `‖B Φ - λ M Φ‖∞ / ‖Φ‖∞`.
pub fn residual(pencil: &DiscretePencil, lambda: f64, phi: &GridFunction) -> Result<f64> {
    residual_raw(pencil, lambda, &phi.values)
}

fn residual_raw(pencil: &DiscretePencil, lambda: f64, phi: &[f64]) -> Result<f64> {
    if phi.len() != pencil.dim() {
        return Err(Error::invalid("eigenvector length does not match the pencil"));
    }
    let norm = inf_norm(phi);
    if norm == 0.0 {
        return Err(Error::invalid("residual of the zero vector is undefined"));
    }
    let bphi = matvec(&pencil.b, phi);
    let mphi = matvec(&pencil.m, phi);
    let r = bphi.iter().zip(&mphi).fold(0.0_f64, |acc, (b, m)| acc.max((b - lambda * m).abs()));
    Ok(r / norm)
}

fn factorize(m: &Mat<f64>) -> Result<PartialPivLu<f64>> {
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..u.nrows() {
        let p = u[(i, i)].abs();
        if !p.is_finite() {
            lo = 0.0;
        }
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(hi > 0.0) || !(lo > hi * f64::EPSILON * u.nrows() as f64) {
        return Err(Error::SingularTransition { min_pivot: lo, max_pivot: hi });
    }
    Ok(lu)
}

fn apply(lu: &PartialPivLu<f64>, b: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    let bv = Col::<f64>::from_fn(v.len(), |i| v[i]);
    let bv = b * &bv;
    let x = lu.solve(&bv);
    (0..x.nrows()).map(|i| x[i]).collect()
}

/// Dominant eigenvalue and eigenvector of `M⁻¹ B` for the given pencil.
///
/// Iterates until the relative eigenvalue change and the max-norm change of the
/// normalized eigenvector both fall below `tol`, or until progress stalls below
/// the roundoff floor. The result is flagged `converged` only if, in addition,
/// its pencil residual is at most `tol`; otherwise it is still returned.
pub fn dominant_pair(pencil: &DiscretePencil, tol: f64, max_iter: usize) -> Result<R0Result> {
    if !(tol > 0.0) {
        return Err(Error::invalid("eigen tolerance must be positive"));
    }
    let dim = pencil.dim();
    let lu = factorize(&pencil.m)?;

    let mut v: Vec<f64> = (0..dim)
        .map(|k| if pencil.boundary_index_set.contains(&k) { 0.0 } else { 1.0 })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v.iter_mut().for_each(|x| *x = 1.0);
    }
    v = apply(&lu, &pencil.b, &v);
    let mut p = argmax_abs(&v);
    if v[p] == 0.0 || !v[p].is_finite() {
        if v.iter().all(|&x| x == 0.0) && (0..dim).all(|r| (0..dim).all(|c| pencil.b[(r, c)] == 0.0)) {
            // B = 0: every eigenvalue vanishes.
            let mut e = vec![0.0; dim];
            e[0] = 1.0;
            return finish(pencil, 0.0, e, 0, true, tol, EigenMethod::PowerIteration);
        }
        return dense_fallback(pencil, &lu, tol, 0);
    }
    let scale = v[p];
    v.iter_mut().for_each(|x| *x /= scale);

    let mut lambda = f64::NAN;
    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut last_residual = f64::INFINITY;
    for iter in 1..=max_iter {
        let w = apply(&lu, &pencil.b, &v);
        let new_lambda = w[p];
        let q = argmax_abs(&w);
        if w[q] == 0.0 || !w[q].is_finite() {
            return dense_fallback(pencil, &lu, tol, iter);
        }
        let s = w[q];
        let w: Vec<f64> = w.iter().map(|x| x / s).collect();
        let dv = w.iter().zip(&v).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let dl = ((new_lambda - lambda) / new_lambda).abs();
        let change = if dl.is_nan() { f64::INFINITY } else { dl.max(dv) };
        v = w;
        p = q;
        lambda = new_lambda;

        if change <= tol {
            // Keep refining while the residual still drops.
            let r = residual_raw(pencil, lambda, &v)?;
            if r <= tol || r >= 0.9 * last_residual {
                return finish(pencil, lambda, v, iter, true, tol, EigenMethod::PowerIteration);
            }
            last_residual = r;
        }
        if change < best * 0.999 {
            best = change;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= STALL_WINDOW {
            if best <= ROUNDOFF_FLOOR {
                // The map is applied exactly up to rounding; no further progress is possible.
                return finish(pencil, lambda, v, iter, true, tol, EigenMethod::PowerIteration);
            }
            return dense_fallback(pencil, &lu, tol, iter);
        }
    }
    if best <= ROUNDOFF_FLOOR {
        return finish(pencil, lambda, v, max_iter, true, tol, EigenMethod::PowerIteration);
    }
    if dim <= DENSE_FALLBACK_MAX_DIM {
        return dense_fallback(pencil, &lu, tol, max_iter);
    }
    Err(Error::NoConvergence { iterations: max_iter, last_change: best })
}

fn finish(
    pencil: &DiscretePencil,
    lambda: f64,
    mut v: Vec<f64>,
    iterations: usize,
    converged: bool,
    tol: f64,
    method: EigenMethod,
) -> Result<R0Result> {
    let q = argmax_abs(&v);
    let s = v[q];
    v.iter_mut().for_each(|x| *x /= s);
    let residual = residual_raw(pencil, lambda, &v)?;
    let converged = converged && residual <= tol;
    Ok(R0Result {
        r0: lambda.abs(),
        eigenvalue: lambda,
        eigvec: GridFunction::new(pencil.grid.clone(), v)?,
        residual,
        iterations,
        converged,
        method,
    })
}

fn dense_fallback(pencil: &DiscretePencil, lu: &PartialPivLu<f64>, tol: f64, iterations: usize) -> Result<R0Result> {
    let dim = pencil.dim();
    if dim > DENSE_FALLBACK_MAX_DIM {
        return Err(Error::NoConvergence { iterations, last_change: f64::NAN });
    }
    let a = lu.solve(&pencil.b);
    let evd = a.eigen().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut best = 0;
    for k in 0..dim {
        if s[k].norm() > s[best].norm() {
            best = k;
        }
    }
    let lam = s[best];
    if lam.im.abs() > tol.max(1e-10) * lam.norm() {
        return Err(Error::ComplexDominant { re: lam.re, im: lam.im });
    }
    // Rotate the eigenvector so its largest entry is real, then drop the imaginary part.
    let mut k_max = 0;
    for k in 0..dim {
        if u[(k, best)].norm() > u[(k_max, best)].norm() {
            k_max = k;
        }
    }
    let pivot = u[(k_max, best)];
    let v: Vec<f64> = (0..dim).map(|k| (u[(k, best)] / pivot).re).collect();
    finish(pencil, lam.re, v, iterations, true, tol, EigenMethod::DenseFallback)
}

fn uniform(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..count)
        .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
        .collect();
    v[count - 1] = hi;
    v
}

/// Rescales `phi_num` to best line up with `phi_exact` and returns the sup error.
///
/// The scale makes the interpolant agree with `phi_exact` at the point of a
/// uniform `101 x 101` evaluation grid where `|phi_exact|` is largest; the error
/// is the maximum absolute difference over the same grid.
pub fn match_exact(
    phi_num: &GridFunction,
    phi_exact: impl Fn(f64, f64) -> f64,
) -> Result<(GridFunction, f64)> {
    let g = &phi_num.grid;
    let xs = uniform(g.gx.lo(), g.gx.hi(), EVAL_POINTS);
    let ys = uniform(g.gy.lo(), g.gy.hi(), EVAL_POINTS);
    let exact: Vec<Vec<f64>> = xs.iter().map(|&x| ys.iter().map(|&y| phi_exact(x, y)).collect()).collect();
    let (mut bi, mut bj, mut bv) = (0, 0, 0.0_f64);
    for (i, row) in exact.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "exact eigenfunction", location: format!("({}, {})", xs[i], ys[j]) });
            }
            if v.abs() > bv.abs() {
                (bi, bj, bv) = (i, j, v);
            }
        }
    }
    if bv == 0.0 {
        return Err(Error::invalid("exact eigenfunction vanishes on the evaluation grid"));
    }
    let approx = phi_num.eval_grid(&xs, &ys)?;
    let at_peak = approx[bi][bj];
    if at_peak == 0.0 {
        return Err(Error::invalid("numerical eigenfunction vanishes where the exact one peaks"));
    }
    let scale = bv / at_peak;
    let err = approx
        .iter()
        .zip(&exact)
        .flat_map(|(a, e)| a.iter().zip(e).map(|(a, e)| (scale * a - e).abs()))
        .fold(0.0_f64, f64::max);
    let scaled = GridFunction::new(g.clone(), phi_num.values.iter().map(|v| v * scale).collect())?;
    Ok((scaled, err))
}
