//! Property checks shared by the `properties` and `acceptance` targets.
//!
//! Each `run_*` function drives one property through a deterministic proptest
//! runner and returns the first counterexample as text.

#![allow(dead_code)]

use bicolloc_core::age_immunity::{self, AgeImmunitySpec, Mortality, Waning};
use bicolloc_core::assembly::{self, RowKind};
use bicolloc_core::eigen::{dominant_pair, DEFAULT_MAX_ITER};
use bicolloc_core::grid2d::{interp2, unvec_index, vec_index, GridFunction, TensorGrid};
use bicolloc_core::model::{BcSide, ModelSpec};
use bicolloc_core::spectral1d::{cc_weights, cheb_nodes, Grid1D};
use bicolloc_core::{builtin, DiscretePencil, Error};
use faer::Mat;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const DEFAULT_CASES: u32 = 64;

pub fn runner(cases: u32) -> TestRunner {
    let config = Config { cases, failure_persistence: None, ..Config::default() };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn drive<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

fn interval() -> impl Strategy<Value = (f64, f64)> {
    (-3.0..3.0f64, 0.1..4.0f64).prop_map(|(lo, len)| (lo, lo + len))
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn horner_deriv(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
}

// ---- spectral1d ----

/// Monomials on intervals straddling zero, and shifted monomials `(x - lo)^p`
/// on arbitrary intervals, are integrated exactly up to degree n.
pub fn run_quadrature_exactness(cases: u32) -> Result<(), String> {
    let strat = (1usize..=40, -2.0..0.0f64, 0.1..2.0f64, interval());
    drive(cases, strat, |(n, lo0, hi0, (lo, hi))| {
        let x = cheb_nodes(n, lo0, hi0).unwrap();
        let w = cc_weights(n, lo0, hi0).unwrap();
        let len0 = hi0 - lo0;
        for p in 0..=n {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
            let exact = (hi0.powi(p as i32 + 1) - lo0.powi(p as i32 + 1)) / (p + 1) as f64;
            let tol = 1e-12 * len0.powi(p as i32 + 1);
            prop_assert!((q - exact).abs() <= tol, "n={n} p={p} [{lo0},{hi0}] err={}", (q - exact).abs());
        }
        let x = cheb_nodes(n, lo, hi).unwrap();
        let w = cc_weights(n, lo, hi).unwrap();
        let len = hi - lo;
        for p in 0..=n {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (x - lo).powi(p as i32)).sum();
            let exact = len.powi(p as i32 + 1) / (p + 1) as f64;
            let tol = 1e-12 * len.powi(p as i32 + 1);
            prop_assert!((q - exact).abs() <= tol, "shifted n={n} p={p} err={}", (q - exact).abs());
        }
        Ok(())
    })
}

/// `D F = F'` for random polynomials of degree at most n, n ≤ 40. The bound is
/// scaled by `‖D‖∞ ‖F‖∞`.
pub fn run_differentiation_exactness(cases: u32) -> Result<(), String> {
    let strat = (1usize..=40, interval()).prop_flat_map(|(n, iv)| {
        (Just(n), Just(iv), prop::collection::vec(-1.0..1.0f64, 1..=n + 1))
    });
    drive(cases, strat, |(n, (lo, hi), coeffs)| {
        let g = Grid1D::chebyshev(n, lo, hi).unwrap();
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        // polynomial in t = (x - c)/r keeps coefficients O(1) on the interval
        let f: Vec<f64> = g.nodes().iter().map(|&x| horner(&coeffs, (x - c) / r)).collect();
        let fp: Vec<f64> = g.nodes().iter().map(|&x| horner_deriv(&coeffs, (x - c) / r) / r).collect();
        let d = g.diff();
        let fnorm = f.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let dnorm = (0..=n).map(|i| (0..=n).map(|k| d[(i, k)].abs()).sum::<f64>()).fold(0.0, f64::max);
        for i in 0..=n {
            let df: f64 = (0..=n).map(|k| d[(i, k)] * f[k]).sum();
            let err = (df - fp[i]).abs();
            prop_assert!(err <= 1e-10 * dnorm * fnorm, "n={n} i={i} err={err} bound={}", 1e-10 * dnorm * fnorm);
        }
        Ok(())
    })
}

/// Nodes, weights and differentiation matrix transform affinely from [-1, 1].
pub fn run_affine_covariance(cases: u32) -> Result<(), String> {
    drive(cases, (1usize..=40, interval()), |(n, (lo, hi))| {
        let r = Grid1D::chebyshev(n, -1.0, 1.0).unwrap();
        let g = Grid1D::chebyshev(n, lo, hi).unwrap();
        let half = 0.5 * (hi - lo);
        let scale = lo.abs().max(hi.abs());
        for k in 0..=n {
            let mapped = lo + half * (r.nodes()[k] + 1.0);
            prop_assert!((g.nodes()[k] - mapped).abs() <= 4.0 * f64::EPSILON * scale.max(1.0));
            let w = half * r.quad_weights()[k];
            prop_assert!((g.quad_weights()[k] - w).abs() <= 1e-14 * w.abs().max(half));
        }
        let dmax = (0..=n)
            .flat_map(|i| (0..=n).map(move |k| (i, k)))
            .fold(0.0_f64, |m, (i, k)| m.max(r.diff()[(i, k)].abs()));
        for i in 0..=n {
            for k in 0..=n {
                let expect = r.diff()[(i, k)] / half;
                prop_assert!(
                    (g.diff()[(i, k)] - expect).abs() <= 1e-11 * dmax / half,
                    "n={n} ({i},{k}) {} vs {expect}",
                    g.diff()[(i, k)]
                );
            }
        }
        Ok(())
    })
}

// ---- grid2d ----

/// The tensor interpolant reproduces every monomial `x^p y^q`, p ≤ n, q ≤ m.
pub fn run_interpolation_reproduction(cases: u32) -> Result<(), String> {
    let strat = (1usize..=16, 1usize..=16, -2.0..0.0f64, 0.2..2.0f64, -1.5..0.0f64, 0.2..1.5f64)
        .prop_flat_map(|(n, m, xl, xh, yl, yh)| {
            (Just((n, m, xl, xh, yl, yh)), 0..=n, 0..=m, 0.0..1.0f64, 0.0..1.0f64)
        });
    drive(cases, strat, |((n, m, xl, xh, yl, yh), p, q, s, t)| {
        let grid = TensorGrid::chebyshev(n, m, (xl, xh), (yl, yh)).unwrap();
        let f = grid.sample(|x, y| x.powi(p as i32) * y.powi(q as i32));
        let (x, y) = (xl + s * (xh - xl), yl + t * (yh - yl));
        let exact = x.powi(p as i32) * y.powi(q as i32);
        let scale = xl.abs().max(xh).powi(p as i32) * yl.abs().max(yh).powi(q as i32);
        let v = interp2(&f, x, y).unwrap();
        prop_assert!((v - exact).abs() <= 1e-12 * scale.max(1.0), "p={p} q={q} err={}", (v - exact).abs());
        Ok(())
    })
}

/// For `f(x) g(y)` the bivariate error is `e_n g + f e_m + e_n e_m`, with
/// `e_n = I_n f - f` and `e_m = I_m g - g` the univariate errors.
pub fn run_separability(cases: u32) -> Result<(), String> {
    let strat = (1usize..=14, 1usize..=14, 0.2..3.0f64, 0.2..3.0f64, 0.0..1.0f64, 0.0..1.0f64);
    drive(cases, strat, |(n, m, sx, sy, s, t)| {
        let (xl, xh, yl, yh) = (-1.0, 2.0, 0.5, 1.5);
        let f = |x: f64| (sx * x).exp() / (1.0 + x * x);
        let g = |y: f64| (sy * y + 1.0).sin() + 2.0;
        let grid = TensorGrid::chebyshev(n, m, (xl, xh), (yl, yh)).unwrap();
        let fg = grid.sample(|x, y| f(x) * g(y));
        let (x, y) = (xl + s * (xh - xl), yl + t * (yh - yl));
        let fx: Vec<f64> = grid.gx.nodes().iter().map(|&v| f(v)).collect();
        let gy: Vec<f64> = grid.gy.nodes().iter().map(|&v| g(v)).collect();
        let en = grid.gx.interp(&fx, x) - f(x);
        let em = grid.gy.interp(&gy, y) - g(y);
        let lhs = interp2(&fg, x, y).unwrap() - f(x) * g(y);
        let rhs = en * g(y) + f(x) * em + en * em;
        let scale = (f(x) * g(y)).abs().max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "lhs={lhs} rhs={rhs}");
        Ok(())
    })
}

/// Flattening and unflattening are inverse bijections.
pub fn run_round_trip(cases: u32) -> Result<(), String> {
    drive(cases, (1usize..=12, 1usize..=12, any::<u64>()), |(n, m, seed)| {
        let grid = TensorGrid::chebyshev(n, m, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let rows: Vec<Vec<f64>> = (0..=n)
            .map(|i| (0..=m).map(|j| (seed % 97) as f64 + (i * 31 + j) as f64 * 0.5).collect())
            .collect();
        let f = GridFunction::from_rows(grid, &rows).unwrap();
        prop_assert_eq!(f.to_rows(), rows);
        for k in 0..(n + 1) * (m + 1) {
            let (i, j) = unvec_index(k, n, m).unwrap();
            prop_assert_eq!(vec_index(i, j, n, m).unwrap(), k);
        }
        Ok(())
    })
}

// ---- assembly ----

fn side(high: bool) -> BcSide {
    if high {
        BcSide::High
    } else {
        BcSide::Low
    }
}

#[derive(Debug, Clone)]
pub struct PolyModel {
    pub n: usize,
    pub m: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub high: (bool, bool),
    /// `b = b0 + b1 x`, `d = d0 + d1 y`, `a`, `c`, `mu` constant.
    pub b: (f64, f64),
    pub d: (f64, f64),
    pub acmu: (f64, f64, f64),
    /// `K = k0 + k1 x ξ + k2 y σ^2`.
    pub k: (f64, f64, f64),
}

impl PolyModel {
    pub fn spec(&self) -> ModelSpec {
        let (b0, b1) = self.b;
        let (d0, d1) = self.d;
        let (a, c, mu) = self.acmu;
        let (k0, k1, k2) = self.k;
        ModelSpec::new("poly", self.x, self.y)
            .with_a(move |_, _| a)
            .with_b(move |x, _| b0 + b1 * x)
            .with_c(move |_, _| c)
            .with_d(move |_, y| d0 + d1 * y)
            .with_mu(move |_, _| mu)
            .with_k(move |x, y, xi, s| k0 + k1 * x * xi + k2 * y * s * s)
            .with_alpha(move |x, xi, s| 0.3 + x * xi * s)
            .with_beta(move |y, xi, s| 0.2 * y + xi * s * s)
            .with_sides(side(self.high.0), side(self.high.1))
    }
}

pub fn poly_model() -> impl Strategy<Value = PolyModel> {
    (
        (2usize..=9, 2usize..=9),
        (interval(), interval()),
        (any::<bool>(), any::<bool>()),
        ((0.5..2.0f64, -0.2..0.2f64), (0.5..2.0f64, -0.2..0.2f64)),
        (0.0..2.0f64, 0.0..2.0f64, 0.0..3.0f64),
        (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64),
    )
        .prop_map(|((n, m), (x, y), high, (b, d), acmu, k)| PolyModel { n, m, x, y, high, b, d, acmu, k })
}

/// Boundary rows of B̃ vanish and the remaining rows are the cubature rows
/// `w_k w_h K`; boundary rows of M̃ are identity minus the cubature of α or β.
pub fn run_pencil_structure(cases: u32) -> Result<(), String> {
    drive(cases, poly_model(), |pm| {
        let spec = pm.spec();
        let p = assembly::assemble(&spec, pm.n, pm.m).unwrap();
        let grid = &p.grid;
        let kinds = assembly::row_kinds(&spec, grid);
        let dim = grid.dim();
        let xb = assembly::boundary_index(spec.x_bc_side, pm.n);
        let yb = assembly::boundary_index(spec.y_bc_side, pm.m);
        prop_assert_eq!(p.boundary_index_set.len(), pm.n + pm.m + 1);
        for r in 0..dim {
            let (i, j) = unvec_index(r, pm.n, pm.m).unwrap();
            let (x, y) = grid.point(i, j);
            let on_boundary = i == xb || j == yb;
            prop_assert_eq!(p.boundary_index_set.contains(&r), on_boundary);
            for col in 0..dim {
                let (k, h) = unvec_index(col, pm.n, pm.m).unwrap();
                let (xi, s) = grid.point(k, h);
                let wk = grid.gx.quad_weights()[k] * grid.gy.quad_weights()[h];
                let eye = if r == col { 1.0 } else { 0.0 };
                let (b_expect, m_expect) = match kinds[r] {
                    RowKind::Interior => (wk * spec.k(x, y, xi, s), f64::NAN),
                    RowKind::XBoundary => (0.0, eye - wk * spec.beta(y, xi, s)),
                    RowKind::YBoundary => (0.0, eye - wk * spec.alpha(x, xi, s)),
                    RowKind::Dirichlet => (0.0, eye),
                };
                if on_boundary {
                    prop_assert_eq!(p.b[(r, col)], 0.0);
                    prop_assert!((p.m[(r, col)] - m_expect).abs() <= 1e-14 * (1.0 + m_expect.abs()));
                } else {
                    prop_assert!((p.b[(r, col)] - b_expect).abs() <= 1e-15 * (1.0 + b_expect.abs()));
                }
            }
            if i == xb {
                prop_assert_eq!(kinds[r], RowKind::XBoundary);
            }
        }
        Ok(())
    })
}

/// Interior rows of M̃ applied to samples of a polynomial φ with `bφ`, `dφ`
/// of degree ≤ (n, m) reproduce `a ∂x(bφ) + c ∂y(dφ) + μφ`; with φ ≡ 1 this
/// is the constant-function check. Interior rows of B̃ applied to 1 equal the
/// exact integral of K.
pub fn run_interior_exactness(cases: u32) -> Result<(), String> {
    drive(cases, (poly_model(), -1.0..1.0f64, -1.0..1.0f64, any::<bool>()), |(pm, p1, q1, constant)| {
        let spec = pm.spec();
        let p = assembly::assemble(&spec, pm.n, pm.m).unwrap();
        let grid = &p.grid;
        let (b0, b1) = pm.b;
        let (d0, d1) = pm.d;
        let (a, c, mu) = pm.acmu;
        // φ = (1 + p1 ξ)(1 + q1 η) in shifted variables so that bφ has x-degree 2 ≤ n
        let (xc, yc) = (pm.x.0, pm.y.0);
        let (p1, q1) = if constant { (0.0, 0.0) } else { (p1, q1) };
        let phi = |x: f64, y: f64| (1.0 + p1 * (x - xc)) * (1.0 + q1 * (y - yc));
        let dx_bphi = |x: f64, y: f64| {
            (b1 * (1.0 + p1 * (x - xc)) + (b0 + b1 * x) * p1) * (1.0 + q1 * (y - yc))
        };
        let dy_dphi = |x: f64, y: f64| {
            (1.0 + p1 * (x - xc)) * (d1 * (1.0 + q1 * (y - yc)) + (d0 + d1 * y) * q1)
        };
        let f = grid.sample(phi);
        let ones = vec![1.0; grid.dim()];
        let kinds = assembly::row_kinds(&spec, grid);
        let (k0, k1, k2) = pm.k;
        let (xl, xh) = pm.x;
        let (yl, yh) = pm.y;
        let ix = |e: i32| (xh.powi(e + 1) - xl.powi(e + 1)) / (e + 1) as f64;
        let iy = |e: i32| (yh.powi(e + 1) - yl.powi(e + 1)) / (e + 1) as f64;
        for r in 0..grid.dim() {
            if kinds[r] != RowKind::Interior {
                continue;
            }
            let (i, j) = unvec_index(r, pm.n, pm.m).unwrap();
            let (x, y) = grid.point(i, j);
            let mphi: f64 = (0..grid.dim()).map(|col| p.m[(r, col)] * f.values[col]).sum();
            // roundoff scale of the row product
            let scale: f64 = (0..grid.dim()).map(|col| (p.m[(r, col)] * f.values[col]).abs()).sum();
            let exact = a * dx_bphi(x, y) + c * dy_dphi(x, y) + mu * phi(x, y);
            prop_assert!((mphi - exact).abs() <= 1e-11 * scale.max(1.0), "row {r}: {mphi} vs {exact}");
            let b1v: f64 = (0..grid.dim()).map(|col| p.b[(r, col)] * ones[col]).sum();
            let kint = k0 * ix(0) * iy(0) + k1 * x * ix(1) * iy(0) + k2 * y * ix(0) * iy(2);
            prop_assert!((b1v - kint).abs() <= 1e-11 * (1.0 + kint.abs()), "row {r}: {b1v} vs {kint}");
        }
        Ok(())
    })
}

// ---- eigen ----

fn small_grid(dim: usize) -> TensorGrid {
    let (n, m) = match dim {
        4 => (1, 1),
        6 => (1, 2),
        8 => (1, 3),
        9 => (2, 2),
        10 => (1, 4),
        12 => (2, 3),
        _ => panic!("no grid of size {dim}"),
    };
    TensorGrid::chebyshev(n, m, (0.0, 1.0), (0.0, 1.0)).unwrap()
}

#[derive(Debug, Clone)]
pub struct RandomPencil {
    pub dim: usize,
    pub b: Vec<f64>,
    pub m: Vec<f64>,
    /// Nonnegative B with a diagonally dominant M.
    pub positive: bool,
}

impl RandomPencil {
    pub fn pencil(&self) -> DiscretePencil {
        let n = self.dim;
        let b = Mat::from_fn(n, n, |i, j| self.b[i * n + j]);
        let m = Mat::from_fn(n, n, |i, j| self.m[i * n + j]);
        DiscretePencil::from_matrices(b, m, small_grid(n)).unwrap()
    }

    fn brute_force(&self) -> nalgebra::Complex<f64> {
        let n = self.dim;
        let b = nalgebra::DMatrix::from_row_slice(n, n, &self.b);
        let m = nalgebra::DMatrix::from_row_slice(n, n, &self.m);
        let a = m.lu().solve(&b).expect("M invertible");
        let ev = a.complex_eigenvalues();
        ev.iter().copied().fold(nalgebra::Complex::new(0.0, 0.0), |best, z| if z.norm() > best.norm() { z } else { best })
    }
}

pub fn random_pencil() -> impl Strategy<Value = RandomPencil> {
    (prop::sample::select(vec![4usize, 6, 8, 9, 10, 12]), any::<bool>()).prop_flat_map(|(dim, positive)| {
        let nn = dim * dim;
        let entries = if positive { 0.0..1.0f64 } else { -1.0..1.0f64 };
        (
            Just(dim),
            prop::collection::vec(entries, nn),
            prop::collection::vec(-1.0..1.0f64, nn),
            prop::collection::vec(1.0..2.0f64, dim),
            Just(positive),
        )
            .prop_map(|(dim, b, off, diag, positive)| {
                let spread = if positive { 0.1 / dim as f64 } else { 1.0 };
                let m = (0..dim * dim)
                    .map(|k| {
                        let (i, j) = (k / dim, k % dim);
                        if i == j {
                            diag[i] * if positive { 1.0 } else { 3.0 }
                        } else {
                            spread * off[k]
                        }
                    })
                    .collect();
                RandomPencil { dim, b, m, positive }
            })
    })
}

/// The dominant eigenvalue matches a full eigendecomposition of `M⁻¹B`; a
/// non-real dominant eigenvalue must be reported as such.
pub fn run_pencil_equivalence(cases: u32) -> Result<(), String> {
    drive(cases, random_pencil(), |rp| {
        let z = rp.brute_force();
        let res = dominant_pair(&rp.pencil(), 1e-13, DEFAULT_MAX_ITER);
        let complex = z.im.abs() > 1e-10 * z.norm();
        match res {
            Ok(r) => {
                prop_assert!(!complex, "returned {} for complex dominant {z}", r.eigenvalue);
                prop_assert!((r.eigenvalue - z.re).abs() <= 1e-10 * z.norm(), "{} vs {z}", r.eigenvalue);
                prop_assert!((r.r0 - z.norm()).abs() <= 1e-10 * z.norm());
            }
            Err(Error::ComplexDominant { re, im }) => {
                prop_assert!(complex, "complex reported ({re}, {im}) for real dominant {z}");
                prop_assert!((re - z.re).abs() <= 1e-8 * z.norm() && (im.abs() - z.im.abs()).abs() <= 1e-8 * z.norm());
            }
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
        }
        if rp.positive {
            prop_assert!(!complex && z.re > 0.0, "positive pencil gave {z}");
        }
        Ok(())
    })
}

/// Scaling the rows of both matrices by a positive diagonal leaves R0 unchanged.
pub fn run_scaling_invariance(cases: u32) -> Result<(), String> {
    let strat = (
        prop::sample::select(vec!["ex1", "ex2", "ex3", "ageimm-ex6", "ageimm-ex7"]),
        2usize..=12,
        prop::collection::vec(0.25..4.0f64, 169),
    );
    drive(cases, strat, |(name, s, scale)| {
        let (spec, _) = builtin(name).unwrap();
        let p = assembly::assemble(&spec, s, s).unwrap();
        let dim = p.dim();
        let d = |r: usize| scale[r % scale.len()];
        let scaled = DiscretePencil::from_matrices(
            Mat::from_fn(dim, dim, |i, j| d(i) * p.b[(i, j)]),
            Mat::from_fn(dim, dim, |i, j| d(i) * p.m[(i, j)]),
            p.grid.clone(),
        )
        .unwrap();
        let r1 = dominant_pair(&p, 1e-13, DEFAULT_MAX_ITER).unwrap().r0;
        let r2 = dominant_pair(&scaled, 1e-13, DEFAULT_MAX_ITER).unwrap().r0;
        prop_assert!((r1 - r2).abs() <= 1e-12 * r1, "{name} s={s}: {r1} vs {r2}");
        Ok(())
    })
}

// ---- age_immunity ----

#[derive(Debug, Clone)]
pub enum WaningCase {
    /// `g(w) = rate (c - w)` with c ≥ 1.
    Linear { rate: f64, c: f64 },
    /// `g(w) = w`.
    Proportional,
}

impl WaningCase {
    pub fn spec(&self) -> AgeImmunitySpec {
        let mut s = age_immunity::example6();
        s.waning = match *self {
            WaningCase::Linear { rate, c } => Waning::Affine { rate, fixed_point: c },
            WaningCase::Proportional => Waning::Affine { rate: -1.0, fixed_point: 0.0 },
        };
        s
    }
}

pub fn waning_case() -> impl Strategy<Value = WaningCase> {
    prop_oneof![
        (0.5..2.0f64, 1.0..2.0f64).prop_map(|(rate, c)| WaningCase::Linear { rate, c }),
        Just(WaningCase::Proportional),
    ]
}

/// The integrated characteristic matches the closed form to 1e-8, and is
/// strictly decreasing where g > 0.
pub fn run_characteristics(cases: u32) -> Result<(), String> {
    let strat = (waning_case(), 0.0..1.0f64, 0.001..0.999f64, 0.0..1.0f64);
    drive(cases, strat, |(case, s0, w0, frac)| {
        let spec = case.spec();
        let a0 = s0 * spec.a_max;
        let a = a0 + frac * (spec.a_max - a0);
        let closed = age_immunity::characteristic(&spec, a0, w0, a).unwrap();
        let numeric = age_immunity::characteristic_numeric(&spec, a0, w0, a).unwrap();
        prop_assert!((closed - numeric).abs() <= 1e-8, "{case:?} ({a0},{w0},{a}): {closed} vs {numeric}");
        let mut prev = w0;
        for k in 1..=8 {
            let ak = a0 + (spec.a_max - a0) * k as f64 / 8.0;
            let wk = age_immunity::characteristic(&spec, a0, w0, ak).unwrap();
            prop_assert!(wk < prev || ak == a0, "not decreasing at {ak}");
            prev = wk;
        }
        Ok(())
    })
}

#[derive(Debug, Clone)]
pub enum DfeCase {
    Example6,
    Example7,
    Linear { rate: f64, c: f64, mu: f64 },
    /// `g(w) = 1 - w^2`, integrated numerically.
    Quadratic { mu: f64 },
}

impl DfeCase {
    pub fn spec(&self) -> AgeImmunitySpec {
        match *self {
            DfeCase::Example6 => age_immunity::example6(),
            DfeCase::Example7 => age_immunity::example7(),
            DfeCase::Linear { rate, c, mu } => {
                let mut s = WaningCase::Linear { rate, c }.spec();
                s.mortality = Mortality::Constant(mu);
                s
            }
            DfeCase::Quadratic { mu } => {
                let mut s = age_immunity::example6();
                s.waning = Waning::Custom {
                    g: std::sync::Arc::new(|w| 1.0 - w * w),
                    dg: std::sync::Arc::new(|w| -2.0 * w),
                };
                s.mortality = Mortality::Custom { mu: std::sync::Arc::new(move |a| mu * (1.0 + a)), singular_at_max: false };
                s
            }
        }
    }
}

pub fn dfe_case() -> impl Strategy<Value = DfeCase> {
    prop_oneof![
        Just(DfeCase::Example6),
        Just(DfeCase::Example7),
        (0.5..2.0f64, 1.0..2.0f64, 0.0..2.0f64).prop_map(|(rate, c, mu)| DfeCase::Linear { rate, c, mu }),
        (0.0..2.0f64).prop_map(|mu| DfeCase::Quadratic { mu }),
    ]
}

/// Central differences (h = 1e-4) of `∂a s̄ - ∂w(g s̄) + μ s̄` vanish to 1e-4
/// away from the separating characteristic.
pub fn run_dfe_residual(cases: u32) -> Result<(), String> {
    let strat = (dfe_case(), 0.01..0.99f64, 0.0..1.0f64);
    drive(cases, strat, |(case, s, t)| {
        let spec = case.spec();
        let profile = age_immunity::dfe(&spec).unwrap();
        let h = 1e-4;
        let a = s * spec.a_max;
        let top = profile.w_star(a) - 0.05;
        prop_assume!(top > 2.0 * h);
        let w = h + t * (top - 2.0 * h);
        let sb = |a: f64, w: f64| profile.s_bar(a, w);
        let da = (sb(a + h, w) - sb(a - h, w)) / (2.0 * h);
        let dw = (spec.g(w + h) * sb(a, w + h) - spec.g(w - h) * sb(a, w - h)) / (2.0 * h);
        let res = da - dw + spec.mu(a) * sb(a, w);
        prop_assert!(res.abs() <= 1e-4, "{case:?} at ({a}, {w}): residual {res}");
        Ok(())
    })
}

/// Every property, by name.
pub fn all_properties() -> Vec<(&'static str, fn(u32) -> Result<(), String>)> {
    vec![
        ("quadrature exactness", run_quadrature_exactness),
        ("differentiation exactness", run_differentiation_exactness),
        ("affine covariance", run_affine_covariance),
        ("interpolation reproduction", run_interpolation_reproduction),
        ("separability identity", run_separability),
        ("index round trip", run_round_trip),
        ("pencil structure and boundary rows", run_pencil_structure),
        ("interior row exactness", run_interior_exactness),
        ("brute-force pencil equivalence", run_pencil_equivalence),
        ("row scaling invariance", run_scaling_invariance),
        ("characteristics closed form vs numeric", run_characteristics),
        ("disease-free residual", run_dfe_residual),
    ]
}
