//! Two-structure models of the form
//!
//! ```text
//! a(x,y) d/dx[b(x,y) u] + c(x,y) d/dy[d(x,y) u] + mu(x,y) u = λ^-1 ∫∫ K(x,y,ξ,σ) u(ξ,σ) dσ dξ
//! u(x, y_b) = ∫∫ α(x,ξ,σ) u(ξ,σ) dσ dξ
//! u(x_b, y) = ∫∫ β(y,ξ,σ) u(ξ,σ) dσ dξ
//! ```
//!
//! on `[x_lo, x_hi] x [y_lo, y_hi]`, where `x_b` / `y_b` is the low or high end of
//! each axis, plus the registry of built-in benchmark models.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::age_immunity::{self, AgeImmunitySpec};
use crate::error::{Error, Result};
use crate::grid2d::TensorGrid;

pub type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Kernel3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type Kernel4 = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
pub type NodePredicate = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;

/// Which end of an axis carries the boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BcSide {
    Low,
    High,
}

/// A model of the class above. Kernels stored as `None` are identically zero.
#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub coeff_a: Field2,
    pub coeff_b: Field2,
    pub coeff_c: Field2,
    pub coeff_d: Field2,
    pub coeff_mu: Field2,
    pub kernel_k: Option<Kernel4>,
    pub kernel_alpha: Option<Kernel3>,
    pub kernel_beta: Option<Kernel3>,
    pub x_bc_side: BcSide,
    pub y_bc_side: BcSide,
    /// Nodes where `mu` is singular; collocation there is replaced by `u = 0`.
    pub singular_dirichlet_nodes: Option<NodePredicate>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("x", &(self.x_lo, self.x_hi))
            .field("y", &(self.y_lo, self.y_hi))
            .field("x_bc_side", &self.x_bc_side)
            .field("y_bc_side", &self.y_bc_side)
            .field("has_k", &self.kernel_k.is_some())
            .field("has_alpha", &self.kernel_alpha.is_some())
            .field("has_beta", &self.kernel_beta.is_some())
            .finish_non_exhaustive()
    }
}

fn field(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Field2 {
    Arc::new(f)
}

fn constant(v: f64) -> Field2 {
    Arc::new(move |_, _| v)
}

impl ModelSpec {
    /// A model with `a = c = mu = 0`, `b = d = 1`, no kernels and boundary
    /// conditions at the low ends. Use the `with_*` methods to fill it in.
    pub fn new(name: impl Into<String>, x: (f64, f64), y: (f64, f64)) -> Self {
        Self {
            name: name.into(),
            x_lo: x.0,
            x_hi: x.1,
            y_lo: y.0,
            y_hi: y.1,
            coeff_a: constant(0.0),
            coeff_b: constant(1.0),
            coeff_c: constant(0.0),
            coeff_d: constant(1.0),
            coeff_mu: constant(0.0),
            kernel_k: None,
            kernel_alpha: None,
            kernel_beta: None,
            x_bc_side: BcSide::Low,
            y_bc_side: BcSide::Low,
            singular_dirichlet_nodes: None,
        }
    }

    pub fn with_a(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.coeff_a = field(f);
        self
    }

    pub fn with_b(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.coeff_b = field(f);
        self
    }

    pub fn with_c(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.coeff_c = field(f);
        self
    }

    pub fn with_d(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.coeff_d = field(f);
        self
    }

    pub fn with_mu(mut self, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.coeff_mu = field(f);
        self
    }

    pub fn with_k(mut self, f: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.kernel_k = Some(Arc::new(f));
        self
    }

    pub fn with_alpha(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.kernel_alpha = Some(Arc::new(f));
        self
    }

    pub fn with_beta(mut self, f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.kernel_beta = Some(Arc::new(f));
        self
    }

    pub fn with_sides(mut self, x: BcSide, y: BcSide) -> Self {
        self.x_bc_side = x;
        self.y_bc_side = y;
        self
    }

    pub fn with_singular_nodes(mut self, f: impl Fn(f64, f64) -> bool + Send + Sync + 'static) -> Self {
        self.singular_dirichlet_nodes = Some(Arc::new(f));
        self
    }

    pub fn a(&self, x: f64, y: f64) -> f64 {
        (self.coeff_a)(x, y)
    }

    pub fn b(&self, x: f64, y: f64) -> f64 {
        (self.coeff_b)(x, y)
    }

    pub fn c(&self, x: f64, y: f64) -> f64 {
        (self.coeff_c)(x, y)
    }

    pub fn d(&self, x: f64, y: f64) -> f64 {
        (self.coeff_d)(x, y)
    }

    pub fn mu(&self, x: f64, y: f64) -> f64 {
        (self.coeff_mu)(x, y)
    }

    pub fn k(&self, x: f64, y: f64, xi: f64, sigma: f64) -> f64 {
        self.kernel_k.as_ref().map_or(0.0, |k| k(x, y, xi, sigma))
    }

    pub fn alpha(&self, x: f64, xi: f64, sigma: f64) -> f64 {
        self.kernel_alpha.as_ref().map_or(0.0, |k| k(x, xi, sigma))
    }

    pub fn beta(&self, y: f64, xi: f64, sigma: f64) -> f64 {
        self.kernel_beta.as_ref().map_or(0.0, |k| k(y, xi, sigma))
    }

    pub fn is_singular_node(&self, x: f64, y: f64) -> bool {
        self.singular_dirichlet_nodes.as_ref().is_some_and(|p| p(x, y))
    }

    pub fn x_bounds(&self) -> (f64, f64) {
        (self.x_lo, self.x_hi)
    }

    pub fn y_bounds(&self) -> (f64, f64) {
        (self.y_lo, self.y_hi)
    }

    /// Chebyshev tensor grid of degrees `(n, m)` on this model's domain.
    pub fn grid(&self, n: usize, m: usize) -> Result<TensorGrid> {
        check_domain(self)?;
        TensorGrid::chebyshev(n, m, self.x_bounds(), self.y_bounds())
    }
}

fn check_domain(spec: &ModelSpec) -> Result<()> {
    let finite = [spec.x_lo, spec.x_hi, spec.y_lo, spec.y_hi].iter().all(|v| v.is_finite());
    if !finite || spec.x_lo >= spec.x_hi || spec.y_lo >= spec.y_hi {
        return Err(Error::Validation(format!(
            "{}: degenerate domain [{}, {}] x [{}, {}]",
            spec.name, spec.x_lo, spec.x_hi, spec.y_lo, spec.y_hi
        )));
    }
    Ok(())
}

/// How a reference value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ReferenceKind {
    /// Closed-form value.
    Exact,
    /// Value of the collocation method itself at `n = m = size`.
    SelfConverged { size: usize },
}

/// Reference data attached to a built-in model.
#[derive(Clone)]
pub struct ExactReference {
    pub r0_exact: Option<f64>,
    pub eigenfunction_exact: Option<Field2>,
    pub r0_reference_note: String,
    pub kind: ReferenceKind,
}

impl fmt::Debug for ExactReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactReference")
            .field("r0_exact", &self.r0_exact)
            .field("has_eigenfunction", &self.eigenfunction_exact.is_some())
            .field("note", &self.r0_reference_note)
            .field("kind", &self.kind)
            .finish()
    }
}

/// Names and one-line descriptions of the built-in models.
pub const BUILTIN_MODELS: &[(&str, &str)] = &[
    ("ex1", "analytic eigenfunction e^x sin y, nonlocal boundary conditions on both axes"),
    ("ex2", "eigenfunction x^(5/2) y^(8/3), homogeneous boundary conditions"),
    ("ex3", "eigenfunction e^-x y^(7/2), nonlocal condition at x = 0"),
    ("ageimm-ex6", "age-immunity model, linear waning g(w) = 1 - w, constant mortality"),
    ("ageimm-ex7", "age-immunity model, g(w) = w, mortality 1/(2 - a)^2 singular at a = 2"),
];

/// Exact R0 of `ex1`: `(e - 1)(sqrt 3 - sqrt 2) / 2`.
pub fn ex1_r0() -> f64 {
    (E - 1.0) * (3.0_f64.sqrt() - 2.0_f64.sqrt()) / 2.0
}

/// Exact R0 of `ex2`.
pub const EX2_R0: f64 = 6.0 / 77.0;

/// Exact R0 of `ex3`: `2^(11/2) (e - 1) / (9 e)`.
pub fn ex3_r0() -> f64 {
    2.0_f64.powf(5.5) * (E - 1.0) / (9.0 * E)
}

fn ex1() -> (ModelSpec, ExactReference) {
    let r0 = ex1_r0();
    let c = 1.0 / r0;
    let spec = ModelSpec::new("ex1", (0.0, 1.0), (PI / 6.0, PI / 4.0))
        .with_a(|_, y| y.cos() / 3.0)
        .with_c(|_, y| y.sin() / 3.0)
        .with_mu(|_, y| y.cos() / 3.0)
        .with_k(|x, y, _, _| x.exp() * y.cos() * y.sin())
        .with_alpha(move |x, _, _| c * x.exp() / 2.0)
        .with_beta(move |y, _, _| c * y.sin());
    let reference = ExactReference {
        r0_exact: Some(r0),
        eigenfunction_exact: Some(field(|x, y| x.exp() * y.sin())),
        r0_reference_note: "exact: (e-1)(sqrt(3)-sqrt(2))/2".into(),
        kind: ReferenceKind::Exact,
    };
    (spec, reference)
}

fn ex2() -> (ModelSpec, ExactReference) {
    let spec = ModelSpec::new("ex2", (0.0, 1.0), (0.0, 1.0))
        .with_a(|x, _| 2.0 * x / 15.0)
        .with_c(|_, y| y / 8.0)
        .with_mu(|_, _| 1.0 / 3.0)
        .with_k(|x, y, _, _| x.powf(2.5) * y.powf(8.0 / 3.0));
    let reference = ExactReference {
        r0_exact: Some(EX2_R0),
        eigenfunction_exact: Some(field(|x, y| x.powf(2.5) * y.powf(8.0 / 3.0))),
        r0_reference_note: "exact: 6/77".into(),
        kind: ReferenceKind::Exact,
    };
    (spec, reference)
}

fn ex3() -> (ModelSpec, ExactReference) {
    let r0 = ex3_r0();
    let c = 1.0 / r0;
    let spec = ModelSpec::new("ex3", (0.0, 1.0), (0.0, 2.0))
        .with_a(|_, _| 1.0)
        .with_c(|_, y| 2.0 * y / 7.0)
        .with_mu(|_, _| 1.0)
        .with_k(|x, y, _, _| (-x).exp() * y.powf(3.5))
        .with_beta(move |y, _, _| c * y.powf(3.5));
    let reference = ExactReference {
        r0_exact: Some(r0),
        eigenfunction_exact: Some(field(|x, y| (-x).exp() * y.powf(3.5))),
        r0_reference_note: "exact: 2^(11/2)(e-1)/(9e)".into(),
        kind: ReferenceKind::Exact,
    };
    (spec, reference)
}

fn age_immunity_model(name: &str, ai: AgeImmunitySpec, reference: ExactReference) -> Result<(ModelSpec, ExactReference)> {
    let dfe = age_immunity::dfe(&ai)?;
    let mut spec = age_immunity::to_model_spec(&ai, &dfe);
    spec.name = name.into();
    Ok((spec, reference))
}

/// Looks up a built-in model by name.
pub fn builtin(name: &str) -> Result<(ModelSpec, ExactReference)> {
    match name {
        "ex1" => Ok(ex1()),
        "ex2" => Ok(ex2()),
        "ex3" => Ok(ex3()),
        "ageimm-ex6" => age_immunity_model(
            name,
            age_immunity::example6(),
            ExactReference {
                r0_exact: Some(age_immunity::ex6_r0()),
                eigenfunction_exact: Some(field(age_immunity::example6_eigenfunction)),
                r0_reference_note: "exact: (1/20)(e^-8/2 - e^-4 + 1/2)".into(),
                kind: ReferenceKind::Exact,
            },
        ),
        "ageimm-ex7" => age_immunity_model(
            name,
            age_immunity::example7(),
            ExactReference {
                r0_exact: Some(age_immunity::EX7_R0_REFERENCE),
                eigenfunction_exact: None,
                r0_reference_note: "self-converged collocation value at n = m = 100".into(),
                kind: ReferenceKind::SelfConverged { size: 100 },
            },
        ),
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

/// Outcome of [`validate`]. Errors make the model unusable on this grid;
/// warnings flag data outside the usual sign assumptions.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    /// Nodes with non-finite data that are covered by `singular_dirichlet_nodes`.
    pub singular_nodes: Vec<(f64, f64)>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.is_ok() {
            Ok(self)
        } else {
            Err(Error::Validation(self.errors.join("; ")))
        }
    }
}

/// Up to `count` indices spread evenly over `0..len`, always including both ends.
fn strided(len: usize, count: usize) -> Vec<usize> {
    if len <= count {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..count).map(|s| s * (len - 1) / (count - 1)).collect();
    idx.dedup();
    idx
}

struct Checker<'a> {
    report: &'a mut ValidationReport,
    negative_seen: Vec<&'static str>,
    nonfinite_seen: Vec<&'static str>,
}

impl Checker<'_> {
    fn check(&mut self, what: &'static str, value: f64, at: impl FnOnce() -> String, sign_matters: bool) {
        if !value.is_finite() {
            if !self.nonfinite_seen.contains(&what) {
                self.nonfinite_seen.push(what);
                self.report.errors.push(format!("{what} is {value} at {}", at()));
            }
        } else if sign_matters && value < 0.0 && !self.negative_seen.contains(&what) {
            self.negative_seen.push(what);
            self.report.warnings.push(format!("{what} is negative ({value:e}) at {}", at()));
        }
    }
}

/// Evaluates all model data on `grid` and reports problems without failing.
///
/// Coefficients are checked at every node. Kernels are checked for a strided
/// subset of row nodes against every column node.
pub fn validate(spec: &ModelSpec, grid: &TensorGrid) -> ValidationReport {
    let mut report = ValidationReport::default();
    if let Err(e) = check_domain(spec) {
        report.errors.push(e.to_string());
        return report;
    }
    let bounds_match = grid.gx.lo() == spec.x_lo
        && grid.gx.hi() == spec.x_hi
        && grid.gy.lo() == spec.y_lo
        && grid.gy.hi() == spec.y_hi;
    if !bounds_match {
        report.errors.push(format!(
            "grid [{}, {}] x [{}, {}] does not match the model domain",
            grid.gx.lo(),
            grid.gx.hi(),
            grid.gy.lo(),
            grid.gy.hi()
        ));
        return report;
    }

    let xs = grid.gx.nodes();
    let ys = grid.gy.nodes();
    let mut singular = Vec::new();
    {
        let mut ck = Checker { report: &mut report, negative_seen: vec![], nonfinite_seen: vec![] };
        for &x in xs {
            for &y in ys {
                let at = || format!("({x}, {y})");
                ck.check("a", spec.a(x, y), at, true);
                ck.check("b", spec.b(x, y), at, false);
                ck.check("c", spec.c(x, y), at, true);
                ck.check("d", spec.d(x, y), at, false);
                let mu = spec.mu(x, y);
                if spec.is_singular_node(x, y) {
                    singular.push((x, y));
                } else {
                    ck.check("mu", mu, at, true);
                }
            }
        }

        let rows_x = strided(xs.len(), 9);
        let rows_y = strided(ys.len(), 9);
        if spec.kernel_k.is_some() {
            for &i in &rows_x {
                for &j in &rows_y {
                    if spec.is_singular_node(xs[i], ys[j]) {
                        continue;
                    }
                    for &xi in xs {
                        for &sigma in ys {
                            let v = spec.k(xs[i], ys[j], xi, sigma);
                            ck.check("K", v, || format!("({}, {}, {xi}, {sigma})", xs[i], ys[j]), true);
                        }
                    }
                }
            }
        }
        if spec.kernel_alpha.is_some() {
            for &i in &rows_x {
                for &xi in xs {
                    for &sigma in ys {
                        let v = spec.alpha(xs[i], xi, sigma);
                        ck.check("alpha", v, || format!("({}, {xi}, {sigma})", xs[i]), true);
                    }
                }
            }
        }
        if spec.kernel_beta.is_some() {
            for &j in &rows_y {
                for &xi in xs {
                    for &sigma in ys {
                        let v = spec.beta(ys[j], xi, sigma);
                        ck.check("beta", v, || format!("({}, {xi}, {sigma})", ys[j]), true);
                    }
                }
            }
        }
    }
    report.singular_nodes = singular
        .into_iter()
        .filter(|&(x, y)| !spec.mu(x, y).is_finite())
        .collect();
    report
}
