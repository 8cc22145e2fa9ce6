//! Epidemic model structured by demographic age `a in [0, a_max]` and immunity
//! level `w in [0, 1]`.
//!
//! Immunity of susceptibles wanes along `dw/da = -g(w)`. The disease-free
//! susceptible density `s̄` solves
//!
//! ```text
//! ∂a s̄ - ∂w(g s̄) = -mu(a) s̄,   g(1) s̄(a, 1) = 0,   s̄(0, w) = B(w)
//! ```
//!
//! and is obtained along characteristics. Infected individuals keep their
//! immunity level, recover at rate `gamma` and die at rate `mu(a)`, giving the
//! birth and transition operators
//!
//! ```text
//! (Bφ)(a,w) = beta(w) s̄(a,w) ∫∫ nu(ω) φ(ξ,ω) dξ dω
//! (Mφ)(a,w) = ∂a φ + (mu(a) + gamma) φ,   φ(0,w) = φ(a,1) = 0.
//! ```
//!
//! The next-generation operator has rank one, so its only nonzero eigenvalue is
//! `R0 = ∫ nu(ω) ∫ ∫_0^ξ T(ξ,b) beta(ω) s̄(b,ω) db dξ dω` with the survival
//! factor `T(a,ξ) = exp(-∫_ξ^a (mu + gamma))`. [`oracle_r0`] evaluates this by
//! nested adaptive quadrature, independently of collocation.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BcSide, ModelSpec};
use crate::quad;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Surface = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Exact R0 of the constant-mortality benchmark, `(1/20)(e^-8/2 - e^-4 + 1/2)`.
pub fn ex6_r0() -> f64 {
    ((-8.0_f64).exp() / 2.0 - (-4.0_f64).exp() + 0.5) / 20.0
}

/// Reference R0 of the singular-mortality benchmark (collocation at n = m = 100).
pub const EX7_R0_REFERENCE: f64 = 0.111258187908847;

/// Eigenfunction of the constant-mortality benchmark.
pub fn example6_eigenfunction(a: f64, w: f64) -> f64 {
    0.5 * (1.0 - w).powi(3) * (-2.0 * a).exp() * (1.0 - (-2.0 * a).exp())
}

/// Immunity waning rate `g`.
#[derive(Clone)]
pub enum Waning {
    /// `g(w) = rate * (fixed_point - w)`; characteristics are exponentials.
    Affine { rate: f64, fixed_point: f64 },
    /// Arbitrary `g` with its derivative; characteristics are integrated numerically.
    Custom { g: Fn1, dg: Fn1 },
}

impl Waning {
    pub fn g(&self, w: f64) -> f64 {
        match self {
            Waning::Affine { rate, fixed_point } => rate * (fixed_point - w),
            Waning::Custom { g, .. } => g(w),
        }
    }

    pub fn dg(&self, w: f64) -> f64 {
        match self {
            Waning::Affine { rate, .. } => -rate,
            Waning::Custom { dg, .. } => dg(w),
        }
    }
}

/// Natural mortality `mu(a)`.
#[derive(Clone)]
pub enum Mortality {
    Constant(f64),
    /// `mu(a) = 1 / (a_max - a)^2`, singular at `a = a_max`.
    InverseSquareToMax,
    Custom { mu: Fn1, singular_at_max: bool },
}

#[derive(Clone)]
pub struct AgeImmunitySpec {
    pub a_max: f64,
    pub gamma: f64,
    pub waning: Waning,
    pub mortality: Mortality,
    /// Birth density over immunity levels.
    pub birth: Fn1,
    /// Probability of infection on contact, by immunity level.
    pub beta_inf: Fn1,
    /// Infectivity by immunity level.
    pub nu: Fn1,
}

impl AgeImmunitySpec {
    pub fn g(&self, w: f64) -> f64 {
        self.waning.g(w)
    }

    pub fn mu(&self, a: f64) -> f64 {
        match &self.mortality {
            Mortality::Constant(v) => *v,
            Mortality::InverseSquareToMax => {
                let d = self.a_max - a;
                1.0 / (d * d)
            }
            Mortality::Custom { mu, .. } => mu(a),
        }
    }

    pub fn mortality_singular_at_max(&self) -> bool {
        match &self.mortality {
            Mortality::Constant(_) => false,
            Mortality::InverseSquareToMax => true,
            Mortality::Custom { singular_at_max, .. } => *singular_at_max,
        }
    }

    /// `∫_from^to mu(s) ds` for `0 <= from <= to <= a_max`; `+inf` when the
    /// integral diverges at `a_max`.
    pub fn mortality_integral(&self, from: f64, to: f64) -> Result<f64> {
        if from == to {
            return Ok(0.0);
        }
        match &self.mortality {
            Mortality::Constant(v) => Ok(v * (to - from)),
            Mortality::InverseSquareToMax => {
                if to >= self.a_max {
                    return Ok(f64::INFINITY);
                }
                Ok(1.0 / (self.a_max - to) - 1.0 / (self.a_max - from))
            }
            Mortality::Custom { mu, singular_at_max } => {
                if *singular_at_max && to >= self.a_max {
                    return Ok(f64::INFINITY);
                }
                quad::integrate(|s| mu(s), from, to, 1e-13)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_max > 0.0) || !self.a_max.is_finite() {
            return Err(Error::Validation(format!("a_max must be positive, got {}", self.a_max)));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::Validation(format!("gamma must be positive, got {}", self.gamma)));
        }
        // g may vanish at an endpoint (both reference examples do) but not inside.
        for k in 0..=64 {
            let w = k as f64 / 64.0;
            let g = self.g(w);
            let interior = k > 0 && k < 64;
            if !g.is_finite() || g < 0.0 || (interior && g <= 0.0) {
                return Err(Error::Validation(format!("waning rate g({w}) = {g} is not positive")));
            }
        }
        Ok(())
    }
}

fn arc1(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Fn1 {
    Arc::new(f)
}

/// Linear waning `g(w) = 1 - w`, constant mortality 1, `a_max = 2`, `gamma = 1`,
/// `beta = nu = 1 - w`, births `(1 - w)^2`.
pub fn example6() -> AgeImmunitySpec {
    AgeImmunitySpec {
        a_max: 2.0,
        gamma: 1.0,
        waning: Waning::Affine { rate: 1.0, fixed_point: 1.0 },
        mortality: Mortality::Constant(1.0),
        birth: arc1(|w| (1.0 - w) * (1.0 - w)),
        beta_inf: arc1(|w| 1.0 - w),
        nu: arc1(|w| 1.0 - w),
    }
}

/// Waning `g(w) = w`, mortality `1/(2 - a)^2`, `a_max = 2`, `gamma = 1`,
/// `beta = nu = 1 - w`, births `(1 - w)^2`.
pub fn example7() -> AgeImmunitySpec {
    AgeImmunitySpec {
        a_max: 2.0,
        gamma: 1.0,
        waning: Waning::Affine { rate: -1.0, fixed_point: 0.0 },
        mortality: Mortality::InverseSquareToMax,
        birth: arc1(|w| (1.0 - w) * (1.0 - w)),
        beta_inf: arc1(|w| 1.0 - w),
        nu: arc1(|w| 1.0 - w),
    }
}

/// The age-immunity specification behind a built-in model name.
pub fn builtin_spec(name: &str) -> Result<AgeImmunitySpec> {
    match name {
        "ageimm-ex6" => Ok(example6()),
        "ageimm-ex7" => Ok(example7()),
        _ => Err(Error::UnknownModel(name.to_string())),
    }
}

const RK4_MAX_STEP: f64 = 1e-3;

fn rk4_steps(span: f64) -> usize {
    ((span.abs() / RK4_MAX_STEP).ceil() as usize).max(1)
}

/// Integrates `dw/da = -g(w)` together with `dI/da = g'(w)` from `a0` to `a`
/// (either direction) with classical fourth-order Runge–Kutta.
fn rk4_characteristic(waning: &Waning, a0: f64, w0: f64, a: f64) -> (f64, f64) {
    let steps = rk4_steps(a - a0);
    let h = (a - a0) / steps as f64;
    let rhs = |w: f64| (-waning.g(w), waning.dg(w));
    let (mut w, mut integral) = (w0, 0.0);
    for _ in 0..steps {
        let k1 = rhs(w);
        let k2 = rhs(w + 0.5 * h * k1.0);
        let k3 = rhs(w + 0.5 * h * k2.0);
        let k4 = rhs(w + h * k3.0);
        w += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        integral += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (w, integral)
}

fn check_characteristic_args(spec: &AgeImmunitySpec, a0: f64, w0: f64, a: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w0) {
        return Err(Error::invalid(format!("initial immunity {w0} outside [0, 1]")));
    }
    if !(0.0 <= a0 && a0 <= a && a <= spec.a_max) {
        return Err(Error::invalid(format!(
            "need 0 <= a0 <= a <= {}, got a0 = {a0}, a = {a}",
            spec.a_max
        )));
    }
    Ok(())
}

/// Immunity level at age `a` along the characteristic through `(a0, w0)`.
pub fn characteristic(spec: &AgeImmunitySpec, a0: f64, w0: f64, a: f64) -> Result<f64> {
    check_characteristic_args(spec, a0, w0, a)?;
    Ok(match &spec.waning {
        Waning::Affine { rate, fixed_point } => fixed_point + (rate * (a - a0)).exp() * (w0 - fixed_point),
        Waning::Custom { .. } => rk4_characteristic(&spec.waning, a0, w0, a).0,
    })
}

/// Same as [`characteristic`] but always integrates numerically.
pub fn characteristic_numeric(spec: &AgeImmunitySpec, a0: f64, w0: f64, a: f64) -> Result<f64> {
    check_characteristic_args(spec, a0, w0, a)?;
    Ok(rk4_characteristic(&spec.waning, a0, w0, a).0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Numeric,
}

/// Disease-free susceptible density.
#[derive(Clone)]
pub struct DFEProfile {
    pub s_bar: Surface,
    /// Characteristic through `(0, 1)`; `s̄` vanishes above it.
    pub w_star: Fn1,
    pub provenance: Provenance,
}

impl DFEProfile {
    pub fn s_bar(&self, a: f64, w: f64) -> f64 {
        (self.s_bar)(a, w)
    }

    pub fn w_star(&self, a: f64) -> f64 {
        (self.w_star)(a)
    }
}

/// Solves for the disease-free equilibrium along characteristics.
///
/// Characteristics from `(0, w0)` carry `σ(0) = B(w0)` and `σ' = (g'(w) - mu) σ`;
/// those entering through `w = 1` carry zero. On the separating curve `w*` the
/// value from below is used.
pub fn dfe(spec: &AgeImmunitySpec) -> Result<DFEProfile> {
    spec.validate()?;
    let profile = match spec.waning.clone() {
        Waning::Affine { rate, fixed_point } => {
            let spec_s = spec.clone();
            let w_star: Fn1 = Arc::new(move |a| fixed_point + (rate * a).exp() * (1.0 - fixed_point));
            let ws = w_star.clone();
            let s_bar: Surface = Arc::new(move |a, w| {
                if a >= spec_s.a_max && spec_s.mortality_singular_at_max() {
                    return 0.0;
                }
                if w > ws(a) {
                    return 0.0;
                }
                let w0 = fixed_point + (-rate * a).exp() * (w - fixed_point);
                let mort = spec_s.mortality_integral(0.0, a).unwrap_or(f64::NAN);
                (spec_s.birth)(w0) * (-rate * a - mort).exp()
            });
            DFEProfile { s_bar, w_star, provenance: Provenance::ClosedForm }
        }
        Waning::Custom { .. } => {
            let spec_w = spec.clone();
            let w_star: Fn1 = Arc::new(move |a| rk4_characteristic(&spec_w.waning, 0.0, 1.0, a).0);
            let ws = w_star.clone();
            let spec_s = spec.clone();
            let s_bar: Surface = Arc::new(move |a, w| {
                if a >= spec_s.a_max && spec_s.mortality_singular_at_max() {
                    return 0.0;
                }
                if a == 0.0 {
                    return (spec_s.birth)(w);
                }
                if w > ws(a) {
                    return 0.0;
                }
                // Trace back to the birth line; the g' integral picks up a sign
                // when integrating in reverse.
                let (w0, back) = rk4_characteristic(&spec_s.waning, a, w, 0.0);
                let mort = spec_s.mortality_integral(0.0, a).unwrap_or(f64::NAN);
                (spec_s.birth)(w0.min(1.0)) * (-back - mort).exp()
            });
            DFEProfile { s_bar, w_star, provenance: Provenance::Numeric }
        }
    };
    // Probe the profile once so a failing characteristic inversion surfaces here.
    for k in 0..=8 {
        let a = spec.a_max * k as f64 / 8.0;
        for l in 0..=8 {
            let w = l as f64 / 8.0;
            let v = profile.s_bar(a, w);
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "disease-free density", location: format!("({a}, {w})") });
            }
        }
    }
    Ok(profile)
}

/// Fraction of individuals infected at age `xi` still infected at age `a`.
pub fn survival_t(spec: &AgeImmunitySpec, xi: f64, a: f64) -> Result<f64> {
    if !(0.0 <= xi && xi <= a && a <= spec.a_max) {
        return Err(Error::invalid(format!(
            "need 0 <= xi <= a <= {}, got xi = {xi}, a = {a}",
            spec.a_max
        )));
    }
    if xi == a {
        return Ok(1.0);
    }
    let mort = spec.mortality_integral(xi, a)?;
    Ok((-(spec.gamma * (a - xi)) - mort).exp())
}

/// Absolute tolerance of [`oracle_r0`].
pub const ORACLE_TOL: f64 = 1e-9;

/// R0 from the explicit rank-one next-generation operator, by nested adaptive
/// quadrature. The immunity integral at each age stops at `w*(b)`, above which
/// `s̄` vanishes and below which it is smooth.
pub fn oracle_r0(spec: &AgeImmunitySpec, dfe: &DFEProfile) -> Result<f64> {
    let a_max = spec.a_max;
    let tol_outer = 0.1 * ORACLE_TOL;
    let tol_mid = tol_outer / (10.0 * a_max);
    let tol_inner = tol_mid / (10.0 * a_max);

    // Error slots: closures passed to the integrator cannot return Result.
    let failure = std::cell::RefCell::new(None::<Error>);
    let record = |e: Error| {
        failure.borrow_mut().get_or_insert(e);
        0.0
    };

    let immunity_integral = |b: f64| -> f64 {
        let top = dfe.w_star(b).clamp(0.0, 1.0);
        quad::integrate(|w| (spec.nu)(w) * (spec.beta_inf)(w) * dfe.s_bar(b, w), 0.0, top, tol_inner)
            .unwrap_or_else(record)
    };
    let infected_mass = |xi: f64| -> f64 {
        quad::integrate(
            |b| survival_t(spec, b, xi).unwrap_or_else(record) * immunity_integral(b),
            0.0,
            xi,
            tol_mid,
        )
        .unwrap_or_else(record)
    };
    let r0 = quad::integrate(infected_mass, 0.0, a_max, tol_outer)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r0)
}

/// Casts the infected equation as a two-structure model with `x = a`, `y = w`.
///
/// `φ(0, w) = 0` becomes the x-boundary at the low end and `φ(a, 1) = 0` the
/// y-boundary at the high end, both with zero kernels. A singular mortality at
/// `a_max` marks the nodes there for Dirichlet replacement.
pub fn to_model_spec(spec: &AgeImmunitySpec, dfe: &DFEProfile) -> ModelSpec {
    let s_mu = spec.clone();
    let s_k = spec.clone();
    let dfe_k = dfe.clone();
    let gamma = spec.gamma;
    let a_max = spec.a_max;
    let mut model = ModelSpec::new("age-immunity", (0.0, spec.a_max), (0.0, 1.0))
        .with_a(|_, _| 1.0)
        .with_b(|_, _| 1.0)
        .with_c(|_, _| 0.0)
        .with_d(|_, _| 1.0)
        .with_mu(move |a, _| s_mu.mu(a) + gamma)
        .with_k(move |a, w, _, omega| (s_k.beta_inf)(w) * dfe_k.s_bar(a, w) * (s_k.nu)(omega))
        .with_alpha(|_, _, _| 0.0)
        .with_beta(|_, _, _| 0.0)
        .with_sides(BcSide::Low, BcSide::High);
    // Zero kernels need no cubature rows.
    model.kernel_alpha = None;
    model.kernel_beta = None;
    if spec.mortality_singular_at_max() {
        model = model.with_singular_nodes(move |a, _| a >= a_max);
    }
    model
}
