use bicolloc_core::age_immunity;
use bicolloc_core::eigen::{EigenMethod, DEFAULT_TOL};
use bicolloc_core::harness::{self, ConvergenceReport, Record};
use bicolloc_core::model::{builtin, BUILTIN_MODELS};
use bicolloc_core::spectral1d::{self, Grid1D};
use bicolloc_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(bicolloc, ModelError, PyValueError, "Unknown model or invalid model data.");
create_exception!(bicolloc, NumericalError, PyRuntimeError, "Singular pencil, non-convergence or complex dominant eigenvalue.");

fn to_py(err: Error) -> PyErr {
    let msg = err.to_string();
    match err {
        Error::InvalidArgument(_) => PyValueError::new_err(msg),
        Error::UnknownModel(_) | Error::Validation(_) | Error::NonFinite { .. } => ModelError::new_err(msg),
        Error::Io { .. } => PyOSError::new_err(msg),
        _ => NumericalError::new_err(msg),
    }
}

/// Chebyshev extremal nodes on `[lo, hi]`, ascending.
#[pyfunction]
#[pyo3(signature = (n, lo=-1.0, hi=1.0))]
fn cheb_nodes(n: usize, lo: f64, hi: f64) -> PyResult<Vec<f64>> {
    spectral1d::cheb_nodes(n, lo, hi).map_err(to_py)
}

/// Clenshaw–Curtis weights matching `cheb_nodes`.
#[pyfunction]
#[pyo3(signature = (n, lo=-1.0, hi=1.0))]
fn cc_weights(n: usize, lo: f64, hi: f64) -> PyResult<Vec<f64>> {
    spectral1d::cc_weights(n, lo, hi).map_err(to_py)
}

/// Differentiation matrix on the Chebyshev nodes, as a list of rows.
#[pyfunction]
#[pyo3(signature = (n, lo=-1.0, hi=1.0))]
fn diff_matrix(n: usize, lo: f64, hi: f64) -> PyResult<Vec<Vec<f64>>> {
    let g = Grid1D::chebyshev(n, lo, hi).map_err(to_py)?;
    let d = g.diff();
    Ok((0..=n).map(|i| (0..=n).map(|k| d[(i, k)]).collect()).collect())
}

/// `(name, description, reference_r0)` for every built-in model.
#[pyfunction]
fn list_models() -> PyResult<Vec<(String, String, Option<f64>)>> {
    BUILTIN_MODELS
        .iter()
        .map(|(name, desc)| {
            let (_, reference) = builtin(name).map_err(to_py)?;
            Ok((name.to_string(), desc.to_string(), reference.r0_exact))
        })
        .collect()
}

#[pyclass(frozen, get_all, name = "R0Result")]
struct PyR0Result {
    model: String,
    n: usize,
    m: usize,
    r0: f64,
    eigenvalue: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    method: String,
    x_nodes: Vec<f64>,
    y_nodes: Vec<f64>,
    /// Eigenvector samples, `eigvec[i][j]` at `(x_nodes[i], y_nodes[j])`.
    eigvec: Vec<Vec<f64>>,
}

#[pymethods]
impl PyR0Result {
    fn __repr__(&self) -> String {
        format!(
            "R0Result(model={:?}, n={}, m={}, r0={}, residual={:e}, converged={})",
            self.model, self.n, self.m, self.r0, self.residual, self.converged
        )
    }
}

/// Approximates R0 of a built-in model on the `(n, m)` Chebyshev grid.
#[pyfunction]
#[pyo3(signature = (model, n, m, tol=DEFAULT_TOL))]
fn compute_r0(py: Python<'_>, model: &str, n: usize, m: usize, tol: f64) -> PyResult<PyR0Result> {
    let (spec, _) = builtin(model).map_err(to_py)?;
    let res = py.detach(|| harness::solve(&spec, n, m, tol)).map_err(to_py)?;
    let grid = &res.eigvec.grid;
    Ok(PyR0Result {
        model: model.to_string(),
        n,
        m,
        r0: res.r0,
        eigenvalue: res.eigenvalue,
        residual: res.residual,
        iterations: res.iterations,
        converged: res.converged,
        method: match res.method {
            EigenMethod::PowerIteration => "power_iteration",
            EigenMethod::DenseFallback => "dense_fallback",
        }
        .to_string(),
        x_nodes: grid.gx.nodes().to_vec(),
        y_nodes: grid.gy.nodes().to_vec(),
        eigvec: res.eigvec.to_rows(),
    })
}

#[pyclass(frozen, get_all, skip_from_py_object, name = "ConvergenceRecord")]
#[derive(Clone)]
struct PyRecord {
    n: usize,
    m: usize,
    r0: Option<f64>,
    err_r0: Option<f64>,
    err_phi: Option<f64>,
    residual: Option<f64>,
    wall_time_seconds: f64,
    failure: Option<String>,
}

impl From<&Record> for PyRecord {
    fn from(r: &Record) -> Self {
        Self {
            n: r.n,
            m: r.m,
            r0: r.r0,
            err_r0: r.err_r0,
            err_phi: r.err_phi,
            residual: r.residual,
            wall_time_seconds: r.wall_time_seconds,
            failure: r.failure.clone(),
        }
    }
}

#[pyclass(frozen, get_all, name = "ConvergenceReport")]
struct PyReport {
    model: String,
    records: Vec<PyRecord>,
    order_r0: Option<f64>,
    order_phi: Option<f64>,
    reference_r0: Option<f64>,
    reference_provenance: Option<String>,
    csv: String,
}

impl From<ConvergenceReport> for PyReport {
    fn from(report: ConvergenceReport) -> Self {
        let mut buf = Vec::new();
        harness::write_csv(&report, &mut buf).expect("writing to memory");
        Self {
            model: report.model.clone(),
            records: report.records.iter().map(PyRecord::from).collect(),
            order_r0: report.order_r0,
            order_phi: report.order_phi,
            reference_r0: report.reference_r0.as_ref().map(|r| r.value),
            reference_provenance: report.reference_r0.map(|r| r.provenance),
            csv: String::from_utf8(buf).expect("ascii output"),
        }
    }
}

/// Sweeps `n = m` over `sizes` and fits convergence orders.
#[pyfunction]
fn run_convergence(py: Python<'_>, model: &str, sizes: Vec<usize>) -> PyResult<PyReport> {
    let report = py.detach(|| harness::run_convergence(model, &sizes)).map_err(to_py)?;
    Ok(report.into())
}

/// R0 of an age-immunity built-in by nested quadrature, independent of collocation.
#[pyfunction]
fn oracle_r0(py: Python<'_>, model: &str) -> PyResult<f64> {
    let spec = age_immunity::builtin_spec(model).map_err(to_py)?;
    py.detach(|| {
        let profile = age_immunity::dfe(&spec)?;
        age_immunity::oracle_r0(&spec, &profile)
    })
    .map_err(to_py)
}

/// Disease-free susceptible density of an age-immunity built-in,
/// `result[i][j]` at `(ages[i], levels[j])`.
#[pyfunction]
fn dfe_surface(model: &str, ages: Vec<f64>, levels: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let spec = age_immunity::builtin_spec(model).map_err(to_py)?;
    if let Some(a) = ages.iter().find(|a| !(0.0..=spec.a_max).contains(*a)) {
        return Err(PyValueError::new_err(format!("age {a} outside [0, {}]", spec.a_max)));
    }
    if let Some(w) = levels.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return Err(PyValueError::new_err(format!("immunity level {w} outside [0, 1]")));
    }
    let profile = age_immunity::dfe(&spec).map_err(to_py)?;
    Ok(ages.iter().map(|&a| levels.iter().map(|&w| profile.s_bar(a, w)).collect()).collect())
}

#[pymodule]
fn bicolloc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ModelError", m.py().get_type::<ModelError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add("DEFAULT_TOL", DEFAULT_TOL)?;
    m.add_class::<PyR0Result>()?;
    m.add_class::<PyRecord>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(cheb_nodes, m)?)?;
    m.add_function(wrap_pyfunction!(cc_weights, m)?)?;
    m.add_function(wrap_pyfunction!(diff_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(list_models, m)?)?;
    m.add_function(wrap_pyfunction!(compute_r0, m)?)?;
    m.add_function(wrap_pyfunction!(run_convergence, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_r0, m)?)?;
    m.add_function(wrap_pyfunction!(dfe_surface, m)?)?;
    Ok(())
}
