//! Convergence sweeps over `n = m` and empirical order estimation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::eigen::{self, match_exact, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{builtin, ExactReference, ModelSpec, ReferenceKind};

/// Errors at or below this are roundoff and excluded from order fits.
pub const PLATEAU_FLOOR: f64 = 1e-12;

/// An error must exceed this multiple of the eigen residual to enter a fit.
pub const RESIDUAL_FACTOR: f64 = 10.0;

pub const CSV_HEADER: &str = "n,m,r0,err_r0,err_phi,residual,wall_time_s";

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub n: usize,
    pub m: usize,
    pub r0: Option<f64>,
    pub err_r0: Option<f64>,
    pub err_phi: Option<f64>,
    pub residual: Option<f64>,
    pub wall_time_seconds: f64,
    /// Set when the pipeline failed at this size.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceValue {
    pub value: f64,
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub model: String,
    pub records: Vec<Record>,
    pub order_r0: Option<f64>,
    pub order_phi: Option<f64>,
    pub reference_r0: Option<ReferenceValue>,
}

/// Assembles the pencil on the `(n, m)` grid and computes its dominant pair.
pub fn solve(spec: &ModelSpec, n: usize, m: usize, tol: f64) -> Result<eigen::R0Result> {
    let pencil = crate::assembly::assemble(spec, n, m)?;
    eigen::dominant_pair(&pencil, tol, DEFAULT_MAX_ITER)
}

/// Reference R0 for a built-in: the closed form, or a fresh collocation run at
/// the recorded size for self-converged references.
pub fn reference_for(spec: &ModelSpec, reference: &ExactReference) -> Result<Option<ReferenceValue>> {
    match reference.kind {
        ReferenceKind::Exact => Ok(reference.r0_exact.map(|value| ReferenceValue {
            value,
            provenance: reference.r0_reference_note.clone(),
        })),
        ReferenceKind::SelfConverged { size } => {
            let res = solve(spec, size, size, DEFAULT_TOL)?;
            Ok(Some(ReferenceValue {
                value: res.r0,
                provenance: format!("collocation at n = m = {size}"),
            }))
        }
    }
}

/// Runs the built-in `model` at each size `n = m = s`.
pub fn run_convergence(model: &str, sizes: &[usize]) -> Result<ConvergenceReport> {
    let (spec, reference) = builtin(model)?;
    let reference_r0 = reference_for(&spec, &reference)?;
    run_convergence_against(&spec, &reference, reference_r0, sizes)
}

/// Sweep with an already-computed reference value.
pub fn run_convergence_against(
    spec: &ModelSpec,
    reference: &ExactReference,
    reference_r0: Option<ReferenceValue>,
    sizes: &[usize],
) -> Result<ConvergenceReport> {
    if sizes.is_empty() {
        return Err(Error::invalid("no sizes given"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sizes must be strictly ascending"));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s < 2) {
        return Err(Error::invalid(format!("size {s} is below the minimum of 2")));
    }

    let mut records = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let start = Instant::now();
        let outcome = solve(spec, s, s, DEFAULT_TOL).and_then(|res| {
            let err_phi = match &reference.eigenfunction_exact {
                Some(f) => Some(match_exact(&res.eigvec, |x, y| f(x, y))?.1),
                None => None,
            };
            Ok((res, err_phi))
        });
        let wall_time_seconds = start.elapsed().as_secs_f64();
        records.push(match outcome {
            Ok((res, err_phi)) => Record {
                n: s,
                m: s,
                r0: Some(res.r0),
                err_r0: reference_r0.as_ref().map(|r| (res.r0 - r.value).abs()),
                err_phi,
                residual: Some(res.residual),
                wall_time_seconds,
                failure: None,
            },
            Err(e) => Record {
                n: s,
                m: s,
                r0: None,
                err_r0: None,
                err_phi: None,
                residual: None,
                wall_time_seconds,
                failure: Some(e.to_string()),
            },
        });
    }

    let fit = |pick: fn(&Record) -> Option<f64>| {
        let points: Vec<(usize, f64, f64)> = records
            .iter()
            .filter_map(|r| Some((r.n, pick(r)?, r.residual?)))
            .collect();
        estimate_order(&points)
    };
    let order_r0 = fit(|r| r.err_r0);
    let order_phi = fit(|r| r.err_phi);
    Ok(ConvergenceReport { model: spec.name.clone(), records, order_r0, order_phi, reference_r0 })
}

/// Least-squares slope of `log10(error)` against `log10(n)`, returned as a
/// positive order. Points are `(n, error, residual)`; those at the plateau
/// (error ≤ 1e-12 or ≤ 10 × residual) are dropped, and fewer than three
/// remaining points give `None`.
pub fn estimate_order(points: &[(usize, f64, f64)]) -> Option<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(n, err, res)| n > 0 && err.is_finite() && err > PLATEAU_FLOOR && err > RESIDUAL_FACTOR * res)
        .map(|&(n, err, _)| ((n as f64).log10(), err.log10()))
        .collect();
    if usable.len() < 3 {
        return None;
    }
    let k = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / k;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    let plain = format!("{v}");
    let sci = format!("{v:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Writes the report as CSV: one header line, one row per record.
pub fn write_csv(report: &ConvergenceReport, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.m,
            opt(r.r0),
            opt(r.err_r0),
            opt(r.err_phi),
            opt(r.residual),
            format_float(r.wall_time_seconds)
        )?;
    }
    out.flush()
}

/// Writes the CSV to `path`; I/O failures carry the path.
pub fn emit_csv(report: &ConvergenceReport, path: &Path) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    write_csv(report, BufWriter::new(file)).map_err(io)
}
