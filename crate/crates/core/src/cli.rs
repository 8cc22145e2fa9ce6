//! Command-line front end.
//!
//! Exit codes: 0 success, 2 bad arguments or unusable output path, 3 unknown
//! model or failed validation, 4 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::age_immunity;
use crate::eigen::DEFAULT_TOL;
use crate::error::{Error, Result};
use crate::harness::{self, format_float};
use crate::model::{builtin, BUILTIN_MODELS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MODEL: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bicolloc", version, about = "R0 of two-structure epidemic models by bivariate collocation")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute R0 on one grid.
    Compute {
        #[arg(long)]
        model: String,
        /// Polynomial degree in x.
        #[arg(long)]
        n: usize,
        /// Polynomial degree in y.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Sweep n = m over a range and report errors against the reference.
    Converge {
        #[arg(long)]
        model: String,
        /// `start:stop:step`, stop inclusive.
        #[arg(long, default_value = "4:40:4", value_parser = parse_sizes)]
        sizes: SizeRange,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in models with their reference R0.
    ListModels,
    /// Export the disease-free susceptible density on a uniform grid.
    Dfe {
        #[arg(long)]
        model: String,
        /// `RxC`: R ages by C immunity levels.
        #[arg(long, value_parser = parse_grid)]
        grid: (usize, usize),
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeRange {
    pub start: usize,
    pub stop: usize,
    pub step: usize,
}

impl SizeRange {
    pub fn sizes(&self) -> Vec<usize> {
        (self.start..=self.stop).step_by(self.step).collect()
    }
}

pub fn parse_sizes(s: &str) -> std::result::Result<SizeRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(format!("expected start:stop:step, got `{s}`"));
    };
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let range = SizeRange { start: num(a)?, stop: num(b)?, step: num(c)? };
    if range.step == 0 {
        return Err("step must be positive".into());
    }
    if range.start < 2 {
        return Err("sizes start at 2 or more".into());
    }
    if range.start > range.stop {
        return Err("empty size range".into());
    }
    Ok(range)
}

pub fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected RxC, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    let (r, c) = (num(r)?, num(c)?);
    if r < 2 || c < 2 {
        return Err("grid needs at least 2 points per axis".into());
    }
    Ok((r, c))
}

/// Exit code for a pipeline error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) | Error::Io { .. } => EXIT_USAGE,
        Error::UnknownModel(_) | Error::Validation(_) | Error::NonFinite { .. } => EXIT_MODEL,
        e if e.is_numerical() => EXIT_NUMERIC,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Like [`main`] with explicit output and diagnostic streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, diag: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(diag, "{}", text.ansi());
            }
            return code;
        }
    };
    match execute(config.command, out, diag) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(diag, "error: {e}");
            exit_code(&e)
        }
    }
}

#[derive(Serialize)]
struct ComputeOutput<'a> {
    model: &'a str,
    n: usize,
    m: usize,
    r0: f64,
    residual: f64,
    iterations: usize,
}

fn stdout_err(e: io::Error) -> Error {
    Error::Io { path: PathBuf::from("<stdout>"), source: e }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn execute(command: Command, out: &mut dyn Write, diag: &mut dyn Write) -> Result<()> {
    match command {
        Command::Compute { model, n, m, tol, format } => {
            if n < 1 || m < 1 {
                return Err(Error::invalid("n and m must be at least 1"));
            }
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::invalid("tol must be positive"));
            }
            let (spec, _) = builtin(&model)?;
            let res = harness::solve(&spec, n, m, tol)?;
            if !res.converged {
                let _ = writeln!(diag, "warning: tolerance {tol:e} not reached, residual {:e}", res.residual);
            }
            let row = ComputeOutput { model: &model, n, m, r0: res.r0, residual: res.residual, iterations: res.iterations };
            match format {
                Format::Json => {
                    let text = serde_json::to_string(&row).expect("plain struct serializes");
                    writeln!(out, "{text}").map_err(stdout_err)?;
                }
                Format::Csv => {
                    writeln!(out, "model,n,m,r0,residual,iterations").map_err(stdout_err)?;
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        row.model,
                        row.n,
                        row.m,
                        format_float(row.r0),
                        format_float(row.residual),
                        row.iterations
                    )
                    .map_err(stdout_err)?;
                }
            }
            Ok(())
        }
        Command::Converge { model, sizes, out: path } => {
            let sizes = sizes.sizes();
            // Fail on an unusable path before spending time on the sweep.
            let file = path.as_deref().map(create).transpose()?;
            let report = harness::run_convergence(&model, &sizes)?;
            for r in &report.records {
                if let Some(f) = &r.failure {
                    let _ = writeln!(diag, "warning: n = m = {}: {f}", r.n);
                }
            }
            match (file, path) {
                (Some(f), Some(p)) => harness::write_csv(&report, f).map_err(|source| Error::Io { path: p, source }),
                _ => harness::write_csv(&report, out).map_err(stdout_err),
            }
        }
        Command::ListModels => {
            writeln!(out, "name\treference_r0\tnote\tdescription").map_err(stdout_err)?;
            for (name, description) in BUILTIN_MODELS {
                let (_, reference) = builtin(name)?;
                let value = reference.r0_exact.map(format_float).unwrap_or_default();
                writeln!(out, "{name}\t{value}\t{}\t{description}", reference.r0_reference_note).map_err(stdout_err)?;
            }
            Ok(())
        }
        Command::Dfe { model, grid: (rows, cols), out: path } => {
            let spec = age_immunity::builtin_spec(&model)?;
            let mut file = create(&path)?;
            let profile = age_immunity::dfe(&spec)?;
            let io = |source| Error::Io { path: path.clone(), source };
            writeln!(file, "a,w,s_bar").map_err(io)?;
            for i in 0..rows {
                let a = spec.a_max * i as f64 / (rows - 1) as f64;
                for j in 0..cols {
                    let w = j as f64 / (cols - 1) as f64;
                    let s = profile.s_bar(a, w);
                    if !s.is_finite() {
                        return Err(Error::NonFinite { what: "s_bar", location: format!("(a, w) = ({a}, {w})") });
                    }
                    writeln!(file, "{},{},{}", format_float(a), format_float(w), format_float(s)).map_err(io)?;
                }
            }
            file.flush().map_err(io)
        }
    }
}
