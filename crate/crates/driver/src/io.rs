//! File formats: particle CSV, cubature formula JSON, diagnostics CSV and
//! run summaries.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use recomb_core::cubature::{BVPath, CubatureError, Segment, WienerCubature};
use recomb_core::recombine::ReductionReport;
use recomb_core::ParticleMeasure;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::StepDiagnostics;

#[derive(Debug, Error)]
pub enum ParticleCsvError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad particle file: {0}")]
    Format(String),
}

/// Reads the particle CSV format: header `x1,...,xN,weight`, one particle
/// per row, strictly positive weights.
pub fn read_particles(path: &Path) -> Result<ParticleMeasure, ParticleCsvError> {
    let mut reader = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let headers = reader.headers()?.clone();
    let n_cols = headers.len();
    if n_cols < 2 || headers.get(n_cols - 1) != Some("weight") {
        return Err(ParticleCsvError::Format(
            "expected header x1,...,xN,weight".into(),
        ));
    }
    for (j, h) in headers.iter().take(n_cols - 1).enumerate() {
        if h != format!("x{}", j + 1) {
            return Err(ParticleCsvError::Format(format!(
                "coordinate column {} is named '{h}', expected 'x{}'",
                j + 1,
                j + 1
            )));
        }
    }
    let dim = n_cols - 1;
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != n_cols {
            return Err(ParticleCsvError::Format(format!(
                "row {} has {} fields, expected {}",
                line + 2,
                record.len(),
                n_cols
            )));
        }
        let parse = |s: &str| -> Result<f64, ParticleCsvError> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| ParticleCsvError::Format(format!("row {}: {e}", line + 2)))
        };
        let mut p = Vec::with_capacity(dim);
        for j in 0..dim {
            let x = parse(&record[j])?;
            if !x.is_finite() {
                return Err(ParticleCsvError::Format(format!(
                    "row {}: non-finite coordinate",
                    line + 2
                )));
            }
            p.push(x);
        }
        let w = parse(&record[dim])?;
        if !(w > 0.0) || !w.is_finite() {
            return Err(ParticleCsvError::Format(format!(
                "row {}: weights must be strictly positive",
                line + 2
            )));
        }
        points.push(p);
        weights.push(w);
    }
    if points.is_empty() {
        return Err(ParticleCsvError::Format("no particles in file".into()));
    }
    Ok(ParticleMeasure::new(points, weights))
}

pub fn write_particles(path: &Path, mu: &ParticleMeasure) -> Result<(), ParticleCsvError> {
    let mut out = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (1..=mu.dim())
        .map(|j| format!("x{j}"))
        .chain(std::iter::once("weight".into()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..mu.len() {
        let mut row: Vec<String> = mu.point(i).iter().map(|x| format!("{x:?}")).collect();
        row.push(format!("{:?}", mu.weight(i)));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// JSON schema of a cubature formula file: `d`, `m`, `weights`, and per
/// path a list of `[duration, [dw1, ..., dwd]]` segments whose durations
/// sum to one.
#[derive(Debug, Serialize, Deserialize)]
pub struct FormulaFile {
    pub d: usize,
    pub m: usize,
    pub weights: Vec<f64>,
    pub paths: Vec<Vec<(f64, Vec<f64>)>>,
}

#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed formula file: {0}")]
    Parse(String),
    #[error("formula fails its declared degree: {0}")]
    DegreeCheckFailed(String),
}

/// Loads and verifies a cubature formula; the declared degree is checked at
/// tolerance `1e-8` (file coefficients are typically decimal-rounded).
pub fn load_formula(path: &Path) -> Result<WienerCubature, FormulaError> {
    let file: FormulaFile = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| FormulaError::Parse(e.to_string()))?;

    if file.paths.len() != file.weights.len() {
        return Err(FormulaError::Parse(
            "paths and weights have different lengths".into(),
        ));
    }
    let mut paths = Vec::with_capacity(file.paths.len());
    for (i, segs) in file.paths.iter().enumerate() {
        if segs.is_empty() {
            return Err(FormulaError::Parse(format!("path {i} has no segments")));
        }
        for (dur, inc) in segs {
            if !(dur > &0.0) || inc.len() != file.d {
                return Err(FormulaError::Parse(format!(
                    "path {i}: segments need positive durations and {}-dimensional increments",
                    file.d
                )));
            }
        }
        let total: f64 = segs.iter().map(|(dur, _)| dur).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(FormulaError::Parse(format!(
                "path {i}: durations sum to {total}, expected 1"
            )));
        }
        paths.push(BVPath::new(
            file.d,
            segs.iter()
                .map(|(duration, increment)| Segment {
                    duration: *duration,
                    increment: increment.clone(),
                })
                .collect(),
        ));
    }

    WienerCubature::new(file.d, file.m, paths, file.weights, 1e-8).map_err(|e| match e {
        CubatureError::DegreeCheckFailed(check) => FormulaError::DegreeCheckFailed(format!(
            "max deviation {:e} at word {:?} (tol {:e})",
            check.max_abs_deviation, check.worst_word, check.tol
        )),
        other => FormulaError::Parse(other.to_string()),
    })
}

pub fn write_formula(path: &Path, formula: &WienerCubature) -> Result<(), FormulaError> {
    let file = FormulaFile {
        d: formula.driving_dim(),
        m: formula.degree(),
        weights: formula.weights().to_vec(),
        paths: formula
            .paths()
            .iter()
            .map(|p| {
                p.segments()
                    .iter()
                    .map(|s| (s.duration, s.increment.clone()))
                    .collect()
            })
            .collect(),
    };
    let out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(out, &file).map_err(|e| FormulaError::Parse(e.to_string()))?;
    Ok(())
}

/// Serializable mirror of [`ReductionReport`].
#[derive(Debug, Serialize, Deserialize)]
pub struct ReductionReportJson {
    pub input_support: usize,
    pub output_support: usize,
    pub procedure_a_calls: usize,
    pub elimination_steps: usize,
    pub max_moment_error: f64,
}

impl From<&ReductionReport> for ReductionReportJson {
    fn from(r: &ReductionReport) -> Self {
        ReductionReportJson {
            input_support: r.input_support,
            output_support: r.output_support,
            procedure_a_calls: r.procedure_a_calls,
            elimination_steps: r.elimination_steps,
            max_moment_error: r.max_moment_error,
        }
    }
}

/// Writes the per-step diagnostics CSV
/// (`step,s_j,u_j,particles_before,particles_after,patches,wall_ms`).
pub fn write_diagnostics_csv<W: Write>(
    mut out: W,
    rows: &[StepDiagnostics],
) -> std::io::Result<()> {
    writeln!(
        out,
        "step,s_j,u_j,particles_before,particles_after,patches,wall_ms"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.step,
            r.s_j,
            r.u_j.map_or(String::new(), |u| format!("{u}")),
            r.particles_before,
            r.particles_after,
            r.patches,
            r.wall_ms
        )?;
    }
    Ok(())
}

/// JSON summary of a pipeline run.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: String,
    pub payoff: String,
    pub k: usize,
    pub estimate: f64,
    pub ode_solves: u64,
    pub max_particles: usize,
    pub total_wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
}
