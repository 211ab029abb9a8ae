//! File formats shared by the command-line tool and external consumers.
//!
//! * graph JSON: `{"n": 3, "edges": [[1,2],[2,3]], "potential": [0, 0.5, 0]}`
//! * state JSON: `[[re, im], ...]`, one pair per vertex
//! * trace CSV: header `t,x1,...,xn`, one row per sample time, numbers
//!   written with 17 significant digits

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::IntensityTrace;
use crate::graph::GraphFile;
use crate::retrieval::RetrievalResult;
use crate::spectral::SpectrumReport;

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: Some(e.line() as u64),
        message: e.to_string(),
    }
}

pub fn parse_graph(text: &str) -> Result<GraphFile> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn parse_state(text: &str) -> Result<Vec<Complex64>> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text).map_err(json_error)?;
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("state"));
    }
    Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
}

pub fn state_pairs(state: &[Complex64]) -> Vec<[f64; 2]> {
    state.iter().map(|z| [z.re, z.im]).collect()
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_csv<W: Write>(trace: &IntensityTrace, out: W) -> Result<()> {
    let io_err = |e: csv::Error| Error::InvalidInput(format!("writing trace: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=trace.n()).map(|m| format!("x{m}")));
    w.write_record(&header).map_err(io_err)?;
    for (s, &t) in trace.times().iter().enumerate() {
        let mut row = vec![format_number(t)];
        row.extend(trace.values().row(s).iter().map(|&v| format_number(v)));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("writing trace: {e}")))?;
    Ok(())
}

/// Reads a trace CSV. When `expected_n` is given, the vertex count must match.
pub fn read_trace_csv<R: Read>(input: R, expected_n: Option<usize>) -> Result<IntensityTrace> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: Some(1),
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names.first() != Some(&"t") {
        return Err(Error::Parse {
            line: Some(1),
            message: "first column must be `t`".into(),
        });
    }
    let n = names.len() - 1;
    for (m, name) in names[1..].iter().enumerate() {
        if *name != format!("x{}", m + 1) {
            return Err(Error::Parse {
                line: Some(1),
                message: format!("column {} should be `x{}`, found `{name}`", m + 2, m + 1),
            });
        }
    }
    if let Some(expected) = expected_n {
        if expected != n {
            return Err(Error::DimensionMismatch {
                expected,
                found: n,
                context: "trace columns vs graph vertex count",
            });
        }
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line());
        for (col, field) in record.iter().enumerate() {
            let x: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("column `{}`: `{field}` is not a number", names[col]),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("column `{}`: non-finite value", names[col]),
                });
            }
            if col == 0 {
                times.push(x);
            } else {
                values.push(x);
            }
        }
    }
    let rows = times.len();
    IntensityTrace::new(times, DMatrix::from_row_slice(rows, n, &values))
}

/// Wire form of [`SpectrumReport`]; indices are 1-based. Infinite gaps
/// (single vertex) serialize as `null`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReportJson {
    pub simple: bool,
    pub totally_dissociated: bool,
    pub min_eigenvalue_gap: Option<f64>,
    pub min_difference_gap: Option<f64>,
    pub property_s: bool,
    pub universal_vertices: Vec<usize>,
}

impl From<&SpectrumReport> for SpectrumReportJson {
    fn from(r: &SpectrumReport) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        Self {
            simple: r.simple,
            totally_dissociated: r.totally_dissociated,
            min_eigenvalue_gap: finite(r.min_eigenvalue_gap),
            min_difference_gap: finite(r.min_difference_gap),
            property_s: r.property_s,
            universal_vertices: r.universal_vertices.iter().map(|j| j + 1).collect(),
        }
    }
}

/// Wire form of [`RetrievalResult`]; indices are 1-based.
#[derive(Debug, Clone, Serialize)]
pub struct RetrievalJson {
    pub u0: Vec<[f64; 2]>,
    pub pivot: Option<usize>,
    pub certified: bool,
    pub residual: f64,
    pub condition: f64,
    pub ambiguous_modes: Vec<usize>,
}

impl From<&RetrievalResult> for RetrievalJson {
    fn from(r: &RetrievalResult) -> Self {
        Self {
            u0: state_pairs(&r.u0),
            pivot: r.pivot.map(|p| p + 1),
            certified: r.certified,
            residual: r.diagnostics.residual,
            condition: r.diagnostics.condition,
            ambiguous_modes: r.ambiguous_modes.iter().map(|j| j + 1).collect(),
        }
    }
}
