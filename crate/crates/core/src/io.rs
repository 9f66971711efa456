//! Plain-text formats: headerless CSV matrices and vectors, and per-iteration
//! trace CSV files.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::sgep::symmetrize;
use crate::trace::{IterationRecord, SolverTrace};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Read a dense matrix: one row per line, comma-separated floats, no header.
/// Blank lines are skipped.
pub fn read_matrix(path: &Path) -> Result<Array2<f64>, IoError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                field
                    .parse::<f64>()
                    .map_err(|_| {
                        parse_err(path, lineno, format!("cannot parse {field:?} as a number"))
                    })
                    .and_then(|v| {
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(parse_err(
                                path,
                                lineno,
                                format!("non-finite value {field:?}"),
                            ))
                        }
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("row has {} fields, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let ncols = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(Array2::from_shape_vec((rows.len(), ncols), flat).expect("rows have equal length"))
}

/// [`read_matrix`] followed by `(M + M^T) / 2`. The matrix must be square.
pub fn read_symmetric_matrix(path: &Path) -> Result<Array2<f64>, IoError> {
    let mut m = read_matrix(path)?;
    if m.nrows() != m.ncols() {
        return Err(parse_err(
            path,
            m.nrows(),
            format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    symmetrize(&mut m);
    Ok(m)
}

/// Read a vector stored either as one column or as one row.
pub fn read_vector(path: &Path) -> Result<Array1<f64>, IoError> {
    let m = read_matrix(path)?;
    if m.ncols() == 1 {
        Ok(m.column(0).to_owned())
    } else if m.nrows() == 1 {
        Ok(m.row(0).to_owned())
    } else {
        Err(parse_err(
            path,
            1,
            format!(
                "expected a single row or column, got {}x{}",
                m.nrows(),
                m.ncols()
            ),
        ))
    }
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<(), IoError> {
    let mut out = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Write a vector as a single column.
pub fn write_vector(path: &Path, v: &Array1<f64>) -> Result<(), IoError> {
    let mut out = String::new();
    for x in v {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

pub const TRACE_HEADER: [&str; 7] = [
    "k",
    "F",
    "alpha",
    "step_norm",
    "err_to_final",
    "denominator",
    "backtracks",
];

/// One row of a trace file.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub k: usize,
    #[serde(rename = "F")]
    pub objective: f64,
    pub alpha: f64,
    pub step_norm: f64,
    /// Empty when the trace was recorded without iterates.
    pub err_to_final: Option<f64>,
    pub denominator: f64,
    pub backtracks: usize,
}

/// Trace rows, starting with `k = 0` for the initial point.
pub fn trace_rows(trace: &SolverTrace) -> Vec<TraceRow> {
    let errors = trace.errors_to_final();
    let err = |k: usize| errors.as_ref().map(|e| e[k]);
    let mut rows = vec![TraceRow {
        k: 0,
        objective: trace.initial_objective,
        alpha: 0.0,
        step_norm: 0.0,
        err_to_final: err(0),
        denominator: f64::NAN,
        backtracks: 0,
    }];
    rows.extend(trace.records.iter().map(|r| TraceRow {
        k: r.k,
        objective: r.objective,
        alpha: r.alpha,
        step_norm: r.step_norm,
        err_to_final: err(r.k),
        denominator: r.denominator,
        backtracks: r.backtracks,
    }));
    rows
}

pub fn write_trace<W: Write>(out: W, trace: &SolverTrace) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace_rows(trace) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &SolverTrace) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    write_trace(file, trace).map_err(|e| parse_err(path, 0, e.to_string()))
}

/// Read a trace file written by [`write_trace`].
pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, IoError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize::<TraceRow>().enumerate() {
        // line 1 is the header
        rows.push(row.map_err(|e| parse_err(path, i + 2, e.to_string()))?);
    }
    if rows.first().map(|r| r.k) != Some(0) {
        return Err(parse_err(path, 2, "trace must start with the k = 0 row"));
    }
    Ok(rows)
}

/// Split trace rows into the initial objective and the iteration records.
pub fn rows_to_records(rows: &[TraceRow]) -> (f64, Vec<IterationRecord>) {
    let initial = rows.first().map(|r| r.objective).unwrap_or(f64::NAN);
    let records = rows
        .iter()
        .skip(1)
        .map(|r| IterationRecord {
            k: r.k,
            objective: r.objective,
            alpha: r.alpha,
            step_norm: r.step_norm,
            denominator: r.denominator,
            backtracks: r.backtracks,
        })
        .collect();
    (initial, records)
}
