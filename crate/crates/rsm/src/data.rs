//! CSV ingestion of experimental runs and CSV output of point tables.
//!
//! Input files carry a header `x1,…,xn,y1,…,yr` followed by one run per line.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rsm_core::montecarlo::SimulationResult;
use rsm_core::Matrix;

use crate::error::{CliError, CliResult};

/// Factor settings and observed responses of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub responses: Matrix,
}

impl Dataset {
    pub fn factors(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn runs(&self) -> usize {
        self.points.len()
    }
}

fn indexed(name: &str, prefix: char) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    if rest.starts_with('0') {
        return None;
    }
    rest.parse().ok()
}

/// Splits a header into `(n, r)`, insisting on `x1..xn` then `y1..yr`.
fn parse_header(header: &csv::StringRecord) -> CliResult<(usize, usize)> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let n = names.iter().take_while(|h| h.starts_with('x')).count();
    let r = names.len() - n;
    if n == 0 || r == 0 {
        return Err(CliError::input(format!(
            "line 1: header must list factor columns x1..xn followed by response columns y1..yr, got '{}'",
            names.join(",")
        )));
    }
    for (i, name) in names.iter().enumerate() {
        let (prefix, expected) = if i < n {
            ('x', i + 1)
        } else {
            ('y', i - n + 1)
        };
        if indexed(name, prefix) != Some(expected) {
            return Err(CliError::input(format!(
                "line 1, column {}: expected header '{prefix}{expected}', found '{name}'",
                i + 1
            )));
        }
    }
    Ok((n, r))
}

pub fn parse_dataset(reader: impl Read) -> CliResult<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::input(format!("line 1: {e}")))?
        .clone();
    let (n, r) = parse_header(&header)?;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::input(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n + r {
            return Err(CliError::input(format!(
                "line {line}: expected {} fields, found {}",
                n + r,
                record.len()
            )));
        }
        let mut row = Vec::with_capacity(n + r);
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| {
                    CliError::input(format!(
                        "line {line}, column {}: cannot parse '{cell}' as a finite number",
                        header[col].trim()
                    ))
                })?;
            row.push(v);
        }
        values.extend_from_slice(&row[n..]);
        row.truncate(n);
        points.push(row);
    }
    if points.is_empty() {
        return Err(CliError::input("no data rows after the header"));
    }
    let responses = Matrix::from_row_slice(points.len(), r, &values);
    Ok(Dataset { points, responses })
}

pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(file).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::input(format!("writing CSV: {e}"))
}

fn number(v: f64) -> String {
    crate::report::format_f64(v)
}

/// Writes design points under a header `x1..xn`.
pub fn write_points(points: &[Vec<f64>], out: impl Write) -> CliResult<()> {
    let n = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=n).map(|i| format!("x{i}")))
        .map_err(csv_error)?;
    for p in points {
        w.write_record(p.iter().map(|&v| number(v)))
            .map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| CliError::input(format!("writing CSV: {e}")))
}

/// One row per successful replicate: its index, the simulated optimum and
/// the plug-in standard errors.
pub fn write_samples(result: &SimulationResult, out: impl Write) -> CliResult<()> {
    let n = result.x_star_truth.len();
    let mut w = csv::Writer::from_writer(out);
    let header = std::iter::once("replicate".to_string())
        .chain((1..=n).map(|i| format!("x{i}")))
        .chain((1..=n).map(|i| format!("se{i}")));
    w.write_record(header).map_err(csv_error)?;
    let failed: std::collections::HashSet<usize> =
        result.failures.iter().map(|f| f.index).collect();
    let indices = (0..result.replicates).filter(|i| !failed.contains(i));
    for (row, index) in indices.enumerate() {
        let fields = std::iter::once(index.to_string())
            .chain((0..n).map(|j| number(result.samples[(row, j)])))
            .chain((0..n).map(|j| number(result.plugin_sd[(row, j)])));
        w.write_record(fields).map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| CliError::input(format!("writing CSV: {e}")))
}
