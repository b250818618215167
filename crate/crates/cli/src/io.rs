//! Data CSV and JSON files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use charcoal::{Matrix, RegressionData};
use serde::Serialize;

use crate::CliError;

/// Reads a CSV whose last column is the response and whose other columns
/// form the design. The header row is required.
pub fn read_data(path: &Path) -> Result<RegressionData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    let width = headers.len();
    if width < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least one design column and a response column",
            path.display()
        )));
    }
    let p = width - 1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |pos| pos.line());
        if record.len() != width {
            return Err(CliError::Data(format!(
                "{}: line {line} has {} fields, expected {width}",
                path.display(),
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                CliError::Data(format!(
                    "{}: line {line}, column {} ({}): cannot parse {field:?} as a number",
                    path.display(),
                    col + 1,
                    &headers[col]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "{}: line {line}, column {}: non-finite value",
                    path.display(),
                    col + 1
                )));
            }
            if col < p {
                x.push(v);
            } else {
                y.push(v);
            }
        }
    }
    let n = y.len();
    let x = Matrix::from_row_major(n, p, x)?;
    Ok(RegressionData::new(x, y)?)
}

/// Writes `x1,...,xp,y` with shortest round-trip number formatting.
pub fn write_data(path: &Path, data: &RegressionData) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let p = data.p();
    let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    let io_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(io_err)?;
    let mut row = Vec::with_capacity(p + 1);
    for i in 0..data.n() {
        row.clear();
        row.extend(data.x.row(i).iter().map(|v| v.to_string()));
        row.push(data.y[i].to_string());
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Pretty JSON to `path`, or stdout.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    match path {
        Some(path) => {
            let mut f = BufWriter::new(
                File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
            );
            writeln!(f, "{text}").map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        }
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Data(e.to_string())),
            _ => Ok(()),
        },
    }
}

/// `t,statistic` rows.
pub fn write_trace(path: &Path, t_lo: usize, trace: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let io_err = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
    w.write_record(["t", "statistic"]).map_err(io_err)?;
    for (j, v) in trace.iter().enumerate() {
        w.write_record([(t_lo + j).to_string(), v.to_string()]).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
