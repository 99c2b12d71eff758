//! CSV ingestion and output. Comma separated, header row required.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use stable_varma::model::SamplePath;

use crate::error::{CliError, CliResult};

/// Reads a numeric CSV with a header row into an `n × m` sample path.
pub fn read_csv(path: &Path) -> CliResult<SamplePath> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv_from(file, &path.display().to_string())
}

pub fn read_csv_from<R: std::io::Read>(reader: R, label: &str) -> CliResult<SamplePath> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{label}: cannot read header: {e}")))?
        .clone();
    let m = headers.len();
    if m == 0 || headers.iter().all(str::is_empty) {
        return Err(CliError::Data(format!("{label}: missing header row")));
    }
    if headers.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(CliError::Data(format!("{label}: line 1: expected a header row, found numbers")));
    }
    let mut values = Vec::new();
    let mut n = 0;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Data(format!("{label}: line {line}: {e}"))
        })?;
        let line = record.position().map_or(n + 2, |p| p.line() as usize);
        for (col, field) in record.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| {
                CliError::Data(format!("{label}: line {line}, column {}: cannot parse '{field}' as a number", col + 1))
            })?;
            if !x.is_finite() {
                return Err(CliError::Data(format!("{label}: line {line}, column {}: non-finite value", col + 1)));
            }
            values.push(x);
        }
        n += 1;
    }
    let matrix = DMatrix::from_row_slice(n, m, &values);
    Ok(SamplePath::new(matrix)?)
}

pub fn column_header(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("c{j}")).collect()
}

/// Writes rows under the given header, creating or truncating `path`.
pub fn write_rows(path: &Path, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut out = Vec::new();
    {
        let mut wtr = csv::Writer::from_writer(&mut out);
        let fail = |e: csv::Error| CliError::Data(format!("{}: {e}", path.display()));
        wtr.write_record(header).map_err(fail)?;
        for row in rows {
            wtr.write_record(row.iter().map(|x| x.to_string())).map_err(fail)?;
        }
        wtr.flush().map_err(|e| CliError::io(path, e))?;
    }
    let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(&out).map_err(|e| CliError::io(path, e))
}

pub fn write_sample(path: &Path, data: &SamplePath) -> CliResult<()> {
    let rows: Vec<Vec<f64>> = data.values().row_iter().map(|r| r.iter().copied().collect()).collect();
    write_rows(path, &column_header(data.m()), &rows)
}
