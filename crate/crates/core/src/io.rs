//! CSV ingestion: a header row, one response column named by the caller,
//! the remaining columns are main effects in file order.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    /// Names of the main-effect columns.
    pub names: Vec<String>,
    pub response: String,
}

pub fn read_dataset_path(path: &Path, response: &str) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?, response)
}

pub fn read_dataset<R: Read>(input: R, response: &str) -> Result<Dataset> {
    let (names, rows) = read_table(input)?;
    let col = names
        .iter()
        .position(|n| n == response)
        .ok_or_else(|| Error::data(format!("response column `{response}` not found in header")))?;
    let mains: Vec<String> = names.iter().enumerate().filter(|&(i, _)| i != col).map(|(_, n)| n.clone()).collect();
    let y = rows.iter().map(|r| r[col]).collect();
    let x = DMatrix::from_fn(rows.len(), mains.len(), |i, j| rows[i][if j < col { j } else { j + 1 }]);
    Ok(Dataset { x, y, names: mains, response: response.to_string() })
}

/// All columns as main effects.
pub fn read_matrix<R: Read>(input: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let (names, rows) = read_table(input)?;
    let x = DMatrix::from_fn(rows.len(), names.len(), |i, j| rows[i][j]);
    Ok((names, x))
}

fn read_table<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::data("CSV header is empty"));
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::data(format!("CSV row {}: {e}", line + 2)))?;
        let row = record
            .iter()
            .map(|field| {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::data(format!("CSV row {}: `{field}` is not a number", line + 2)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::data(format!("CSV row {}: non-finite value", line + 2)))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data("CSV has no data rows"));
    }
    Ok((names, rows))
}

/// Writes `x` (and `y` as a last column named `response`, when given).
pub fn write_dataset<W: Write>(out: W, x: &DMatrix<f64>, y: Option<(&str, &[f64])>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
    if let Some((name, _)) = y {
        header.push(name.to_string());
    }
    w.write_record(&header)?;
    for i in 0..x.nrows() {
        let mut rec: Vec<String> = x.row(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some((_, y)) = y {
            rec.push(format!("{:?}", y[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
