//! Plain CSV helpers for matrices and metric values.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{IcrlError, Result};

/// Decimal rendering with 17 significant digits (round-trips any `f64`).
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Writes an `S x A` matrix, one state per row, no header.
pub fn write_matrix<W: Write>(out: W, m: &Array2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.rows() {
        w.write_record(row.iter().map(|&x| fmt17(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn matrix_to_string(m: &Array2<f64>) -> String {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn read_matrix<R: Read>(input: R) -> Result<Array2<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| IcrlError::InvalidArgument(format!("bad number {f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(IcrlError::Shape("ragged matrix csv".into()));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat).map_err(|e| IcrlError::Shape(e.to_string()))
}
