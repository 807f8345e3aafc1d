//! CSV ingestion and the plain-text output formats.

use std::io::{Read, Write};

use ndarray::Array2;
use surecov::{Dataset, SymMatrix};

use crate::error::{CliError, Result};

/// Reads an n × p numeric matrix, one observation per row. A first row
/// containing any non-numeric cell is treated as a header.
pub fn read_matrix<R: Read>(reader: R, source: &str) -> Result<Array2<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{source}: {e}")))?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: Vec<_> = record.iter().map(str::parse::<f64>).collect();
        if idx == 0 && parsed.iter().any(|v| v.is_err()) {
            continue;
        }
        let p = *width.get_or_insert(record.len());
        if record.len() != p {
            return Err(CliError::Data(format!(
                "{source}: line {line}: expected {p} fields, found {}",
                record.len()
            )));
        }
        for (col, (cell, value)) in record.iter().zip(parsed).enumerate() {
            let value = value.map_err(|_| {
                CliError::Data(format!("{source}: line {line}, column {}: cannot parse {cell:?} as a number", col + 1))
            })?;
            if !value.is_finite() {
                return Err(CliError::Data(format!("{source}: line {line}, column {}: non-finite value", col + 1)));
            }
            values.push(value);
        }
        rows += 1;
    }
    let p = width.ok_or_else(|| CliError::Data(format!("{source}: no data rows")))?;
    Ok(Array2::from_shape_vec((rows, p), values).expect("row widths checked"))
}

pub fn read_dataset<R: Read>(reader: R, source: &str) -> Result<Dataset> {
    let rows = read_matrix(reader, source)?;
    if rows.nrows() < 4 {
        return Err(CliError::Data(format!(
            "{source}: sample size n = {} is too small (need n >= 4)",
            rows.nrows()
        )));
    }
    Dataset::from_rows(rows).map_err(|e| CliError::Data(format!("{source}: {e}")))
}

/// Header `x1,...,xp` then one row per observation.
pub fn write_dataset<W: Write>(out: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let p = data.p();
    w.write_record((1..=p).map(|j| format!("x{j}"))).map_err(csv_err)?;
    for row in data.rows().rows() {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io("write failed", e))
}

/// All p × p entries, no header.
pub fn write_dense<W: Write>(out: W, m: &SymMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in m.as_array().rows() {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io("write failed", e))
}

/// `i,j,value` for `j >= i` and `j - i < band`, 1-based.
pub fn write_band<W: Write>(out: W, m: &SymMatrix, band: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "value"]).map_err(csv_err)?;
    let p = m.dim();
    for i in 0..p {
        for j in i..(i + band).min(p) {
            w.write_record([(i + 1).to_string(), (j + 1).to_string(), fmt_f64(m.get(i, j))]).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| CliError::io("write failed", e))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::io("write failed", e.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_detected_and_skipped() {
        let m = read_matrix("a,b\n1,2\n3,4.5\n".as_bytes(), "t").unwrap();
        assert_eq!(m, ndarray::array![[1.0, 2.0], [3.0, 4.5]]);
        let m = read_matrix("1,2\n3,4\n".as_bytes(), "t").unwrap();
        assert_eq!(m.nrows(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = read_matrix("x,y\n1,2\n3\n".as_bytes(), "d.csv").unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("expected 2 fields"), "{err}");
        let err = read_matrix("1,2\n3,abc\n".as_bytes(), "d.csv").unwrap_err().to_string();
        assert!(err.contains("line 2, column 2") && err.contains("abc"), "{err}");
        assert!(read_matrix("".as_bytes(), "e").is_err());
    }

    #[test]
    fn small_samples_rejected() {
        let err = read_dataset("1,2\n3,4\n5,6\n".as_bytes(), "t").unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e21, 123456789.123456789, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }

    #[test]
    fn band_triplets_cover_upper_band() {
        let m = SymMatrix::from_fn(3, |i, j| (i * 3 + j) as f64);
        let mut out = Vec::new();
        write_band(&mut out, &m, 2).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "i,j,value\n1,1,0\n1,2,1\n2,2,4\n2,3,5\n3,3,8\n");
    }
}
