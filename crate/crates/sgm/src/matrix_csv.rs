//! Plain numeric CSV, one sample per row, no header.

use std::io::{Read, Write};
use std::path::Path;

use sgm_core::Matrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CsvError {
    #[error("empty input")]
    Empty,
    #[error("row {row}: expected {expected} values, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {col}: cannot parse '{text}' as a number")]
    Parse { row: usize, col: usize, text: String },
    #[error("row {row}, column {col}: non-finite value")]
    NonFinite { row: usize, col: usize },
    #[error("{0}")]
    Csv(String),
}

/// Rows and columns are 1-based in errors.
pub fn parse_matrix<R: Read>(input: R) -> std::result::Result<Matrix, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CsvError::Csv(e.to_string()))?;
        rows += 1;
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CsvError::Ragged { row: rows, expected, found: record.len() });
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| CsvError::Parse {
                row: rows,
                col: c + 1,
                text: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(CsvError::NonFinite { row: rows, col: c + 1 });
            }
            data.push(v);
        }
    }
    match cols {
        None | Some(0) => Err(CsvError::Empty),
        Some(cols) => Ok(Matrix::from_row_major(rows, cols, data).expect("values were checked")),
    }
}

/// 17 significant digits, enough to round-trip every `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_to<W: Write>(out: W, m: &Matrix) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(|&v| format_f64(v)))?;
    }
    w.flush()
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(std::io::BufReader::new(file)).map_err(|e| Error::csv(path, e))
}

pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix_to(std::io::BufWriter::new(file), m).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_errors() {
        let m = parse_matrix("1, 2\n3,4.5\n".as_bytes()).unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.5]]).unwrap());
        assert_eq!(parse_matrix("".as_bytes()), Err(CsvError::Empty));
        assert_eq!(
            parse_matrix("1,2\n3\n".as_bytes()),
            Err(CsvError::Ragged { row: 2, expected: 2, found: 1 })
        );
        assert!(matches!(
            parse_matrix("1,x\n".as_bytes()),
            Err(CsvError::Parse { row: 1, col: 2, .. })
        ));
        assert!(matches!(parse_matrix("1,NaN\n".as_bytes()), Err(CsvError::NonFinite { .. })));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = Matrix::from_rows(&[[0.1, -1e-300, 1.0 / 3.0], [2e300, 5e-324, -0.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, &m).unwrap();
        let back = parse_matrix(buf.as_slice()).unwrap();
        assert_eq!(back.as_slice(), m.as_slice());
    }
}
