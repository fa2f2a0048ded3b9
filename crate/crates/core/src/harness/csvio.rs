//! Matrix and coordinate CSV files.
//!
//! Matrices carry a header row of column names and one numeric row per
//! observation. Missing cells hold the literal token `NA`. Values are written
//! with Rust's shortest round-trip formatting, so write followed by read
//! reproduces every finite double bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mask::ObservationMask;
use crate::matrix::DenseMatrix;
use crate::spatial::Coordinates;

pub const MISSING_TOKEN: &str = "NA";

/// A matrix read from disk. Missing cells are stored as `0.0` in `values`
/// and flagged unobserved in `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    pub values: DenseMatrix,
    pub mask: ObservationMask,
}

fn parse_error(line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => parse_error(
            line,
            0,
            format!("expected {expected_len} fields, found {len}"),
        ),
        kind => parse_error(line, 0, format!("{kind:?}")),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Reads a matrix, accepting `NA` for missing cells.
pub fn read_matrix<R: Read>(input: R) -> Result<MaskedMatrix> {
    let mut rdr = reader(input);
    let names: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(String::from).collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(parse_error(1, 0, "missing header row"));
    }
    let p = names.len();
    let mut values = Vec::new();
    let mut observed = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |pos| pos.line());
        for (j, cell) in record.iter().enumerate() {
            if cell == MISSING_TOKEN {
                values.push(0.0);
                observed.push(false);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(line, j + 1, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(line, j + 1, format!("non-finite value {cell:?}")));
            }
            values.push(v);
            observed.push(true);
        }
    }
    if values.is_empty() {
        return Err(Error::invalid("matrix file has a header but no data rows"));
    }
    let n = values.len() / p;
    let matrix = DenseMatrix::from_row_major(n, p, values)?.with_col_names(names)?;
    let mask = ObservationMask::from_fn(n, p, |i, j| observed[i * p + j]);
    Ok(MaskedMatrix {
        values: matrix,
        mask,
    })
}

/// Reads a file that must have no missing cells.
pub fn read_complete_matrix<R: Read>(input: R) -> Result<DenseMatrix> {
    let m = read_matrix(input)?;
    if let Some((i, j)) = m.mask.complement().pairs().first() {
        return Err(parse_error(
            *i as u64 + 2,
            j + 1,
            format!("missing value in column {:?}", m.values.col_name(*j)),
        ));
    }
    Ok(m.values)
}

/// Shortest decimal that parses back to `v` exactly; exponent form outside
/// the range where plain digits stay short.
pub fn format_value(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Writes `m` with `NA` wherever `mask` (if given) marks a cell unobserved.
pub fn write_matrix<W: Write>(out: W, m: &DenseMatrix, mask: Option<&ObservationMask>) -> Result<()> {
    if let Some(mask) = mask {
        mask.check_shape(m.rows(), m.cols())?;
    }
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(m.labels()).map_err(csv_error)?;
    for i in 0..m.rows() {
        let row = (0..m.cols()).map(|j| match mask {
            Some(mask) if !mask.is_observed(i, j) => MISSING_TOKEN.to_string(),
            _ => format_value(m.get(i, j)),
        });
        wtr.write_record(row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a coordinates file with columns `s1,s2` (extra columns ignored).
pub fn read_coordinates<R: Read>(input: R) -> Result<Coordinates> {
    let m = read_complete_matrix(input)?;
    let find = |name: &str| {
        m.col_names()
            .and_then(|names| names.iter().position(|n| n == name))
            .ok_or_else(|| Error::invalid(format!("coordinates file has no {name:?} column")))
    };
    let (a, b) = (find("s1")?, find("s2")?);
    Coordinates::new((0..m.rows()).map(|i| [m.get(i, a), m.get(i, b)]).collect())
}

pub fn write_coordinates<W: Write>(out: W, coords: &Coordinates) -> Result<()> {
    let values = coords.points().iter().flat_map(|p| [p[0], p[1]]).collect();
    let m = DenseMatrix::from_row_major(coords.len(), 2, values)?
        .with_col_names(vec!["s1".into(), "s2".into()])?;
    write_matrix(out, &m, None)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| {
        Error::invalid(format!("cannot open {}: {e}", path.display()))
    })
}

pub fn read_matrix_file(path: &Path) -> Result<MaskedMatrix> {
    read_matrix(open(path)?)
}

pub fn read_complete_matrix_file(path: &Path) -> Result<DenseMatrix> {
    read_complete_matrix(open(path)?)
}

pub fn read_coordinates_file(path: &Path) -> Result<Coordinates> {
    read_coordinates(open(path)?)
}

pub fn write_matrix_file(path: &Path, m: &DenseMatrix, mask: Option<&ObservationMask>) -> Result<()> {
    write_matrix(File::create(path)?, m, mask)
}

pub fn write_coordinates_file(path: &Path, coords: &Coordinates) -> Result<()> {
    write_coordinates(File::create(path)?, coords)
}
