//! Matrix and label files.
//!
//! On disk, rows are samples and columns are features; in memory the matrix
//! is transposed to `d × n`. Two formats are supported:
//!
//! * CSV, with an optional header (detected when the first record has a
//!   field that does not parse as a number);
//! * raw `f64`: the bytes `SKBM`, then `rows` and `cols` as little-endian
//!   `u64`, then `rows · cols` little-endian `f64` values in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::linalg::RealMatrix;

const RAW_MAGIC: &[u8; 4] = b"SKBM";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    RawF64,
}

impl MatrixFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(Self::Csv),
            "raw" | "raw-f64" | "skbm" => Ok(Self::RawF64),
            other => Err(invalid(format!("unknown matrix format '{other}'"))),
        }
    }

    /// `.skbm` and `.bin` files are raw, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("skbm" | "bin") => Self::RawF64,
            _ => Self::Csv,
        }
    }
}

fn parse_record(rec: &csv::StringRecord) -> Option<Vec<f64>> {
    rec.iter().map(|f| f.trim().parse::<f64>().ok()).collect()
}

fn parse_error(rec: &csv::StringRecord, msg: impl Into<String>) -> Error {
    Error::Parse { line: rec.position().map_or(0, |p| p.line() as usize), msg: msg.into() }
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(r)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { line, msg: format!("{other:?}") },
    }
}

/// Reads CSV rows (samples) into a `d × n` matrix.
pub fn read_csv<R: Read>(r: R) -> Result<RealMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, rec) in csv_reader(r).records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let values = match parse_record(&rec) {
            Some(v) => v,
            None if i == 0 => continue,
            None => return Err(parse_error(&rec, "non-numeric field")),
        };
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(parse_error(&rec, format!("expected {w} fields, found {}", values.len())));
            }
            _ => {}
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(parse_error(&rec, "non-finite value"));
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 1, msg: "no data rows".into() });
    }
    let n = rows.len();
    let d = rows[0].len();
    let data = rows.into_iter().flatten().collect();
    RealMatrix::from_col_major(d, n, data)
}

/// Writes a `d × n` matrix as `n` CSV rows.
pub fn write_csv<W: Write>(w: W, m: &RealMatrix) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().from_writer(w);
    for col in m.columns() {
        wr.write_record(col.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_raw<R: Read>(mut r: R) -> Result<RealMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != RAW_MAGIC {
        return Err(Error::Format("bad magic, expected SKBM".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty matrix {rows}x{cols}")));
    }
    let count = rows.checked_mul(cols).ok_or_else(|| Error::Format("matrix too large".into()))?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    // File rows are samples, so the row-major payload is already the
    // column-major layout of the transposed d × n matrix.
    RealMatrix::from_col_major(cols, rows, values)
}

pub fn write_raw<W: Write>(mut w: W, m: &RealMatrix) -> Result<()> {
    w.write_all(RAW_MAGIC)?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<RealMatrix> {
    let f = BufReader::new(File::open(path)?);
    match format {
        MatrixFormat::Csv => read_csv(f),
        MatrixFormat::RawF64 => read_raw(f),
    }
}

pub fn save_matrix(path: &Path, m: &RealMatrix, format: MatrixFormat) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    match format {
        MatrixFormat::Csv => write_csv(f, m),
        MatrixFormat::RawF64 => write_raw(f, m),
    }
}

/// One nonnegative integer label per record, first field only; a
/// non-numeric first record is treated as a header.
pub fn read_labels<R: Read>(r: R) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, rec) in csv_reader(r).records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        if rec.len() != 1 {
            return Err(parse_error(&rec, format!("expected one label, found {} fields", rec.len())));
        }
        match rec[0].parse::<usize>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(parse_error(&rec, format!("bad label '{}': {e}", &rec[0]))),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse { line: 1, msg: "no labels".into() });
    }
    Ok(out)
}

pub fn write_labels<W: Write>(mut w: W, labels: &[usize]) -> Result<()> {
    for l in labels {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    read_labels(BufReader::new(File::open(path)?))
}

pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    write_labels(BufWriter::new(File::create(path)?), labels)
}
