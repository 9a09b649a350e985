//! LMX binary / CSV matrix files and label files.
//!
//! LMX layout: ASCII header `LMX <rows> <cols>\n`, then `rows * cols`
//! little-endian `f64` values in row-major order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const LMX_MAGIC: &str = "LMX";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Binary,
    Csv,
}

impl MatrixFormat {
    /// `.csv` selects CSV, anything else LMX.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::Csv,
            _ => MatrixFormat::Binary,
        }
    }
}

/// Loads a matrix, detecting LMX by its magic header and falling back to CSV.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let m = if bytes.starts_with(LMX_MAGIC.as_bytes()) {
        decode_lmx(&bytes)?
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Format(format!("{} is neither LMX nor UTF-8 CSV", path.display())))?;
        decode_csv(&text)?
    };
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data(format!("{} contains NaN or Inf", path.display())));
    }
    Ok(m)
}

pub fn save_matrix(m: &DMatrix<f64>, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    let path = path.as_ref();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("refusing to save a matrix with NaN or Inf".into()));
    }
    let bytes = match format {
        MatrixFormat::Binary => encode_lmx(m),
        MatrixFormat::Csv => encode_csv(m).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn encode_lmx(m: &DMatrix<f64>) -> Vec<u8> {
    let header = format!("{LMX_MAGIC} {} {}\n", m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(header.len() + 8 * m.len());
    out.extend_from_slice(header.as_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

fn decode_lmx(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("LMX header is not terminated".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::Format("LMX header is not ASCII".into()))?;
    let parts: Vec<&str> = header.split(' ').collect();
    let (rows, cols) = match parts.as_slice() {
        [magic, r, c] if *magic == LMX_MAGIC => (
            r.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad row count in header {header:?}")))?,
            c.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad column count in header {header:?}")))?,
        ),
        _ => return Err(Error::Format(format!("malformed LMX header {header:?}"))),
    };
    let body = &bytes[newline + 1..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("LMX dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Dimension(format!(
            "LMX header declares {rows}x{cols} ({expected} bytes), body has {} bytes",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    Ok(DMatrix::from_row_iterator(rows, cols, values))
}

// `Display` for f64 prints the shortest decimal that parses back to the same
// bits, so CSV round-trips are exact.
fn encode_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", m[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

fn decode_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {}: cannot parse {:?}", lineno + 1, s.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Dimension(format!(
                    "line {} has {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

/// Reads one integer label per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<usize>()
                .map_err(|_| Error::Format(format!("{}:{}: bad label {:?}", path.display(), i + 1, l)))
        })
        .collect()
}

pub fn save_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(out, "{l}").unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
