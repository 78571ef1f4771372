//! Matrix Market (coordinate, real, general) and plain vector files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::RateMatrix;

pub const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Formats a value with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<RateMatrix> {
    let path = path.as_ref();
    parse_matrix(&read(path)?, path)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<RateMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".to_string()))?;
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens != ["%%matrixmarket", "matrix", "coordinate", "real", "general"] {
        return Err(err(1, format!("expected header \"{MM_HEADER}\"")));
    }

    let mut data = lines.filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (size_line, size) = data
        .next()
        .ok_or_else(|| err(2, "missing size line".to_string()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| err(size_line, format!("bad size line: {e}")))?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(err(
            size_line,
            "size line must be \"rows cols nnz\"".to_string(),
        ));
    };
    if rows != cols {
        return Err(err(
            size_line,
            format!("matrix must be square, got {rows}x{cols}"),
        ));
    }

    let mut triplets = Vec::with_capacity(nnz);
    let mut last_line = size_line;
    for (line, content) in data {
        last_line = line;
        if triplets.len() == nnz {
            return Err(err(
                line,
                format!("entry count mismatch: header declares {nnz} entries, found more"),
            ));
        }
        let mut it = content.split_whitespace();
        let mut index = |name: &str| -> Result<usize> {
            let tok = it
                .next()
                .ok_or_else(|| err(line, format!("missing {name} index")))?;
            let k: usize = tok
                .parse()
                .map_err(|_| err(line, format!("bad {name} index {tok:?}")))?;
            if k == 0 || k > rows {
                return Err(err(line, format!("{name} index {k} outside 1..={rows}")));
            }
            Ok(k - 1)
        };
        let i = index("row")?;
        let j = index("column")?;
        let tok = it
            .next()
            .ok_or_else(|| err(line, "missing value".to_string()))?;
        let value: f64 = tok
            .parse()
            .map_err(|_| err(line, format!("bad value {tok:?}")))?;
        if it.next().is_some() {
            return Err(err(line, "trailing tokens".to_string()));
        }
        triplets.push((i, j, value));
    }
    if triplets.len() != nnz {
        return Err(err(
            last_line,
            format!(
                "entry count mismatch: header declares {nnz} entries, found {}",
                triplets.len()
            ),
        ));
    }
    RateMatrix::from_triplets(rows, triplets)
}

/// Matrix Market text for `q`, entries in storage (column-major) order.
pub fn format_matrix(q: &RateMatrix) -> String {
    let mut out = String::with_capacity(48 * (q.nnz() + 2));
    out.push_str(MM_HEADER);
    out.push('\n');
    out.push_str("% layout: column-major\n");
    let _ = writeln!(out, "{0} {0} {1}", q.dim(), q.nnz());
    for (i, j, v) in q.iter() {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, fmt_real(v));
    }
    out
}

pub fn store_matrix(q: &RateMatrix, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &format_matrix(q))
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = read(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            l.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: k + 1,
                message: format!("bad value {:?}", l.trim()),
            })
        })
        .collect()
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::with_capacity(24 * v.len());
    for x in v {
        out.push_str(&fmt_real(*x));
        out.push('\n');
    }
    out
}

pub fn store_vector(v: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &format_vector(v))
}
