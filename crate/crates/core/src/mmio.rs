//! Matrix Market reading and writing, plus plain vector files.
//!
//! Supported headers: `matrix coordinate {real|integer|pattern} {general|symmetric}`
//! and `matrix array {real|integer} {general|symmetric}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{PcpError, Result};
use crate::operator::{CsrMatrix, RectOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

fn perr(line: usize, msg: impl Into<String>) -> PcpError {
    PcpError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses Matrix Market text into a CSR matrix.
pub fn parse_matrix_market(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(perr(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(perr(1, format!("unsupported format '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(perr(1, format!("unsupported field '{other}'"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(perr(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| perr(1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| perr(size_line, format!("bad size entry '{t}'"))))
        .collect::<Result<_>>()?;

    let number = |line: usize, tok: &str| -> Result<f64> {
        let v: f64 = match field {
            Field::Integer => tok
                .parse::<i64>()
                .map(|v| v as f64)
                .map_err(|_| perr(line, format!("bad integer '{tok}'")))?,
            _ => tok.parse().map_err(|_| perr(line, format!("bad number '{tok}'")))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(perr(line, format!("non-finite value '{tok}'")))
        }
    };

    let mut triplets = Vec::new();
    let (nrows, ncols) = match layout {
        Layout::Coordinate => {
            let [nrows, ncols, nnz] = dims[..] else {
                return Err(perr(size_line, "coordinate size line needs 'rows cols nnz'"));
            };
            let mut seen = 0usize;
            for (line, l) in body {
                let toks: Vec<&str> = l.split_whitespace().collect();
                let want = if field == Field::Pattern { 2 } else { 3 };
                if toks.len() != want {
                    return Err(perr(line, format!("expected {want} fields, found {}", toks.len())));
                }
                let index = |t: &str, bound: usize| -> Result<usize> {
                    let i: usize = t.parse().map_err(|_| perr(line, format!("bad index '{t}'")))?;
                    if i == 0 || i > bound {
                        return Err(perr(line, format!("index {i} outside 1..={bound}")));
                    }
                    Ok(i - 1)
                };
                let (i, j) = (index(toks[0], nrows)?, index(toks[1], ncols)?);
                let v = if field == Field::Pattern { 1.0 } else { number(line, toks[2])? };
                triplets.push((i, j, v));
                if symmetric && i != j {
                    triplets.push((j, i, v));
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(perr(size_line, format!("declared {nnz} entries, found {seen}")));
            }
            (nrows, ncols)
        }
        Layout::Array => {
            let [nrows, ncols] = dims[..] else {
                return Err(perr(size_line, "array size line needs 'rows cols'"));
            };
            if symmetric && nrows != ncols {
                return Err(perr(size_line, "symmetric array must be square"));
            }
            // column-major; symmetric stores the lower triangle only
            let positions: Vec<(usize, usize)> = (0..ncols)
                .flat_map(|j| {
                    let start = if symmetric { j } else { 0 };
                    (start..nrows).map(move |i| (i, j))
                })
                .collect();
            let mut values = Vec::with_capacity(positions.len());
            let mut last_line = size_line;
            for (line, l) in body {
                for tok in l.split_whitespace() {
                    values.push(number(line, tok)?);
                }
                last_line = line;
            }
            if values.len() != positions.len() {
                return Err(perr(
                    last_line,
                    format!("expected {} values, found {}", positions.len(), values.len()),
                ));
            }
            for (&(i, j), &v) in positions.iter().zip(&values) {
                if v != 0.0 {
                    triplets.push((i, j, v));
                    if symmetric && i != j {
                        triplets.push((j, i, v));
                    }
                }
            }
            (nrows, ncols)
        }
    };
    Ok(CsrMatrix::from_triplets(nrows, ncols, &triplets))
}

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

/// Writes `matrix coordinate real general` with 17 significant digits.
pub fn write_matrix_market(path: &Path, m: &CsrMatrix) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (i, j, v) in m.triplets() {
        writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a vector: either a Matrix Market `d × 1` matrix or one number per line
/// (blank lines and `#` comments ignored).
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        let m = parse_matrix_market(&text)?;
        if m.ncols() != 1 {
            return Err(perr(1, format!("vector file has {} columns", m.ncols())));
        }
        let mut v = vec![0.0; m.nrows()];
        for (i, _, x) in m.triplets() {
            v[i] += x;
        }
        return Ok(v);
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| {
            let t = l.trim().trim_end_matches(',');
            match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(perr(i + 1, format!("bad vector entry '{t}'"))),
            }
        })
        .collect()
}

/// Writes one value per line with 17 significant digits.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for x in v {
        writeln!(out, "{x:.16e}")?;
    }
    out.flush()?;
    Ok(())
}
