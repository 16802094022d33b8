//! Plain-text matrix formats.
//!
//! - Dense: a header line `n1 n2`, then `n1` rows of whitespace-separated
//!   reals.
//! - Sign: rows of `-1`, `0`, `1` with no header.
//! - Genotype: one SNP per line, one two-letter call per individual
//!   (`AA`, `AG`, ...); `NN` marks a missing call.
//!
//! Blank lines and lines starting with `#` are skipped; reported line
//! numbers are 1-based positions in the original text.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CssError, Result};
use crate::linalg::DenseMatrix;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_row(line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CssError::parse(line_no, format!("not a finite number: {tok:?}")))
        })
        .collect()
}

fn from_rows(rows: Vec<Vec<f64>>, n1: usize, n2: usize) -> Result<DenseMatrix> {
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    DenseMatrix::from_row_slice(n1, n2, &flat)
}

pub fn parse_dense(text: &str) -> Result<DenseMatrix> {
    let mut lines = content_lines(text);
    let (header_no, header) = lines
        .next()
        .ok_or_else(|| CssError::parse(1, "missing `n1 n2` header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CssError::parse(header_no, format!("bad header {header:?}")))?;
    let [n1, n2] = dims[..] else {
        return Err(CssError::parse(header_no, "header must hold exactly two sizes"));
    };
    let mut rows = Vec::with_capacity(n1);
    let mut last = header_no;
    for (no, line) in lines {
        last = no;
        let row = parse_row(no, line)?;
        if row.len() != n2 {
            return Err(CssError::parse(no, format!("expected {n2} entries, found {}", row.len())));
        }
        if rows.len() == n1 {
            return Err(CssError::parse(no, format!("more than the declared {n1} rows")));
        }
        rows.push(row);
    }
    if rows.len() != n1 {
        return Err(CssError::parse(last, format!("expected {n1} rows, found {}", rows.len())));
    }
    from_rows(rows, n1, n2)
}

pub fn read_dense(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_dense(&fs::read_to_string(path)?)
}

/// Shortest round-trip decimal for every entry.
pub fn format_dense(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

pub fn write_dense(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_dense(m))?;
    Ok(())
}

pub fn parse_sign_matrix(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (no, line) in content_lines(text) {
        let row = line
            .split_whitespace()
            .map(|tok| match tok {
                "-1" => Ok(-1.0),
                "0" => Ok(0.0),
                "1" | "+1" => Ok(1.0),
                _ => Err(CssError::parse(no, format!("sign entries must be -1, 0 or 1, got {tok:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CssError::parse(
                    no,
                    format!("expected {} entries, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let n1 = rows.len();
    if n1 == 0 {
        return Err(CssError::parse(1, "sign matrix is empty"));
    }
    let n2 = rows[0].len();
    from_rows(rows, n1, n2)
}

pub fn load_sign_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_sign_matrix(&fs::read_to_string(path)?)
}

const MISSING_CALL: &str = "NN";

/// Encodes one SNP per row: with `B1` the alphabetically smaller allele of
/// the row, `B1B1 → -1`, `B2B2 → +1`, heterozygous and missing calls `→ 0`.
/// Alleles are uppercase ASCII letters; a row may carry at most two.
///
/// `line_numbers[r]` is reported for errors in row `r`.
fn encode_rows(grid: &[Vec<String>], line_numbers: &[usize]) -> Result<DMatrix<f64>> {
    let n_snps = grid.len();
    let n_ind = grid.first().map_or(0, Vec::len);
    if n_snps == 0 || n_ind == 0 {
        return Err(CssError::parse(1, "genotype grid is empty"));
    }
    let mut out = DMatrix::zeros(n_snps, n_ind);
    for (r, row) in grid.iter().enumerate() {
        let line = line_numbers[r];
        if row.len() != n_ind {
            return Err(CssError::parse(
                line,
                format!("expected {n_ind} genotype calls, found {}", row.len()),
            ));
        }
        let mut alleles: Vec<u8> = Vec::with_capacity(2);
        for call in row {
            if call == MISSING_CALL {
                continue;
            }
            let bytes = call.as_bytes();
            if bytes.len() != 2 || !bytes.iter().all(u8::is_ascii_uppercase) {
                return Err(CssError::parse(line, format!("invalid genotype call {call:?}")));
            }
            for b in bytes {
                if !alleles.contains(b) {
                    alleles.push(*b);
                }
            }
        }
        if alleles.len() > 2 {
            return Err(CssError::parse(
                line,
                format!("more than two alleles: {}", String::from_utf8_lossy(&alleles)),
            ));
        }
        alleles.sort_unstable();
        let b1 = alleles.first().copied();
        for (c, call) in row.iter().enumerate() {
            if call == MISSING_CALL {
                continue;
            }
            let bytes = call.as_bytes();
            out[(r, c)] = match (bytes[0] == bytes[1], Some(bytes[0]) == b1) {
                (false, _) => 0.0,
                (true, true) => -1.0,
                (true, false) => 1.0,
            };
        }
    }
    Ok(out)
}

/// Sign encoding of a raw genotype grid, one SNP per row; output keeps the
/// grid's orientation.
pub fn encode_sign(grid: &[Vec<String>]) -> Result<DenseMatrix> {
    let lines: Vec<usize> = (1..=grid.len()).collect();
    DenseMatrix::new(encode_rows(grid, &lines)?)
}

/// Parses a genotype file (one SNP per line) into an
/// individuals × SNPs sign matrix, so SNP windows are column ranges.
pub fn parse_genotypes(text: &str) -> Result<DenseMatrix> {
    let (lines, grid): (Vec<usize>, Vec<Vec<String>>) = content_lines(text)
        .map(|(no, l)| (no, l.split_whitespace().map(str::to_owned).collect()))
        .unzip();
    DenseMatrix::new(encode_rows(&grid, &lines)?.transpose())
}

pub fn load_genotypes(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_genotypes(&fs::read_to_string(path)?)
}
