//! Grayscale PGM images (`P2` ASCII, `P5` binary, 8- or 16-bit).
//!
//! A `height × width` image becomes a `height × width` matrix with pixel
//! values divided by `maxval`, so entries lie in `[0, 1]`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CssError, Result};
use crate::linalg::DenseMatrix;

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    /// Byte offset of the first pixel.
    data_start: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                if b == b'\n' {
                    self.line += 1;
                }
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let line = self.line;
        let tok = self
            .token()
            .ok_or_else(|| CssError::parse(line, format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| {
                CssError::parse(line, format!("bad {what}: {:?}", String::from_utf8_lossy(tok)))
            })
    }
}

fn parse_header(cursor: &mut Cursor<'_>) -> Result<Header> {
    let magic = cursor.token().unwrap_or_default();
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        other => {
            return Err(CssError::Format(format!(
                "expected PGM magic P2 or P5, found {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cursor.number("width")? as usize;
    let height = cursor.number("height")? as usize;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(CssError::Format(format!("empty {width}x{height} image")));
    }
    if maxval == 0 || maxval > 65_535 {
        return Err(CssError::Format(format!("maxval {maxval} outside 1..=65535")));
    }
    // exactly one whitespace byte separates the header from binary data
    let data_start = cursor.pos + 1;
    Ok(Header {
        binary,
        width,
        height,
        maxval,
        data_start,
    })
}

pub fn parse_pgm(bytes: &[u8]) -> Result<DenseMatrix> {
    let mut cursor = Cursor {
        bytes,
        pos: 0,
        line: 1,
    };
    let h = parse_header(&mut cursor)?;
    let count = h.width * h.height;
    let mut pixels = Vec::with_capacity(count);
    if h.binary {
        let wide = h.maxval > 255;
        let need = count * if wide { 2 } else { 1 };
        let data = bytes
            .get(h.data_start..h.data_start + need)
            .ok_or_else(|| CssError::Format(format!("truncated P5 data: need {need} bytes")))?;
        if wide {
            pixels.extend(data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u32));
        } else {
            pixels.extend(data.iter().map(|&b| b as u32));
        }
    } else {
        for _ in 0..count {
            pixels.push(cursor.number("pixel")?);
        }
    }
    if let Some(&bad) = pixels.iter().find(|&&p| p > h.maxval) {
        return Err(CssError::Format(format!("pixel {bad} exceeds maxval {}", h.maxval)));
    }
    let scale = h.maxval as f64;
    DenseMatrix::new(DMatrix::from_fn(h.height, h.width, |i, j| {
        pixels[i * h.width + j] as f64 / scale
    }))
}

pub fn load_grayscale(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_pgm(&fs::read(path)?)
}

fn quantize(m: &DMatrix<f64>, maxval: u16) -> Result<Vec<u16>> {
    if maxval == 0 {
        return Err(CssError::param("maxval must be positive"));
    }
    let mut out = Vec::with_capacity(m.len());
    for row in m.row_iter() {
        for &v in row.iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(CssError::param(format!("pixel value {v} outside [0, 1]")));
            }
            out.push((v * maxval as f64).round() as u16);
        }
    }
    Ok(out)
}

/// ASCII encoding of values in `[0, 1]`.
pub fn encode_p2(m: &DMatrix<f64>, maxval: u16) -> Result<Vec<u8>> {
    let px = quantize(m, maxval)?;
    let mut out = format!("P2\n{} {}\n{maxval}\n", m.ncols(), m.nrows());
    for row in px.chunks(m.ncols()) {
        let cells: Vec<String> = row.iter().map(u16::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    Ok(out.into_bytes())
}

/// Binary encoding of values in `[0, 1]`; 16-bit big-endian when
/// `maxval > 255`.
pub fn encode_p5(m: &DMatrix<f64>, maxval: u16) -> Result<Vec<u8>> {
    let px = quantize(m, maxval)?;
    let mut out = format!("P5\n{} {}\n{maxval}\n", m.ncols(), m.nrows()).into_bytes();
    if maxval > 255 {
        out.extend(px.iter().flat_map(|p| p.to_be_bytes()));
    } else {
        out.extend(px.iter().map(|&p| p as u8));
    }
    Ok(out)
}
