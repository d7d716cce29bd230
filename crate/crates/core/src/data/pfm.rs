//! Grayscale portable float maps (`Pf`). Rows are stored bottom to top; a
//! negative scale marks little-endian samples.

use std::fs;
use std::path::Path;

use crate::domain::ImageGrid;
use crate::error::{Error, Result};

/// Splits off the next whitespace-delimited header token.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize, path: &Path) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if *pos < bytes.len() && bytes[*pos] == b'#' {
        return Err(Error::ingestion(path, "PFM headers may not contain comment lines"));
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::ingestion(path, "truncated PFM header"));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| Error::ingestion(path, "PFM header is not ASCII"))
}

/// Decodes PFM bytes; `path` only labels errors.
pub fn parse_pfm(bytes: &[u8], path: &Path) -> Result<ImageGrid> {
    let mut pos = 0;
    match next_token(bytes, &mut pos, path)? {
        "Pf" => {}
        "PF" => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: colour PFM (PF) is not supported, expected grayscale Pf",
                path.display()
            )))
        }
        other => return Err(Error::ingestion(path, format!("bad PFM magic {other:?}"))),
    }
    let parse_dim = |tok: &str| {
        tok.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::ingestion(path, format!("bad PFM dimension {tok:?}")))
    };
    let width = parse_dim(next_token(bytes, &mut pos, path)?)?;
    let height = parse_dim(next_token(bytes, &mut pos, path)?)?;
    let scale_tok = next_token(bytes, &mut pos, path)?;
    let scale: f64 = scale_tok
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| Error::ingestion(path, format!("bad PFM scale {scale_tok:?}")))?;
    // exactly one whitespace byte separates the header from the payload
    pos += 1;
    let need = width * height * 4;
    let payload = bytes.get(pos..).unwrap_or(&[]);
    if payload.len() < need {
        return Err(Error::ingestion(
            path,
            format!("truncated PFM payload: {} of {need} bytes", payload.len()),
        ));
    }
    let little = scale < 0.0;
    let mut data = vec![0.0; width * height];
    for (k, chunk) in payload[..need].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (row, col) = (k / width, k % width);
        data[(height - 1 - row) * width + col] = v as f64;
    }
    ImageGrid::new(width, height, data).map_err(|e| Error::ingestion(path, e.to_string()))
}

pub fn encode_pfm(grid: &ImageGrid) -> Vec<u8> {
    let (w, h) = grid.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for &v in grid.row(y) {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<ImageGrid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    parse_pfm(&bytes, path)
}

pub fn write_pfm(grid: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pfm(grid))?;
    Ok(())
}
