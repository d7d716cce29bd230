//! Binary PGM (P5) export for eyeballing fields. Values are stretched from
//! their min..max range; the range is recorded in a header comment.

use std::fs;
use std::path::Path;

use crate::domain::ImageGrid;
use crate::error::{Error, Result};

pub fn encode_pgm(grid: &ImageGrid, bits: u8) -> Result<Vec<u8>> {
    let maxval: u32 = match bits {
        8 => 255,
        16 => 65535,
        _ => return Err(Error::param(format!("PGM depth must be 8 or 16 bits, got {bits}"))),
    };
    let (w, h) = grid.dims();
    let (lo, hi) = grid.min_max();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n# min={lo:e} max={hi:e}\n{w} {h}\n{maxval}\n").into_bytes();
    for &v in grid.data() {
        let q = (((v - lo) / span) * maxval as f64).round() as u32;
        if bits == 8 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&(q as u16).to_be_bytes());
        }
    }
    Ok(out)
}

pub fn write_pgm(grid: &ImageGrid, path: impl AsRef<Path>, bits: u8) -> Result<()> {
    fs::write(path, encode_pgm(grid, bits)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_bit_stretch() {
        let g = ImageGrid::new(3, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        let bytes = encode_pgm(&g, 8).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.starts_with("P5\n# min=-1e0 max=1e0\n3 1\n255\n"));
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 128, 255]);
    }

    #[test]
    fn sixteen_bit_is_big_endian() {
        let g = ImageGrid::new(2, 1, vec![0.0, 2.0]).unwrap();
        let bytes = encode_pgm(&g, 16).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0, 0, 255, 255]);
        assert!(encode_pgm(&g, 12).is_err());
    }

    #[test]
    fn flat_field_maps_to_zero() {
        let g = ImageGrid::filled(2, 2, 0.4).unwrap();
        let bytes = encode_pgm(&g, 8).unwrap();
        assert!(bytes[bytes.len() - 4..].iter().all(|&b| b == 0));
    }
}
