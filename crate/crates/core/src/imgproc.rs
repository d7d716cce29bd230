//! Filtering, differentiation, resampling and warping on [`ImageGrid`]s.
//!
//! All kernels use half-sample symmetric extension at the borders
//! (`… c b a | a b c …`). Sample positions follow the pixel-centre
//! convention: fine pixel `j` of a 2× grid sits at base coordinate
//! `(j + 0.5) / 2 − 0.5`, so a base pixel maps onto a 2×2 block.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::domain::{ensure_same_dims, DisplacementField, GradientMode, ImageGrid, Mask};
use crate::error::{Error, Result};

/// Spatial gradient of an image, in intensity per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub gx: ImageGrid,
    pub gy: ImageGrid,
}

/// Half-sample symmetric index reflection, valid for any offset.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Sampled Gaussian truncated at `ceil(4σ)`, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let radius = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

/// Sampled Gaussian derivative as a correlation kernel: zero DC and unit
/// first moment (`Σ i·k[i] = 1`), so a ramp of slope `a` responds with `a`.
pub fn gaussian_derivative_kernel(sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let radius = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| i as f64 * (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    k.iter_mut().for_each(|v| *v -= mean);
    let moment: f64 = (-radius..=radius).zip(&k).map(|(i, v)| i as f64 * v).sum();
    k.iter_mut().for_each(|v| *v /= moment);
    Ok(k)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("sigma must be > 0, got {sigma}")))
    }
}

/// Correlates every row with an odd-length kernel centred on its middle tap.
fn correlate_rows(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row_out)| {
            let row = &src[y * width..(y + 1) * width];
            for (x, o) in row_out.iter_mut().enumerate() {
                let xi = x as isize;
                let mut acc = 0.0;
                if xi >= r && xi + r < width as isize {
                    let start = (xi - r) as usize;
                    for (k, &c) in kernel.iter().enumerate() {
                        acc += c * row[start + k];
                    }
                } else {
                    for (k, &c) in kernel.iter().enumerate() {
                        acc += c * row[reflect(xi + k as isize - r, width)];
                    }
                }
                *o = acc;
            }
        });
    out
}

fn correlate_cols(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row_out)| {
            let yi = y as isize;
            for (k, &c) in kernel.iter().enumerate() {
                let sy = reflect(yi + k as isize - r, height);
                let row = &src[sy * width..(sy + 1) * width];
                for (o, &v) in row_out.iter_mut().zip(row) {
                    *o += c * v;
                }
            }
        });
    out
}

pub fn gaussian_blur(img: &ImageGrid, sigma: f64) -> Result<ImageGrid> {
    let k = gaussian_kernel(sigma)?;
    let (w, h) = img.dims();
    let tmp = correlate_rows(img.data(), w, h, &k);
    Ok(ImageGrid::from_raw(w, h, correlate_cols(&tmp, w, h, &k)))
}

/// Derivative-of-Gaussian gradient of the pair `(img_a, img_b)`, combined
/// according to `mode`.
pub fn dog_gradient(
    img_a: &ImageGrid,
    img_b: &ImageGrid,
    sigma: f64,
    mode: GradientMode,
) -> Result<GradientPair> {
    ensure_same_dims(img_a.dims(), img_b.dims())?;
    let g = gaussian_kernel(sigma)?;
    let d = gaussian_derivative_kernel(sigma)?;
    let scale = match mode {
        GradientMode::Average => 0.5,
        GradientMode::PaperSum => 1.0,
    };
    let (w, h) = img_a.dims();
    let combined: Vec<f64> = img_a
        .data()
        .iter()
        .zip(img_b.data())
        .map(|(a, b)| scale * (a + b))
        .collect();
    let gx = correlate_cols(&correlate_rows(&combined, w, h, &d), w, h, &g);
    let gy = correlate_cols(&correlate_rows(&combined, w, h, &g), w, h, &d);
    Ok(GradientPair {
        gx: ImageGrid::from_raw(w, h, gx),
        gy: ImageGrid::from_raw(w, h, gy),
    })
}

/// `G_σ * (iq − ip)`.
pub fn diff_blur(iq: &ImageGrid, ip: &ImageGrid, sigma: f64) -> Result<ImageGrid> {
    let diff = iq.zip_map(ip, |a, b| a - b)?;
    gaussian_blur(&diff, sigma)
}

/// Bilinear sample with coordinates clamped to the image. Returns the value
/// and whether the unclamped position was inside the image.
#[inline]
pub(crate) fn sample_bilinear(img: &[f64], width: usize, height: usize, px: f64, py: f64) -> (f64, bool) {
    let max_x = (width - 1) as f64;
    let max_y = (height - 1) as f64;
    let valid = (0.0..=max_x).contains(&px) && (0.0..=max_y).contains(&py);
    let cx = px.clamp(0.0, max_x);
    let cy = py.clamp(0.0, max_y);
    let x0 = (cx.floor() as usize).min(width.saturating_sub(2));
    let y0 = (cy.floor() as usize).min(height.saturating_sub(2));
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let fx = cx - x0 as f64;
    let fy = cy - y0 as f64;
    let top = img[y0 * width + x0] * (1.0 - fx) + img[y0 * width + x1] * fx;
    let bottom = img[y1 * width + x0] * (1.0 - fx) + img[y1 * width + x1] * fx;
    (top * (1.0 - fy) + bottom * fy, valid)
}

/// `out[s] = img(s + disp(s))` by bilinear interpolation. Samples landing
/// outside the image are clamped to the border and flagged invalid.
pub fn bilinear_warp(img: &ImageGrid, disp: &DisplacementField) -> Result<(ImageGrid, Mask)> {
    ensure_same_dims(img.dims(), disp.dims())?;
    let (w, h) = img.dims();
    let src = img.data();
    let mut out = vec![0.0; w * h];
    let mut valid = vec![false; w * h];
    out.par_chunks_mut(w)
        .zip(valid.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (row, vrow))| {
            for x in 0..w {
                let (dx, dy) = disp.at(x, y);
                let (v, ok) = sample_bilinear(src, w, h, x as f64 + dx, y as f64 + dy);
                row[x] = v;
                vrow[x] = ok;
            }
        });
    Ok((ImageGrid::from_raw(w, h, out), Mask::new(w, h, valid)?))
}

/// Half-width of the Hann window used by the 8-tap interpolator.
const INTERP_HALF_WIDTH: f64 = 4.0;
/// Half-width (in fine samples) of the decimation filter's Hann window.
const DECIM_HALF_WIDTH: f64 = 8.0;

#[inline]
fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (PI * t).sin() / (PI * t)
    }
}

#[inline]
fn hann(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * u).cos())
    }
}

/// Interpolation taps for the fine sample at base offset `-0.25` (even
/// output) from base neighbours `i-4 ..= i+3`. The odd phase is its mirror.
fn upsample_taps() -> [f64; 8] {
    let mut taps = [0.0; 8];
    for (n, k) in (-4isize..=3).enumerate() {
        let t = -0.25 - k as f64;
        taps[n] = sinc(t) * hann(t / INTERP_HALF_WIDTH);
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= sum);
    taps
}

/// Half-band low-pass taps for the base sample at fine position `2i + 0.5`,
/// from fine neighbours `2i-7 ..= 2i+8`.
fn decimate_taps() -> [f64; 16] {
    let mut taps = [0.0; 16];
    for (n, m) in (-7isize..=8).enumerate() {
        let t = 0.5 - m as f64;
        taps[n] = 0.5 * sinc(t / 2.0) * hann(t / DECIM_HALF_WIDTH);
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= sum);
    taps
}

fn upsample_rows(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let even = upsample_taps();
    let mut odd = even;
    odd.reverse();
    let ow = 2 * width;
    let mut out = vec![0.0; ow * height];
    out.par_chunks_mut(ow).enumerate().for_each(|(y, row_out)| {
        let row = &src[y * width..(y + 1) * width];
        for i in 0..width {
            let ii = i as isize;
            let (mut e, mut o) = (0.0, 0.0);
            for n in 0..8 {
                e += even[n] * row[reflect(ii - 4 + n as isize, width)];
                o += odd[n] * row[reflect(ii - 3 + n as isize, width)];
            }
            row_out[2 * i] = e;
            row_out[2 * i + 1] = o;
        }
    });
    out
}

fn upsample_cols(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let even = upsample_taps();
    let mut odd = even;
    odd.reverse();
    let oh = 2 * height;
    let mut out = vec![0.0; width * oh];
    out.par_chunks_mut(width).enumerate().for_each(|(oy, row_out)| {
        let i = (oy / 2) as isize;
        let (taps, start) = if oy % 2 == 0 { (&even, i - 4) } else { (&odd, i - 3) };
        for (n, &c) in taps.iter().enumerate() {
            let sy = reflect(start + n as isize, height);
            let row = &src[sy * width..(sy + 1) * width];
            for (o, &v) in row_out.iter_mut().zip(row) {
                *o += c * v;
            }
        }
    });
    out
}

/// 2× upsampling by Hann-windowed sinc interpolation (8 taps per axis).
pub fn upsample_sinc2(img: &ImageGrid) -> ImageGrid {
    let (w, h) = img.dims();
    let rows = upsample_rows(img.data(), w, h);
    ImageGrid::from_raw(2 * w, 2 * h, upsample_cols(&rows, 2 * w, h))
}

fn decimate_rows(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let taps = decimate_taps();
    let ow = width / 2;
    let mut out = vec![0.0; ow * height];
    out.par_chunks_mut(ow).enumerate().for_each(|(y, row_out)| {
        let row = &src[y * width..(y + 1) * width];
        for (i, o) in row_out.iter_mut().enumerate() {
            let start = 2 * i as isize - 7;
            let mut acc = 0.0;
            for (n, &c) in taps.iter().enumerate() {
                acc += c * row[reflect(start + n as isize, width)];
            }
            *o = acc;
        }
    });
    out
}

fn decimate_cols(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let taps = decimate_taps();
    let oh = height / 2;
    let mut out = vec![0.0; width * oh];
    out.par_chunks_mut(width).enumerate().for_each(|(oy, row_out)| {
        let start = 2 * oy as isize - 7;
        for (n, &c) in taps.iter().enumerate() {
            let sy = reflect(start + n as isize, height);
            let row = &src[sy * width..(sy + 1) * width];
            for (o, &v) in row_out.iter_mut().zip(row) {
                *o += c * v;
            }
        }
    });
    out
}

/// Half-band windowed-sinc low-pass followed by 2× subsampling.
pub fn decimate_sinc2(img: &ImageGrid) -> Result<ImageGrid> {
    let (w, h) = img.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::param(format!(
            "decimation needs even dimensions, got {w}x{h}"
        )));
    }
    let rows = decimate_rows(img.data(), w, h);
    Ok(ImageGrid::from_raw(w / 2, h / 2, decimate_cols(&rows, w / 2, h)))
}

/// One Gaussian pyramid level: blur with σ = 1, then average 2×2 blocks.
/// Odd trailing rows/columns are paired with their mirror image.
pub fn pyramid_down(img: &ImageGrid) -> Result<ImageGrid> {
    let blurred = gaussian_blur(img, 1.0)?;
    let (w, h) = img.dims();
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let src = blurred.data();
    let at = |x: usize, y: usize| src[y.min(h - 1) * w + x.min(w - 1)];
    Ok(ImageGrid::from_raw(
        ow,
        oh,
        (0..oh)
            .flat_map(|y| (0..ow).map(move |x| (x, y)))
            .map(|(x, y)| {
                0.25 * (at(2 * x, 2 * y)
                    + at(2 * x + 1, 2 * y)
                    + at(2 * x, 2 * y + 1)
                    + at(2 * x + 1, 2 * y + 1))
            })
            .collect(),
    ))
}
