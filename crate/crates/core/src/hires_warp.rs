//! Warping at twice the image resolution with nine nearest-neighbour
//! disparity hypotheses.

use rayon::prelude::*;

use crate::domain::{ensure_same_dims, BaselineVec, DisparityField, ImageGrid, Mask, Resolution};
use crate::error::{Error, Result};
use crate::imgproc::{decimate_sinc2, sample_bilinear, upsample_sinc2};

/// Unit shifts `h = (hx, hy)` in accumulation order: `hy` outer, `hx` inner.
pub const HYPOTHESIS_SHIFTS: [(isize, isize); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn require_base(w: &DisparityField) -> Result<()> {
    if w.resolution() != Resolution::Base {
        return Err(Error::param("expected a base-resolution disparity field"));
    }
    Ok(())
}

/// Replicates every pixel into a 2×2 block and doubles the values, since a
/// displacement of one base pixel spans two fine pixels.
pub fn upsample_disparity_nn(w: &DisparityField) -> Result<DisparityField> {
    require_base(w)?;
    let (width, height) = w.dims();
    let grid = ImageGrid::from_raw(
        2 * width,
        2 * height,
        (0..2 * height)
            .flat_map(|y| (0..2 * width).map(move |x| (x, y)))
            .map(|(x, y)| 2.0 * w.get(x / 2, y / 2))
            .collect(),
    );
    Ok(DisparityField::new(grid, Resolution::Double))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSet {
    fields: Vec<DisparityField>,
}

impl HypothesisSet {
    /// Fields in [`HYPOTHESIS_SHIFTS`] order.
    pub fn fields(&self) -> &[DisparityField] {
        &self.fields
    }

    pub fn get(&self, hx: isize, hy: isize) -> Option<&DisparityField> {
        HYPOTHESIS_SHIFTS
            .iter()
            .position(|&h| h == (hx, hy))
            .map(|i| &self.fields[i])
    }
}

#[inline]
fn shifted(i: usize, h: isize, n: usize) -> usize {
    (i as isize + h).clamp(0, n as isize - 1) as usize
}

/// `w_h[m] = w2[m + h]` for the nine unit shifts, replicating border pixels.
pub fn make_hypotheses(w2: &DisparityField) -> Result<HypothesisSet> {
    if w2.resolution() != Resolution::Double {
        return Err(Error::param("hypotheses are built from a 2x-resolution field"));
    }
    let (width, height) = w2.dims();
    let fields = HYPOTHESIS_SHIFTS
        .iter()
        .map(|&(hx, hy)| {
            let grid = ImageGrid::from_raw(
                width,
                height,
                (0..height)
                    .flat_map(|y| (0..width).map(move |x| (x, y)))
                    .map(|(x, y)| w2.get(shifted(x, hx, width), shifted(y, hy, height)))
                    .collect(),
            );
            DisparityField::new(grid, Resolution::Double)
        })
        .collect();
    Ok(HypothesisSet { fields })
}

/// Warps `img` toward the reference: samples `img` at `s − B′·w(s)` at twice
/// the resolution, averaging the nine hypothesis warps, then decimates.
/// A base pixel is valid when all four of its fine pixels were sampled
/// inside the image under every hypothesis.
pub fn multi_hypothesis_warp(
    img: &ImageGrid,
    w: &DisparityField,
    baseline: BaselineVec,
) -> Result<(ImageGrid, Mask)> {
    ensure_same_dims(w.dims(), img.dims())?;
    multi_hypothesis_warp_upsampled(&upsample_sinc2(img), w, baseline)
}

/// [`multi_hypothesis_warp`] on an image already upsampled with
/// [`upsample_sinc2`], so repeated warps of one view can share it.
pub fn multi_hypothesis_warp_upsampled(
    img_up: &ImageGrid,
    w: &DisparityField,
    baseline: BaselineVec,
) -> Result<(ImageGrid, Mask)> {
    warp_fine(img_up, w, baseline, &HYPOTHESIS_SHIFTS)
}

/// The same pipeline with only the unshifted hypothesis.
pub fn single_hypothesis_warp(
    img: &ImageGrid,
    w: &DisparityField,
    baseline: BaselineVec,
) -> Result<(ImageGrid, Mask)> {
    ensure_same_dims(w.dims(), img.dims())?;
    warp_fine(&upsample_sinc2(img), w, baseline, &[(0, 0)])
}

fn warp_fine(
    img_up: &ImageGrid,
    w: &DisparityField,
    baseline: BaselineVec,
    shifts: &[(isize, isize)],
) -> Result<(ImageGrid, Mask)> {
    require_base(w)?;
    let (bw, bh) = w.dims();
    let (fw, fh) = (2 * bw, 2 * bh);
    ensure_same_dims((fw, fh), img_up.dims())?;
    let src = img_up.data();
    let inv = 1.0 / shifts.len() as f64;

    let mut out = vec![0.0; fw * fh];
    let mut valid = vec![false; fw * fh];
    out.par_chunks_mut(fw)
        .zip(valid.par_chunks_mut(fw))
        .enumerate()
        .for_each(|(y, (row, vrow))| {
            for x in 0..fw {
                let mut acc = 0.0;
                let mut ok = true;
                for &(hx, hy) in shifts {
                    let wv = 2.0 * w.get(shifted(x, hx, fw) / 2, shifted(y, hy, fh) / 2);
                    let (v, inside) = sample_bilinear(
                        src,
                        fw,
                        fh,
                        x as f64 - baseline.bx * wv,
                        y as f64 - baseline.by * wv,
                    );
                    acc += v;
                    ok &= inside;
                }
                row[x] = acc * inv;
                vrow[x] = ok;
            }
        });

    let warped = decimate_sinc2(&ImageGrid::from_raw(fw, fh, out))?;
    let mask = (0..bh)
        .flat_map(|y| (0..bw).map(move |x| (x, y)))
        .map(|(x, y)| {
            valid[2 * y * fw + 2 * x]
                && valid[2 * y * fw + 2 * x + 1]
                && valid[(2 * y + 1) * fw + 2 * x]
                && valid[(2 * y + 1) * fw + 2 * x + 1]
        })
        .collect();
    Ok((warped, Mask::new(bw, bh, mask)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::disparity_from_w;
    use crate::imgproc::{bilinear_warp, decimate_sinc2};

    fn texture(w: usize, h: usize) -> ImageGrid {
        ImageGrid::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64, y as f64);
            0.5 + 0.2 * (0.45 * x + 0.2).sin() * (0.3 * y).cos() + 0.1 * (0.35 * y - 0.25 * x).cos()
        })
        .unwrap()
    }

    fn interior_max_diff(a: &ImageGrid, b: &ImageGrid, margin: usize) -> f64 {
        let mut m: f64 = 0.0;
        for y in margin..a.height() - margin {
            for x in margin..a.width() - margin {
                m = m.max((a.get(x, y) - b.get(x, y)).abs());
            }
        }
        m
    }

    #[test]
    fn nn_upsampling() {
        let c = DisparityField::constant(5, 3, 0.5).unwrap();
        let up = upsample_disparity_nn(&c).unwrap();
        assert_eq!(up.dims(), (10, 6));
        assert_eq!(up.resolution(), Resolution::Double);
        assert!(up.values().iter().all(|&v| v == 1.0));

        let mut data = vec![0.0; 16];
        data[5] = 1.0;
        let imp = DisparityField::base(ImageGrid::new(4, 4, data).unwrap());
        let up = upsample_disparity_nn(&imp).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let expect = if (2..4).contains(&x) && (2..4).contains(&y) { 2.0 } else { 0.0 };
                assert_eq!(up.get(x, y), expect);
            }
        }
        assert!(upsample_disparity_nn(&up).is_err());
    }

    #[test]
    fn doubling_scales_displacements() {
        let w = DisparityField::base(ImageGrid::from_fn(6, 4, |x, y| 0.1 * x as f64 - 0.05 * y as f64).unwrap());
        let b = BaselineVec::new(2.0, -1.0).unwrap();
        let fine = disparity_from_w(&upsample_disparity_nn(&w).unwrap(), b);
        let coarse = disparity_from_w(&w, b);
        for y in 0..8 {
            for x in 0..12 {
                let (cx, cy) = coarse.at(x / 2, y / 2);
                assert_eq!(fine.at(x, y), (2.0 * cx, 2.0 * cy));
            }
        }
    }

    #[test]
    fn hypotheses_shift_a_step_edge() {
        let c = 6;
        let grid = ImageGrid::from_fn(12, 4, |x, _| if x >= c { 1.0 } else { 0.0 }).unwrap();
        let w2 = DisparityField::new(grid, Resolution::Double);
        let set = make_hypotheses(&w2).unwrap();
        assert_eq!(set.fields().len(), 9);
        assert_eq!(set.get(0, 0).unwrap(), &w2);
        let edge = |f: &DisparityField| (0..12).find(|&x| f.get(x, 2) == 1.0).unwrap();
        assert_eq!(edge(set.get(1, 0).unwrap()), c - 1);
        assert_eq!(edge(set.get(-1, 0).unwrap()), c + 1);
        assert_eq!(edge(set.get(0, 1).unwrap()), c);

        let flat = DisparityField::new(ImageGrid::filled(6, 6, 0.7).unwrap(), Resolution::Double);
        let set = make_hypotheses(&flat).unwrap();
        assert!(set.fields().iter().all(|f| f == &flat));
    }

    #[test]
    fn zero_disparity_is_a_round_trip() {
        let img = texture(40, 32);
        let (out, mask) = multi_hypothesis_warp(&img, &DisparityField::zeros(40, 32).unwrap(), BaselineVec::new(1.0, 0.0).unwrap())
            .unwrap();
        let round = decimate_sinc2(&upsample_sinc2(&img)).unwrap();
        assert!(interior_max_diff(&out, &round, 0) < 1e-12);
        assert!(interior_max_diff(&out, &img, 6) < 1e-2);
        assert_eq!(mask.count_valid(), 40 * 32);
    }

    #[test]
    fn constant_field_matches_single_hypothesis() {
        let img = texture(36, 30);
        let w = DisparityField::constant(36, 30, 0.37).unwrap();
        let b = BaselineVec::new(-2.0, 1.0).unwrap();
        let (multi, mm) = multi_hypothesis_warp(&img, &w, b).unwrap();
        let (single, sm) = single_hypothesis_warp(&img, &w, b).unwrap();
        assert!(interior_max_diff(&multi, &single, 0) < 1e-6);
        assert_eq!(mm, sm);
    }

    #[test]
    fn integer_shift_matches_direct_shift() {
        let img = texture(48, 24);
        let w = DisparityField::constant(48, 24, 2.0).unwrap();
        let (out, mask) = multi_hypothesis_warp(&img, &w, BaselineVec::new(1.0, 0.0).unwrap()).unwrap();
        for y in 6..18 {
            for x in 8..42 {
                assert!((out.get(x, y) - img.get(x - 2, y)).abs() < 2e-2);
            }
        }
        assert!(!mask.get(0, 10) && !mask.get(1, 10) && mask.get(2, 10));
    }

    #[test]
    fn step_disparity_does_not_ring() {
        let img = texture(48, 32);
        let w = DisparityField::base(ImageGrid::from_fn(48, 32, |x, _| if x < 24 { 0.0 } else { 1.5 }).unwrap());
        let (out, _) = multi_hypothesis_warp(&img, &w, BaselineVec::new(1.0, 0.0).unwrap()).unwrap();
        let mut worst: f64 = 0.0;
        for y in 4..28 {
            for x in 6..42 {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for yy in y - 2..=y + 2 {
                    for xx in x - 2..=x + 2 {
                        lo = lo.min(img.get(xx, yy));
                        hi = hi.max(img.get(xx, yy));
                    }
                }
                let v = out.get(x, y);
                worst = worst.max(lo - v).max(v - hi);
            }
        }
        assert!(worst < 0.05, "overshoot {worst}");
    }

    #[test]
    fn matches_explicit_average_of_warps() {
        let img = texture(20, 16);
        let w = DisparityField::base(ImageGrid::from_fn(20, 16, |x, y| 0.05 * x as f64 - 0.03 * y as f64).unwrap());
        let b = BaselineVec::new(1.0, 2.0).unwrap();
        let up = upsample_sinc2(&img);
        let set = make_hypotheses(&upsample_disparity_nn(&w).unwrap()).unwrap();
        let mut acc = vec![0.0; 40 * 32];
        for f in set.fields() {
            let (warped, _) = bilinear_warp(&up, &disparity_from_w(f, b).scaled(-1.0)).unwrap();
            for (a, v) in acc.iter_mut().zip(warped.data()) {
                *a += v;
            }
        }
        let avg = ImageGrid::new(40, 32, acc.into_iter().map(|v| v / 9.0).collect()).unwrap();
        let expect = decimate_sinc2(&avg).unwrap();
        let (out, _) = multi_hypothesis_warp(&img, &w, b).unwrap();
        assert!(interior_max_diff(&out, &expect, 0) < 1e-12);
    }
}
