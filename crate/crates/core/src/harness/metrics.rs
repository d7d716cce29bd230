use crate::domain::{ensure_same_dims, DisparityField, Resolution};
use crate::error::{Error, Result};
use crate::hires_warp::{make_hypotheses, upsample_disparity_nn};

/// RMSE of a base-resolution estimate against a 2× ground truth, averaged
/// over the nine nearest-neighbour hypotheses of the upsampled estimate.
/// Reported in base-resolution pixels, the units of `w_est`.
pub fn rmse_hypotheses(w_est: &DisparityField, gt: &DisparityField) -> Result<f64> {
    if w_est.resolution() != Resolution::Base || gt.resolution() != Resolution::Double {
        return Err(Error::param("expected a base estimate and a 2x ground truth"));
    }
    let (w, h) = w_est.dims();
    ensure_same_dims((2 * w, 2 * h), gt.dims())?;
    let set = make_hypotheses(&upsample_disparity_nn(w_est)?)?;
    let mut sum = 0.0;
    for field in set.fields() {
        sum += field
            .values()
            .iter()
            .zip(gt.values())
            .map(|(e, g)| (e - g) * (e - g))
            .sum::<f64>();
    }
    // fine-pixel units are twice base-pixel units
    Ok(0.5 * (sum / (9 * gt.values().len()) as f64).sqrt())
}

pub fn rmse_plain(w_est: &DisparityField, gt: &DisparityField) -> Result<f64> {
    ensure_same_dims(gt.dims(), w_est.dims())?;
    let sum: f64 = w_est
        .values()
        .iter()
        .zip(gt.values())
        .map(|(e, g)| (e - g) * (e - g))
        .sum();
    Ok((sum / gt.values().len() as f64).sqrt())
}

/// Picks [`rmse_hypotheses`] or [`rmse_plain`] from the ground truth's
/// resolution.
pub fn rmse_against(w_est: &DisparityField, gt: &DisparityField) -> Result<f64> {
    match gt.resolution() {
        Resolution::Double => rmse_hypotheses(w_est, gt),
        Resolution::Base => rmse_plain(w_est, gt),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ImageGrid;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    #[test]
    fn exact_and_offset_estimates() {
        let est = DisparityField::constant(4, 3, 0.6).unwrap();
        let gt = DisparityField::new(ImageGrid::filled(8, 6, 1.2).unwrap(), Resolution::Double);
        assert_eq!(rmse_hypotheses(&est, &gt).unwrap(), 0.0);
        let off = DisparityField::constant(4, 3, 0.6 + 0.05).unwrap();
        assert!((rmse_hypotheses(&off, &gt).unwrap() - 0.05).abs() < 1e-12);
        assert!(rmse_hypotheses(&gt, &est).is_err());
        let wrong = DisparityField::new(ImageGrid::filled(8, 7, 1.2).unwrap(), Resolution::Double);
        assert!(rmse_hypotheses(&est, &wrong).is_err());
    }

    #[test]
    fn hypotheses_match_triple_loop() {
        let mut seed = 99u64;
        let est = DisparityField::base(ImageGrid::from_fn(6, 6, |_, _| lcg(&mut seed)).unwrap());
        let gt = DisparityField::new(ImageGrid::from_fn(12, 12, |_, _| 2.0 * lcg(&mut seed)).unwrap(), Resolution::Double);
        let mut sum = 0.0;
        for hy in -1isize..=1 {
            for hx in -1isize..=1 {
                for y in 0..12isize {
                    for x in 0..12isize {
                        let sx = (x + hx).clamp(0, 11) as usize;
                        let sy = (y + hy).clamp(0, 11) as usize;
                        let e = 2.0 * est.get(sx / 2, sy / 2);
                        sum += (e - gt.get(x as usize, y as usize)).powi(2);
                    }
                }
            }
        }
        let naive = (sum / (9.0 * 144.0)).sqrt() / 2.0;
        assert!((rmse_hypotheses(&est, &gt).unwrap() - naive).abs() < 1e-12);
    }

    #[test]
    fn plain_rmse() {
        let mut seed = 4u64;
        let a = DisparityField::base(ImageGrid::from_fn(5, 7, |_, _| lcg(&mut seed)).unwrap());
        assert_eq!(rmse_plain(&a, &a).unwrap(), 0.0);
        let b = DisparityField::base(a.grid().map(|v| v + 0.1).unwrap());
        assert!((rmse_plain(&b, &a).unwrap() - 0.1).abs() < 1e-12);
        let c = DisparityField::base(ImageGrid::from_fn(5, 7, |_, _| lcg(&mut seed)).unwrap());
        let mut naive = 0.0;
        for y in 0..7 {
            for x in 0..5 {
                naive += (a.get(x, y) - c.get(x, y)).powi(2);
            }
        }
        assert!((rmse_plain(&a, &c).unwrap() - (naive / 35.0).sqrt()).abs() < 1e-12);
    }
}
