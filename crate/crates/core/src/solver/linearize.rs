use crate::domain::{
    ensure_same_dims, BaselineVec, DisparityField, GradientMode, ImageGrid, Mask,
};
use crate::error::Result;
use crate::imgproc::{diff_blur, dog_gradient};

/// First-order data term of one view: the residual at disparity `w` is
/// `a·w + b`, with `a = ⟨∇I, B′⟩` and `b = G_σ * (I_q − I_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedView {
    pub a: ImageGrid,
    pub b: ImageGrid,
    /// Pixels outside the mask contribute neither data weight nor energy.
    pub mask: Mask,
    pub baseline: BaselineVec,
}

impl LinearizedView {
    #[inline]
    pub fn residual_at(&self, i: usize, w: f64) -> f64 {
        self.a.data()[i] * w + self.b.data()[i]
    }

    pub fn with_mask(mut self, mask: Mask) -> Result<Self> {
        ensure_same_dims(self.a.dims(), mask.dims())?;
        self.mask = mask;
        Ok(self)
    }

    /// Re-expresses a linearization taken around `w0` in terms of the total
    /// field: `a·(w − w0) + b = a·w + (b − a·w0)`.
    pub fn expanded_about(mut self, w0: &DisparityField) -> Result<Self> {
        ensure_same_dims(self.a.dims(), w0.dims())?;
        let b = self
            .b
            .data()
            .iter()
            .zip(self.a.data())
            .zip(w0.values())
            .map(|((b, a), w)| b - a * w)
            .collect();
        let (w, h) = self.b.dims();
        self.b = ImageGrid::new(w, h, b)?;
        Ok(self)
    }
}

pub fn linearize_view(
    reference: &ImageGrid,
    other: &ImageGrid,
    baseline: BaselineVec,
    sigma: f64,
    mode: GradientMode,
) -> Result<LinearizedView> {
    ensure_same_dims(reference.dims(), other.dims())?;
    let grad = dog_gradient(reference, other, sigma, mode)?;
    let a = grad.gx.zip_map(&grad.gy, |gx, gy| gx * baseline.bx + gy * baseline.by)?;
    let b = diff_blur(reference, other, sigma)?;
    let (w, h) = reference.dims();
    Ok(LinearizedView {
        a,
        b,
        mask: Mask::all_valid(w, h),
        baseline,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_images_have_zero_b() {
        let img = ImageGrid::from_fn(10, 8, |x, y| ((x * 3 + y) % 7) as f64 / 7.0).unwrap();
        let lv = linearize_view(&img, &img, BaselineVec::new(1.0, 0.0).unwrap(), 0.75, GradientMode::Average)
            .unwrap();
        assert!(lv.b.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_baseline_has_zero_a() {
        let img = ImageGrid::from_fn(10, 8, |x, y| ((x * 3 + y) % 7) as f64 / 7.0).unwrap();
        let lv = linearize_view(&img, &img, BaselineVec::ZERO, 0.75, GradientMode::Average).unwrap();
        assert!(lv.a.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shifted_ramp_is_solved_at_unit_disparity() {
        let slope = 0.04;
        let reference = ImageGrid::from_fn(24, 10, |x, _| slope * x as f64).unwrap();
        // other(s) = reference(s + (1, 0))
        let other = ImageGrid::from_fn(24, 10, |x, _| slope * (x as f64 + 1.0)).unwrap();
        let lv = linearize_view(
            &reference,
            &other,
            BaselineVec::new(1.0, 0.0).unwrap(),
            0.75,
            GradientMode::Average,
        )
        .unwrap();
        for y in 0..10 {
            for x in 5..19 {
                let i = y * 24 + x;
                assert!((lv.a.data()[i] - slope).abs() < 1e-12);
                assert!((lv.b.data()[i] + slope).abs() < 1e-12);
                assert!(lv.residual_at(i, 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expansion_shifts_offset() {
        let reference = ImageGrid::from_fn(6, 4, |x, _| 0.1 * x as f64).unwrap();
        let lv = linearize_view(&reference, &reference, BaselineVec::new(1.0, 0.0).unwrap(), 0.75, GradientMode::Average)
            .unwrap();
        let w0 = DisparityField::constant(6, 4, 0.5).unwrap();
        let shifted = lv.clone().expanded_about(&w0).unwrap();
        for i in 0..24 {
            assert!((shifted.residual_at(i, 0.7) - lv.residual_at(i, 0.2)).abs() < 1e-15);
        }
    }

    #[test]
    fn mismatch_is_rejected() {
        let a = ImageGrid::zeros(4, 4).unwrap();
        let b = ImageGrid::zeros(4, 5).unwrap();
        assert!(linearize_view(&a, &b, BaselineVec::ZERO, 0.75, GradientMode::Average).is_err());
    }
}
