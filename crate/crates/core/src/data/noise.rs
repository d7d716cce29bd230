use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::ImageGrid;
use crate::error::{Error, Result};

/// Adds i.i.d. zero-mean Gaussian noise of the given variance and clamps the
/// result to [0, 1].
pub fn add_noise(img: &ImageGrid, variance: f64, seed: u64) -> Result<ImageGrid> {
    add_noise_stream(img, variance, seed, 0)
}

/// [`add_noise`] drawing from an independent stream of the same seed, so each
/// view of a scene gets its own noise.
pub fn add_noise_stream(img: &ImageGrid, variance: f64, seed: u64, stream: u64) -> Result<ImageGrid> {
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(Error::param(format!("noise variance must be >= 0, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::param(e.to_string()))?;
    let (w, h) = img.dims();
    let data = img
        .data()
        .iter()
        .map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    ImageGrid::new(w, h, data)
}
