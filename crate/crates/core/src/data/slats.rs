//! Synthetic scene of vertical slats in front of a textured background, seen
//! by a horizontal line of cameras.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::noise::add_noise_stream;
use crate::domain::{
    normalize_baselines, BaselineVec, CameraGeometry, DisparityField, ImageGrid, Resolution, View, ViewSet,
};
use crate::error::{Error, Result};

/// A vertical bar covering reference columns `x .. x + width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slat {
    pub x: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub n_views: usize,
    pub width: usize,
    pub height: usize,
    pub view_spacing_mm: f64,
    pub focal_length_mm: f64,
    pub pixel_pitch_mm: f64,
    /// Disparity between adjacent views, in pixels, of the background plane.
    pub background_w: f64,
    /// Same for the slats, which are nearer.
    pub slat_w: f64,
    pub slats: Vec<Slat>,
    pub texture_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            n_views: 31,
            width: 640,
            height: 360,
            view_spacing_mm: 1.25,
            focal_length_mm: 50.0,
            pixel_pitch_mm: 0.01,
            background_w: 0.25,
            slat_w: 1.0,
            slats: vec![
                Slat { x: 100.0, width: 24.0 },
                Slat { x: 236.0, width: 36.0 },
                Slat { x: 372.0, width: 40.0 },
                Slat { x: 516.0, width: 28.0 },
            ],
            texture_seed: 1,
        }
    }
}

impl SceneSpec {
    /// The default layout rescaled to a `width × height` image. Slat
    /// positions and widths scale with the width.
    pub fn scaled(width: usize, height: usize) -> Self {
        let base = Self::default();
        let f = width as f64 / base.width as f64;
        Self {
            width,
            height,
            slats: base
                .slats
                .iter()
                .map(|s| Slat {
                    x: (s.x * f).round(),
                    width: (s.width * f).round().max(1.0),
                })
                .collect(),
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Scene(m));
        if self.n_views < 3 || self.n_views.is_multiple_of(2) {
            return bad(format!("need an odd number of views >= 3, got {}", self.n_views));
        }
        if self.width == 0 || self.height == 0 {
            return bad("image dimensions must be positive".to_string());
        }
        if !(self.background_w.is_finite() && self.background_w >= 0.0) {
            return bad(format!("background_w must be >= 0, got {}", self.background_w));
        }
        if !(self.slat_w.is_finite() && self.slat_w > self.background_w) {
            return bad(format!(
                "slats must be nearer than the background: slat_w {} <= background_w {}",
                self.slat_w, self.background_w
            ));
        }
        let mut sorted = self.slats.clone();
        sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
        for s in &sorted {
            if !(s.width > 0.0 && s.x >= 0.0 && s.x + s.width <= self.width as f64) {
                return bad(format!("slat at x={} width={} leaves the image", s.x, s.width));
            }
        }
        for pair in sorted.windows(2) {
            if pair[0].x + pair[0].width > pair[1].x {
                return bad(format!("slats at x={} and x={} overlap", pair[0].x, pair[1].x));
            }
        }
        let covered: f64 = sorted.iter().map(|s| s.width).sum();
        if covered >= self.width as f64 {
            return bad("slats hide the whole background".to_string());
        }
        self.geometry()?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<CameraGeometry> {
        CameraGeometry::new(self.focal_length_mm, self.view_spacing_mm, self.pixel_pitch_mm)
    }

    pub fn reference_index(&self) -> usize {
        self.n_views / 2
    }

    pub fn baselines(&self) -> Result<Vec<BaselineVec>> {
        let c = self.reference_index() as f64;
        let raw: Vec<(f64, f64)> = (0..self.n_views)
            .map(|i| ((i as f64 - c) * self.view_spacing_mm, 0.0))
            .collect();
        normalize_baselines(&raw, &self.geometry()?)
    }

    /// Reference-frame interval `[lo, hi)` covered by a slat, in pixel-centre
    /// coordinates.
    fn slat_span(s: &Slat) -> (f64, f64) {
        (s.x - 0.5, s.x + s.width - 0.5)
    }

    fn w_at(&self, u: f64) -> f64 {
        if self.slats.iter().any(|s| {
            let (lo, hi) = Self::slat_span(s);
            u >= lo && u < hi
        }) {
            self.slat_w
        } else {
            self.background_w
        }
    }

    /// Number of reference pixels hidden from the view at `baseline`.
    pub fn occluded_pixels(&self, baseline: BaselineVec) -> usize {
        let shift_bg = baseline.bx * self.background_w;
        let shift_slat = baseline.bx * self.slat_w;
        let per_row = (0..self.width)
            .filter(|&x| {
                let u = x as f64;
                if self.w_at(u) == self.slat_w {
                    return false;
                }
                let seen_at = u - shift_bg;
                self.slats.iter().any(|s| {
                    let (lo, hi) = Self::slat_span(s);
                    seen_at >= lo - shift_slat && seen_at < hi - shift_slat
                })
            })
            .count();
        per_row * self.height
    }
}

/// Sum of random plane waves around 0.5, band-limited to a ring of
/// frequencies so that it can be evaluated exactly at any subpixel position.
#[derive(Debug, Clone)]
struct Texture {
    waves: Vec<[f64; 4]>,
}

impl Texture {
    const WAVES: usize = 16;
    const STD: f64 = 0.15;

    fn new(rng: &mut ChaCha8Rng) -> Self {
        let amp = Self::STD * (2.0 / Self::WAVES as f64).sqrt();
        let waves = (0..Self::WAVES)
            .map(|_| {
                let radius = rng.random_range(0.15..1.0);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                [radius * angle.cos(), radius * angle.sin(), phase, amp]
            })
            .collect();
        Self { waves }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        0.5 + self
            .waves
            .iter()
            .map(|[kx, ky, phase, amp]| amp * (kx * x + ky * y + phase).sin())
            .sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct SlatsScene {
    pub spec: SceneSpec,
    pub views: ViewSet,
    /// Reference-view disparity at twice the image resolution, in fine pixels.
    pub gt: DisparityField,
}

impl SlatsScene {
    /// Ground truth on the image grid, in image pixels.
    pub fn gt_base(&self) -> Result<DisparityField> {
        let spec = &self.spec;
        Ok(DisparityField::base(ImageGrid::from_fn(spec.width, spec.height, |x, _| {
            spec.w_at(x as f64)
        })?))
    }

    /// A copy with independent Gaussian noise on every view.
    pub fn with_noise(&self, variance: f64, seed: u64) -> Result<Self> {
        let views = self
            .views
            .views()
            .par_iter()
            .enumerate()
            .map(|(i, v)| {
                Ok(View {
                    image: add_noise_stream(&v.image, variance, seed, i as u64)?,
                    baseline: v.baseline,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec: self.spec.clone(),
            views: ViewSet::new(views, self.views.reference_index())?,
            gt: self.gt.clone(),
        })
    }
}

fn coverage(lo: f64, hi: f64, x: f64) -> f64 {
    (hi.min(x + 0.5) - lo.max(x - 0.5)).clamp(0.0, 1.0)
}

pub fn generate_slats(spec: &SceneSpec) -> Result<SlatsScene> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
    let background = Texture::new(&mut rng);
    let slat_tex = Texture::new(&mut rng);
    let baselines = spec.baselines()?;
    let (w, h) = (spec.width, spec.height);

    let images: Vec<ImageGrid> = baselines
        .par_iter()
        .map(|b| {
            let (sb, ss) = (b.bx * spec.background_w, b.bx * spec.slat_w);
            let (vb, vs) = (b.by * spec.background_w, b.by * spec.slat_w);
            let mut data = vec![0.0; w * h];
            for (y, row) in data.chunks_mut(w).enumerate() {
                let yf = y as f64;
                for (x, out) in row.iter_mut().enumerate() {
                    let xf = x as f64;
                    let cov: f64 = spec
                        .slats
                        .iter()
                        .map(|s| {
                            let (lo, hi) = SceneSpec::slat_span(s);
                            coverage(lo - ss, hi - ss, xf)
                        })
                        .sum();
                    let mut v = (1.0 - cov) * background.eval(xf + sb, yf + vb);
                    if cov > 0.0 {
                        v += cov * slat_tex.eval(xf + ss, yf + vs);
                    }
                    *out = v.clamp(0.0, 1.0);
                }
            }
            ImageGrid::new(w, h, data)
        })
        .collect::<Result<_>>()?;

    let views = images
        .into_iter()
        .zip(&baselines)
        .map(|(image, &baseline)| View { image, baseline })
        .collect();
    let gt = ImageGrid::from_fn(2 * w, 2 * h, |x, _| 2.0 * spec.w_at((x as f64 + 0.5) / 2.0 - 0.5))?;
    Ok(SlatsScene {
        spec: spec.clone(),
        views: ViewSet::new(views, spec.reference_index())?,
        gt: DisparityField::new(gt, Resolution::Double),
    })
}
