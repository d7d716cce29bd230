//! Domain types shared by every stage of the pipeline: scalar grids, view
//! sets with normalized baselines, disparity fields and solver settings.
//!
//! Everything here is an immutable value once constructed. Constructors
//! validate their invariants and return [`Error`] rather than panicking.
//!
//! Sign convention: a view `p` with normalized baseline `B′` sees the
//! reference content displaced so that `I_p(s) = I_q(s + B′·w(s))`. The
//! displacement reported by [`disparity_from_w`] is `B′·w`; resampling a view
//! onto the reference grid therefore samples it at `s − B′·w`.

use crate::error::{Error, Result};

/// A dense row-major scalar field. Used for intensities and for every
/// derived real-valued field (gradients, residuals, weights).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::param(format!(
                "grid {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite sample at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds a grid without re-checking finiteness. Callers inside the crate
    /// only use it on values produced by finite arithmetic on finite inputs.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_dims(self.dims(), other.dims())?;
        Self::new(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Clamps every sample into `[0, 1]`. Only used at ingestion boundaries.
    pub fn clamp_unit(&self) -> Self {
        Self::from_raw(
            self.width,
            self.height,
            self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        )
    }
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Per-pixel validity flags, row-major like [`ImageGrid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::param("mask length does not match dimensions"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn all_valid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count_valid(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }
}

/// Baseline between a view and the reference, in normalized units where the
/// nearest view has ∞-norm 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineVec {
    pub bx: f64,
    pub by: f64,
}

impl BaselineVec {
    pub const ZERO: BaselineVec = BaselineVec { bx: 0.0, by: 0.0 };

    pub fn new(bx: f64, by: f64) -> Result<Self> {
        if !bx.is_finite() || !by.is_finite() {
            return Err(Error::param("baseline components must be finite"));
        }
        Ok(Self { bx, by })
    }

    pub fn inf_norm(&self) -> f64 {
        self.bx.abs().max(self.by.abs())
    }

    pub fn l1_norm(&self) -> f64 {
        self.bx.abs() + self.by.abs()
    }

    pub fn is_zero(&self) -> bool {
        self.bx == 0.0 && self.by == 0.0
    }
}

/// Physical rig description, used only to convert between physical and
/// normalized units. The solver never needs it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraGeometry {
    pub focal_length_mm: f64,
    pub view_spacing_mm: f64,
    pub pixel_pitch_mm: f64,
}

impl CameraGeometry {
    pub fn new(focal_length_mm: f64, view_spacing_mm: f64, pixel_pitch_mm: f64) -> Result<Self> {
        let g = Self {
            focal_length_mm,
            view_spacing_mm,
            pixel_pitch_mm,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.focal_length_mm) && ok(self.view_spacing_mm) && ok(self.pixel_pitch_mm) {
            Ok(())
        } else {
            Err(Error::param("camera geometry values must be strictly positive"))
        }
    }

    /// Pixel displacement `B·F·r` for a physical baseline (mm) and a
    /// reciprocal depth (1/mm).
    pub fn pixel_disparity(&self, baseline_mm: f64, reciprocal_depth: f64) -> f64 {
        baseline_mm * self.focal_length_mm * reciprocal_depth / self.pixel_pitch_mm
    }

    /// Converts a reciprocal depth (1/mm) into normalized `w` units, i.e. the
    /// pixel displacement between adjacent views.
    pub fn w_from_reciprocal_depth(&self, reciprocal_depth: f64) -> f64 {
        self.pixel_disparity(self.view_spacing_mm, reciprocal_depth)
    }

    pub fn reciprocal_depth_from_w(&self, w: f64) -> f64 {
        w * self.pixel_pitch_mm / (self.view_spacing_mm * self.focal_length_mm)
    }
}

/// Divides physical baselines by the smallest nonzero ∞-norm so the nearest
/// view sits at unit distance. Ratios are preserved exactly.
pub fn normalize_baselines(
    raw: &[(f64, f64)],
    geometry: &CameraGeometry,
) -> Result<Vec<BaselineVec>> {
    geometry.validate()?;
    if raw.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::param("baselines must be finite"));
    }
    let scale = raw
        .iter()
        .map(|&(x, y)| x.abs().max(y.abs()))
        .filter(|&n| n > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !scale.is_finite() {
        return Err(Error::DegenerateGeometry(
            "all baselines are zero".to_string(),
        ));
    }
    Ok(raw
        .iter()
        .map(|&(x, y)| BaselineVec {
            bx: x / scale,
            by: y / scale,
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct View {
    pub image: ImageGrid,
    pub baseline: BaselineVec,
}

/// A reference view plus satellite views, all sharing one image size.
#[derive(Debug, Clone)]
pub struct ViewSet {
    views: Vec<View>,
    reference: usize,
}

impl ViewSet {
    pub fn new(views: Vec<View>, reference: usize) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::param("a view set needs at least two views"));
        }
        if reference >= views.len() {
            return Err(Error::param(format!(
                "reference index {reference} out of range for {} views",
                views.len()
            )));
        }
        let dims = views[0].image.dims();
        for v in &views[1..] {
            ensure_same_dims(dims, v.image.dims())?;
        }
        if !views[reference].baseline.is_zero() {
            return Err(Error::DegenerateGeometry(
                "the reference view must have baseline (0, 0)".to_string(),
            ));
        }
        for (i, a) in views.iter().enumerate() {
            for b in &views[i + 1..] {
                if a.baseline == b.baseline {
                    return Err(Error::DegenerateGeometry(format!(
                        "duplicate baseline ({}, {})",
                        a.baseline.bx, a.baseline.by
                    )));
                }
            }
        }
        let nearest = views
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != reference)
            .map(|(_, v)| v.baseline.inf_norm())
            .fold(f64::INFINITY, f64::min);
        if (nearest - 1.0).abs() > 1e-9 {
            return Err(Error::DegenerateGeometry(format!(
                "baselines are not normalized: nearest view has norm {nearest}"
            )));
        }
        Ok(Self { views, reference })
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn reference_index(&self) -> usize {
        self.reference
    }

    pub fn reference(&self) -> &ImageGrid {
        &self.views[self.reference].image
    }

    pub fn dims(&self) -> (usize, usize) {
        self.views[0].image.dims()
    }

    pub fn baselines(&self) -> Vec<BaselineVec> {
        self.views.iter().map(|v| v.baseline).collect()
    }

    /// Indices of the non-reference views at unit ∞-norm distance.
    pub fn adjacent_to_reference(&self) -> Vec<usize> {
        self.views
            .iter()
            .enumerate()
            .filter(|(i, v)| *i != self.reference && (v.baseline.inf_norm() - 1.0).abs() < 1e-9)
            .map(|(i, _)| i)
            .collect()
    }

    /// A new view set holding only `indices` (the reference is always kept).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut keep: Vec<usize> = indices.to_vec();
        if !keep.contains(&self.reference) {
            keep.push(self.reference);
        }
        keep.sort_unstable();
        keep.dedup();
        if let Some(&bad) = keep.iter().find(|&&i| i >= self.views.len()) {
            return Err(Error::param(format!("view index {bad} out of range")));
        }
        let reference = keep.iter().position(|&i| i == self.reference).unwrap();
        Self::new(keep.iter().map(|&i| self.views[i].clone()).collect(), reference)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// The reference image grid.
    Base,
    /// Twice the reference grid in each axis. Values are in fine-pixel units.
    Double,
}

/// Normalized reciprocal depth `w` per pixel. Values are displacements in
/// pixels of the field's own grid between unit-baseline views.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityField {
    grid: ImageGrid,
    resolution: Resolution,
}

impl DisparityField {
    pub fn new(grid: ImageGrid, resolution: Resolution) -> Self {
        Self { grid, resolution }
    }

    pub fn base(grid: ImageGrid) -> Self {
        Self::new(grid, Resolution::Base)
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Ok(Self::base(ImageGrid::zeros(width, height)?))
    }

    pub fn constant(width: usize, height: usize, w: f64) -> Result<Self> {
        Ok(Self::base(ImageGrid::filled(width, height, w)?))
    }

    pub fn grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn into_grid(self) -> ImageGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.grid.data()
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.grid.get(x, y)
    }
}

/// Per-pixel 2-D displacement in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    width: usize,
    height: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl DisplacementField {
    pub fn new(width: usize, height: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if dx.len() != width * height || dy.len() != width * height {
            return Err(Error::param("displacement length does not match dimensions"));
        }
        if dx.iter().chain(&dy).any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite displacement"));
        }
        Ok(Self {
            width,
            height,
            dx,
            dy,
        })
    }

    pub fn uniform(width: usize, height: usize, dx: f64, dy: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![dx; width * height],
            vec![dy; width * height],
        )
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.dx[i], self.dy[i])
    }

    pub fn dx(&self) -> &[f64] {
        &self.dx
    }

    pub fn dy(&self) -> &[f64] {
        &self.dy
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            dx: self.dx.iter().map(|v| v * k).collect(),
            dy: self.dy.iter().map(|v| v * k).collect(),
        }
    }
}

/// `B′·w(s)` at every pixel.
pub fn disparity_from_w(w: &DisparityField, b: BaselineVec) -> DisplacementField {
    let (width, height) = w.dims();
    DisplacementField {
        width,
        height,
        dx: w.values().iter().map(|v| b.bx * v).collect(),
        dy: w.values().iter().map(|v| b.by * v).collect(),
    }
}

/// Scale parameter of a Welsch penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WelschScale {
    Fixed(f64),
    /// Re-estimated from the adjacent-view residuals at every reweighting step.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyKind {
    L2,
    HuberL1 { epsilon: f64 },
    Welsch { sigma: WelschScale },
}

impl PenaltyKind {
    /// Huber transition used to realize L1 costs inside IRLS.
    pub const DEFAULT_HUBER_EPSILON: f64 = 1e-4;

    pub fn l1() -> Self {
        PenaltyKind::HuberL1 {
            epsilon: Self::DEFAULT_HUBER_EPSILON,
        }
    }

    pub fn welsch_auto() -> Self {
        PenaltyKind::Welsch {
            sigma: WelschScale::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PenaltyKind::L2 => Ok(()),
            PenaltyKind::HuberL1 { epsilon } if epsilon.is_finite() && epsilon > 0.0 => Ok(()),
            PenaltyKind::HuberL1 { epsilon } => {
                Err(Error::param(format!("Huber epsilon must be > 0, got {epsilon}")))
            }
            PenaltyKind::Welsch {
                sigma: WelschScale::Fixed(s),
            } if !(s.is_finite() && s > 0.0) => {
                Err(Error::param(format!("Welsch sigma must be > 0, got {s}")))
            }
            PenaltyKind::Welsch { .. } => Ok(()),
        }
    }

    pub fn is_auto(&self) -> bool {
        matches!(
            self,
            PenaltyKind::Welsch {
                sigma: WelschScale::Auto
            }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    /// Derivative-of-Gaussian applied to `½(I_q + I_p)`.
    #[default]
    Average,
    /// Derivative-of-Gaussian applied to `I_q + I_p` as written in the
    /// original formulation.
    PaperSum,
}

/// How the regularizer weights enter the Euler-Lagrange operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RegularizerForm {
    /// `∇·(W_r ∇w)` on the 9-point stencil: edge weights are the stencil
    /// coefficients times the mean of the endpoint weights. Symmetric and
    /// negative semi-definite; equal to the plain stencil when `W_r ≡ 1`.
    #[default]
    Divergence,
    /// `½(W_r∘∇² + ∇²∘W_r)`.
    Symmetrized,
    /// `W_r∘∇²` applied pointwise. Not symmetric in general.
    Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub data_penalty: PenaltyKind,
    pub reg_penalty: PenaltyKind,
    pub dog_sigma: f64,
    pub irls_iters: usize,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub schedule_k: f64,
    pub schedule_c: f64,
    pub gradient_mode: GradientMode,
    pub reg_form: RegularizerForm,
    pub seed: u64,
    /// Lower bound for the automatic Welsch scale.
    pub sigma_floor: f64,
    /// Highest image frequency (rad/pixel) assumed by the linearization
    /// check. `None` disables the coarse-to-fine fallback.
    pub lowpass_omega: Option<f64>,
    /// Expected disparity magnitude before the first stage, used by the
    /// linearization check on stage 0.
    pub initial_disparity_bound: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            data_penalty: PenaltyKind::welsch_auto(),
            reg_penalty: PenaltyKind::l1(),
            dog_sigma: 0.75,
            irls_iters: 10,
            cg_tol: 1e-6,
            cg_max_iters: 500,
            schedule_k: 1.0,
            schedule_c: 1.0,
            gradient_mode: GradientMode::Average,
            reg_form: RegularizerForm::Divergence,
            seed: 0,
            sigma_floor: 1e-4,
            lowpass_omega: None,
            initial_disparity_bound: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.alpha) {
            return Err(Error::param(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !positive(self.dog_sigma) {
            return Err(Error::param("dog_sigma must be > 0"));
        }
        if !positive(self.cg_tol) {
            return Err(Error::param("cg_tol must be > 0"));
        }
        if self.irls_iters == 0 {
            return Err(Error::param("irls_iters must be at least 1"));
        }
        if self.cg_max_iters == 0 {
            return Err(Error::param("cg_max_iters must be at least 1"));
        }
        if !positive(self.sigma_floor) {
            return Err(Error::param("sigma_floor must be > 0"));
        }
        if let Some(omega) = self.lowpass_omega {
            if !(omega > 0.0 && omega <= std::f64::consts::PI) {
                return Err(Error::param("lowpass_omega must lie in (0, π]"));
            }
        }
        self.data_penalty.validate()?;
        self.reg_penalty.validate()?;
        if self.reg_penalty.is_auto() {
            return Err(Error::param(
                "automatic Welsch scale is only supported for the data term",
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> CameraGeometry {
        CameraGeometry::new(50.0, 1.25, 0.01).unwrap()
    }

    fn bl(v: &[BaselineVec]) -> Vec<(f64, f64)> {
        v.iter().map(|b| (b.bx, b.by)).collect()
    }

    #[test]
    fn normalize_examples() {
        let out = normalize_baselines(&[(0.0, 0.0), (1.25, 0.0), (2.5, 0.0)], &geom()).unwrap();
        assert_eq!(bl(&out), vec![(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);

        let out = normalize_baselines(&[(0.0, 0.0), (-3.0, 0.0), (3.0, 0.0)], &geom()).unwrap();
        assert_eq!(bl(&out), vec![(0.0, 0.0), (-1.0, 0.0), (1.0, 0.0)]);

        let out = normalize_baselines(&[(0.0, 0.0), (0.0, 2.0), (4.0, 0.0)], &geom()).unwrap();
        assert_eq!(bl(&out), vec![(0.0, 0.0), (0.0, 1.0), (2.0, 0.0)]);
    }

    #[test]
    fn normalize_rejects_all_zero() {
        let err = normalize_baselines(&[(0.0, 0.0), (0.0, 0.0)], &geom()).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn normalize_is_idempotent() {
        let raw = [(0.0, 0.0), (-3.7, 1.1), (2.2, -0.4), (0.0, 5.0)];
        let once = normalize_baselines(&raw, &geom()).unwrap();
        let twice = normalize_baselines(&bl(&once), &geom()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn disparity_examples() {
        let w = DisparityField::constant(4, 3, 0.5).unwrap();
        let d = disparity_from_w(&w, BaselineVec::new(2.0, 0.0).unwrap());
        assert!(d.dx().iter().all(|&v| v == 1.0));
        assert!(d.dy().iter().all(|&v| v == 0.0));

        let z = DisparityField::zeros(4, 3).unwrap();
        let d = disparity_from_w(&z, BaselineVec::new(-3.0, 7.0).unwrap());
        assert!(d.dx().iter().chain(d.dy()).all(|&v| v == 0.0));

        let width = 8;
        let ramp = DisparityField::base(
            ImageGrid::from_fn(width, 2, |x, _| x as f64 / width as f64).unwrap(),
        );
        let d = disparity_from_w(&ramp, BaselineVec::new(0.0, 1.0).unwrap());
        for x in 0..width {
            assert_eq!(d.at(x, 1), (0.0, x as f64 / width as f64));
        }
    }

    #[test]
    fn viewset_rejects_mismatched_dims() {
        let a = View {
            image: ImageGrid::zeros(4, 4).unwrap(),
            baseline: BaselineVec::ZERO,
        };
        let b = View {
            image: ImageGrid::zeros(5, 4).unwrap(),
            baseline: BaselineVec::new(1.0, 0.0).unwrap(),
        };
        assert!(matches!(
            ViewSet::new(vec![a, b], 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn viewset_checks_reference_and_duplicates() {
        let img = ImageGrid::zeros(3, 3).unwrap();
        let v = |bx: f64| View {
            image: img.clone(),
            baseline: BaselineVec::new(bx, 0.0).unwrap(),
        };
        assert!(ViewSet::new(vec![v(0.0), v(1.0)], 1).is_err());
        assert!(ViewSet::new(vec![v(0.0), v(1.0), v(1.0)], 0).is_err());
        assert!(ViewSet::new(vec![v(0.0)], 0).is_err());
        let vs = ViewSet::new(vec![v(-1.0), v(0.0), v(1.0), v(2.0)], 1).unwrap();
        assert_eq!(vs.adjacent_to_reference(), vec![0, 2]);
        let sub = vs.subset(&[2, 3]).unwrap();
        assert_eq!(sub.len(), 3);
        assert_eq!(sub.reference_index(), 0);
    }

    #[test]
    fn image_grid_rejects_nan() {
        assert!(ImageGrid::new(2, 1, vec![0.0, f64::NAN]).is_err());
        assert!(ImageGrid::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn geometry_round_trip() {
        let g = geom();
        let r = 1.0 / 2500.0;
        let w = g.w_from_reciprocal_depth(r);
        assert!((w - 1.25 * 50.0 * r / 0.01).abs() < 1e-12);
        assert!((g.reciprocal_depth_from_w(w) - r).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            alpha: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            data_penalty: PenaltyKind::HuberL1 { epsilon: -1.0 },
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn disparity_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0,
                               w1 in proptest::collection::vec(-2.0f64..2.0, 12),
                               w2 in proptest::collection::vec(-2.0f64..2.0, 12)) {
            let f = |v: Vec<f64>| DisparityField::base(ImageGrid::new(4, 3, v).unwrap());
            let base = BaselineVec::new(1.5, -2.0).unwrap();
            let combo: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
            let d = disparity_from_w(&f(combo), base);
            let d1 = disparity_from_w(&f(w1), base);
            let d2 = disparity_from_w(&f(w2), base);
            for i in 0..12 {
                let ex = a * d1.dx()[i] + b * d2.dx()[i];
                let ey = a * d1.dy()[i] + b * d2.dy()[i];
                proptest::prop_assert!((d.dx()[i] - ex).abs() < 1e-12);
                proptest::prop_assert!((d.dy()[i] - ey).abs() < 1e-12);
            }
        }
    }
}
