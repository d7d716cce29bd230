//! Progressive inclusion of views, with warping of the original images by the
//! accumulated estimate between stages.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::domain::{BaselineVec, DisparityField, ImageGrid, Mask, SolverConfig, ViewSet};
use crate::error::{Error, Result};
use crate::hires_warp::multi_hypothesis_warp_upsampled;
use crate::imgproc::{pyramid_down, upsample_sinc2};
use crate::robust::SigmaState;
use crate::solver::{irls_solve, linearize_view, EnergyBreakdown, LinearizedView};

#[derive(Debug, Clone, PartialEq)]
pub enum PlanMode {
    /// Stage `s` holds every view with `‖B′‖∞ ≤ k + s·c`.
    Gate { k: f64, c: f64 },
    /// One view per stage in the given order (reference excluded).
    Custom(Vec<usize>),
    /// One view per stage ordered by `‖B′‖∞`, x axis before y axis,
    /// negative before positive.
    Crosshair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    stages: Vec<Vec<usize>>,
    mode: PlanMode,
}

impl StagePlan {
    /// Builds a plan from explicit stages after checking nesting against
    /// `viewset`.
    pub fn from_stages(viewset: &ViewSet, stages: Vec<Vec<usize>>) -> Result<Self> {
        let order = stages.iter().flatten().copied().collect::<Vec<_>>();
        let plan = Self {
            stages,
            mode: PlanMode::Custom(order),
        };
        plan.validate(viewset)?;
        Ok(plan)
    }

    pub fn stages(&self) -> &[Vec<usize>] {
        &self.stages
    }

    pub fn mode(&self) -> &PlanMode {
        &self.mode
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    fn validate(&self, viewset: &ViewSet) -> Result<()> {
        let reference = viewset.reference_index();
        let Some(first) = self.stages.first() else {
            return Err(Error::Plan("plan has no stages".to_string()));
        };
        if first.len() < 2 {
            return Err(Error::Plan("the first stage needs at least two views".to_string()));
        }
        let mut previous: &[usize] = &[];
        for (s, stage) in self.stages.iter().enumerate() {
            if stage.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::Plan(format!("stage {s} is not a sorted set")));
            }
            if stage.iter().any(|&i| i >= viewset.len()) {
                return Err(Error::Plan(format!("stage {s} names a view out of range")));
            }
            if !stage.contains(&reference) {
                return Err(Error::Plan(format!("stage {s} lacks the reference view")));
            }
            if !previous.iter().all(|i| stage.contains(i)) {
                return Err(Error::Plan(format!("stage {s} drops views of the previous stage")));
            }
            previous = stage;
        }
        if previous.len() != viewset.len() {
            return Err(Error::Plan(format!(
                "final stage has {} of {} views",
                previous.len(),
                viewset.len()
            )));
        }
        Ok(())
    }
}

/// Views whose baseline ∞-norm is at most `k + s·c`; always includes the
/// reference. Indices ascend.
pub fn views_at_stage(viewset: &ViewSet, k: f64, c: f64, s: usize) -> Vec<usize> {
    let gate = k + s as f64 * c;
    viewset
        .views()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.baseline.inf_norm() <= gate + 1e-9)
        .map(|(i, _)| i)
        .collect()
}

fn crosshair_key(b: BaselineVec) -> (f64, u8, u8) {
    let axis = if b.by == 0.0 {
        0
    } else if b.bx == 0.0 {
        1
    } else {
        2
    };
    let negative = if axis == 1 { b.by < 0.0 } else { b.bx < 0.0 };
    (b.inf_norm(), axis, if negative { 0 } else { 1 })
}

/// Order in which [`PlanMode::Crosshair`] adds the non-reference views.
pub fn crosshair_order(viewset: &ViewSet) -> Vec<usize> {
    let reference = viewset.reference_index();
    let mut order: Vec<usize> = (0..viewset.len()).filter(|&i| i != reference).collect();
    let key = |i: usize| crosshair_key(viewset.views()[i].baseline);
    order.sort_by(|&i, &j| {
        let (a, b) = (key(i), key(j));
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then_with(|| {
                let (p, q) = (viewset.views()[i].baseline, viewset.views()[j].baseline);
                p.bx.total_cmp(&q.bx).then(p.by.total_cmp(&q.by))
            })
    });
    order
}

fn one_at_a_time(viewset: &ViewSet, order: &[usize]) -> Result<Vec<Vec<usize>>> {
    let reference = viewset.reference_index();
    let mut seen = vec![false; viewset.len()];
    seen[reference] = true;
    let mut current = vec![reference];
    let mut stages = Vec::with_capacity(order.len());
    for &i in order {
        if i >= viewset.len() {
            return Err(Error::Plan(format!("view {i} is out of range")));
        }
        if i == reference {
            continue;
        }
        if seen[i] {
            return Err(Error::Plan(format!("view {i} appears twice in the order")));
        }
        seen[i] = true;
        current.push(i);
        let mut stage = current.clone();
        stage.sort_unstable();
        stages.push(stage);
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Plan(format!("order omits view {missing}")));
    }
    Ok(stages)
}

pub fn plan_schedule(viewset: &ViewSet, mode: PlanMode) -> Result<StagePlan> {
    let stages = match &mode {
        PlanMode::Gate { k, c } => {
            if !(k.is_finite() && *k >= 1.0) || !(c.is_finite() && *c > 0.0) {
                return Err(Error::param(format!("gate needs k >= 1 and c > 0, got k={k}, c={c}")));
            }
            let widest = viewset
                .baselines()
                .iter()
                .map(|b| b.inf_norm())
                .fold(0.0, f64::max);
            let last = ((widest - k) / c).ceil().max(0.0) as usize;
            let mut stages: Vec<Vec<usize>> = Vec::new();
            for s in 0..=last {
                let stage = views_at_stage(viewset, *k, *c, s);
                if stages.last() != Some(&stage) {
                    stages.push(stage);
                }
            }
            stages
        }
        PlanMode::Custom(order) => one_at_a_time(viewset, order)?,
        PlanMode::Crosshair => one_at_a_time(viewset, &crosshair_order(viewset))?,
    };
    let plan = StagePlan { stages, mode };
    plan.validate(viewset)?;
    Ok(plan)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LowpassDecision {
    pub needed: bool,
    /// Number of 2× low-pass levels that bring the phase error under π/2.
    pub levels: usize,
}

/// Pyramid levels needed so that `omega_max · displacement` stays within
/// π/2, each level halving the effective frequency.
pub fn lowpass_levels(displacement_px: f64, omega_max: f64) -> LowpassDecision {
    let mut product = omega_max * displacement_px.abs();
    let mut levels = 0;
    while product > FRAC_PI_2 * (1.0 + 1e-12) && levels < 16 {
        product /= 2.0;
        levels += 1;
    }
    LowpassDecision {
        needed: levels > 0,
        levels,
    }
}

fn percentile_95(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let rank = ((0.95 * mags.len() as f64).ceil() as usize).clamp(1, mags.len());
    mags[rank - 1]
}

/// Decides whether the linearization is trustworthy for the active views,
/// using the 95th percentile of `|residual_w|` as the expected residual.
pub fn needs_lowpass(
    baselines: &[BaselineVec],
    residual_w: &DisparityField,
    omega_max: f64,
) -> Result<LowpassDecision> {
    if !(omega_max > 0.0 && omega_max <= std::f64::consts::PI) {
        return Err(Error::param(format!("omega_max must lie in (0, pi], got {omega_max}")));
    }
    let widest = baselines
        .iter()
        .map(|b| b.bx.hypot(b.by))
        .fold(0.0, f64::max);
    Ok(lowpass_levels(widest * percentile_95(residual_w.values()), omega_max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub stage: usize,
    pub views: Vec<usize>,
    /// Accumulated estimate after this stage.
    pub w: DisparityField,
    /// Change made by this stage.
    pub residual: DisparityField,
    pub energy: Vec<EnergyBreakdown>,
    pub sigmas: Vec<f64>,
    pub cg_iterations: Vec<usize>,
    pub lowpass_levels: usize,
}

impl StageResult {
    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn residual_mean_abs(&self) -> f64 {
        let v = self.residual.values();
        v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64
    }
}

pub fn run_progressive(viewset: &ViewSet, plan: &StagePlan, config: &SolverConfig) -> Result<Vec<StageResult>> {
    let mut out = Vec::with_capacity(plan.len());
    run_progressive_observed(viewset, plan, config, |r| out.push(r.clone()))?;
    Ok(out)
}

/// Like [`run_progressive`] but hands each stage to `observer` instead of
/// collecting them. Returns the final estimate.
pub fn run_progressive_observed(
    viewset: &ViewSet,
    plan: &StagePlan,
    config: &SolverConfig,
    mut observer: impl FnMut(&StageResult),
) -> Result<DisparityField> {
    config.validate()?;
    plan.validate(viewset)?;
    let (width, height) = viewset.dims();
    let mut upsampled: Vec<Option<ImageGrid>> = vec![None; viewset.len()];
    let mut w_total = DisparityField::zeros(width, height)?;
    let mut previous_residual: Option<DisparityField> = None;
    let mut sigma_state = SigmaState::new();

    for (s, stage) in plan.stages().iter().enumerate() {
        let wrap = |e: Error| Error::Stage {
            stage: s,
            source: Box::new(e),
        };
        let others: Vec<usize> = stage
            .iter()
            .copied()
            .filter(|&i| i != viewset.reference_index())
            .collect();

        let levels = match config.lowpass_omega {
            Some(omega) => {
                let baselines: Vec<BaselineVec> = others.iter().map(|&i| viewset.views()[i].baseline).collect();
                let expected = match (&previous_residual, config.initial_disparity_bound) {
                    (Some(r), _) => Some(r.clone()),
                    (None, Some(bound)) => Some(DisparityField::constant(width, height, bound).map_err(wrap)?),
                    (None, None) => None,
                };
                match expected {
                    Some(r) => needs_lowpass(&baselines, &r, omega).map_err(wrap)?.levels,
                    None => 0,
                }
            }
            None => 0,
        };

        let mut estimate = w_total.clone();
        let mut energy = Vec::new();
        let mut sigmas = Vec::new();
        let mut cg_iterations = Vec::new();
        for level in (0..=levels).rev() {
            let warped = warp_views(viewset, &others, &estimate, &mut upsampled).map_err(wrap)?;
            let outcome = solve_level(viewset, &others, &warped, &estimate, level, config, stage.len(), &mut sigma_state)
                .map_err(wrap)?;
            estimate = outcome.0;
            energy.extend(outcome.1.trace);
            sigmas.extend(outcome.1.sigmas);
            cg_iterations.extend(outcome.1.cg_iterations);
        }

        let residual = DisparityField::base(estimate.grid().zip_map(w_total.grid(), |a, b| a - b).map_err(wrap)?);
        w_total = estimate;
        let result = StageResult {
            stage: s,
            views: stage.clone(),
            w: w_total.clone(),
            residual: residual.clone(),
            energy,
            sigmas,
            cg_iterations,
            lowpass_levels: levels,
        };
        observer(&result);
        previous_residual = Some(residual);
    }
    Ok(w_total)
}

/// Original images of `others`, warped toward the reference by `w` and paired
/// with validity masks. A zero field leaves the images untouched.
fn warp_views(
    viewset: &ViewSet,
    others: &[usize],
    w: &DisparityField,
    upsampled: &mut [Option<ImageGrid>],
) -> Result<Vec<(ImageGrid, Mask)>> {
    if w.values().iter().all(|&v| v == 0.0) {
        let (width, height) = viewset.dims();
        return Ok(others
            .iter()
            .map(|&i| (viewset.views()[i].image.clone(), Mask::all_valid(width, height)))
            .collect());
    }
    let missing: Vec<usize> = others.iter().copied().filter(|&i| upsampled[i].is_none()).collect();
    let fresh: Vec<ImageGrid> = missing
        .par_iter()
        .map(|&i| upsample_sinc2(&viewset.views()[i].image))
        .collect();
    for (i, up) in missing.into_iter().zip(fresh) {
        upsampled[i] = Some(up);
    }
    let upsampled = &*upsampled;
    others
        .par_iter()
        .map(|&i| {
            let up = upsampled[i].as_ref().expect("upsampled above");
            multi_hypothesis_warp_upsampled(up, w, viewset.views()[i].baseline)
        })
        .collect()
}

fn downsample_mask(mask: &Mask) -> Result<Mask> {
    let (w, h) = mask.dims();
    let (ow, oh) = (w.div_ceil(2), h.div_ceil(2));
    let at = |x: usize, y: usize| mask.get(x.min(w - 1), y.min(h - 1));
    Mask::new(
        ow,
        oh,
        (0..oh)
            .flat_map(|y| (0..ow).map(move |x| (x, y)))
            .map(|(x, y)| at(2 * x, 2 * y) && at(2 * x + 1, 2 * y) && at(2 * x, 2 * y + 1) && at(2 * x + 1, 2 * y + 1))
            .collect(),
    )
}

/// Averages 2×2 blocks and halves the values, matching one pyramid level.
fn downsample_field(w: &ImageGrid) -> ImageGrid {
    let (width, height) = w.dims();
    let (ow, oh) = (width.div_ceil(2), height.div_ceil(2));
    let at = |x: usize, y: usize| w.get(x.min(width - 1), y.min(height - 1));
    ImageGrid::from_raw(
        ow,
        oh,
        (0..oh)
            .flat_map(|y| (0..ow).map(move |x| (x, y)))
            .map(|(x, y)| 0.125 * (at(2 * x, 2 * y) + at(2 * x + 1, 2 * y) + at(2 * x, 2 * y + 1) + at(2 * x + 1, 2 * y + 1)))
            .collect(),
    )
}

/// Nearest-neighbour expansion of a level-`levels` field to `dims`, with
/// values scaled to fine pixels.
fn expand_field(coarse: &ImageGrid, levels: usize, dims: (usize, usize)) -> ImageGrid {
    let f = 1usize << levels;
    let scale = f as f64;
    ImageGrid::from_raw(
        dims.0,
        dims.1,
        (0..dims.1)
            .flat_map(|y| (0..dims.0).map(move |x| (x, y)))
            .map(|(x, y)| scale * coarse.get(x / f, y / f))
            .collect(),
    )
}

#[allow(clippy::too_many_arguments)]
fn solve_level(
    viewset: &ViewSet,
    others: &[usize],
    warped: &[(ImageGrid, Mask)],
    estimate: &DisparityField,
    level: usize,
    config: &SolverConfig,
    n_views: usize,
    sigma_state: &mut SigmaState,
) -> Result<(DisparityField, crate::solver::IrlsOutcome)> {
    let mut reference = viewset.reference().clone();
    let mut images: Vec<(ImageGrid, Mask)> = warped.to_vec();
    let mut around = estimate.grid().clone();
    for _ in 0..level {
        reference = pyramid_down(&reference)?;
        for (img, mask) in images.iter_mut() {
            *img = pyramid_down(img)?;
            *mask = downsample_mask(mask)?;
        }
        around = downsample_field(&around);
    }
    let around = DisparityField::base(around);
    let views = others
        .iter()
        .zip(&images)
        .map(|(&i, (img, mask))| {
            linearize_view(&reference, img, viewset.views()[i].baseline, config.dog_sigma, config.gradient_mode)?
                .with_mask(mask.clone())?
                .expanded_about(&around)
        })
        .collect::<Result<Vec<LinearizedView>>>()?;
    let outcome = irls_solve(&views, &around, config, n_views, sigma_state)?;
    let updated = if level == 0 {
        outcome.w.clone()
    } else {
        let delta = outcome.w.grid().zip_map(around.grid(), |a, b| a - b)?;
        let delta = expand_field(&delta, level, estimate.dims());
        DisparityField::base(estimate.grid().zip_map(&delta, |a, b| a + b)?)
    };
    Ok((updated, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{PenaltyKind, View};

    fn line_array(n: usize, size: usize) -> ViewSet {
        let half = (n / 2) as isize;
        let views = (0..n as isize)
            .map(|i| View {
                image: ImageGrid::filled(size, size, 0.5).unwrap(),
                baseline: BaselineVec::new((i - half) as f64, 0.0).unwrap(),
            })
            .collect();
        ViewSet::new(views, n / 2).unwrap()
    }

    fn grid_array(n: usize, size: usize) -> ViewSet {
        let half = (n / 2) as isize;
        let mut views = Vec::new();
        for y in 0..n as isize {
            for x in 0..n as isize {
                views.push(View {
                    image: ImageGrid::filled(size, size, 0.5).unwrap(),
                    baseline: BaselineVec::new((x - half) as f64, (y - half) as f64).unwrap(),
                });
            }
        }
        ViewSet::new(views, n * n / 2).unwrap()
    }

    #[test]
    fn gate_counts_on_linear_array() {
        let vs = line_array(31, 4);
        assert_eq!(views_at_stage(&vs, 1.0, 1.0, 0).len(), 3);
        assert_eq!(views_at_stage(&vs, 1.0, 1.0, 1).len(), 5);
        assert_eq!(views_at_stage(&vs, 1.0, 1.0, 100).len(), 31);
        let plan = plan_schedule(&vs, PlanMode::Gate { k: 1.0, c: 1.0 }).unwrap();
        let sizes: Vec<usize> = plan.stages().iter().map(Vec::len).collect();
        assert_eq!(sizes, (0..15).map(|s| 3 + 2 * s).collect::<Vec<_>>());
        assert!(plan_schedule(&vs, PlanMode::Gate { k: 0.5, c: 1.0 }).is_err());
    }

    #[test]
    fn two_views_make_one_stage() {
        let views = vec![
            View {
                image: ImageGrid::filled(4, 4, 0.1).unwrap(),
                baseline: BaselineVec::ZERO,
            },
            View {
                image: ImageGrid::filled(4, 4, 0.1).unwrap(),
                baseline: BaselineVec::new(1.0, 0.0).unwrap(),
            },
        ];
        let vs = ViewSet::new(views, 0).unwrap();
        for mode in [PlanMode::Gate { k: 1.0, c: 1.0 }, PlanMode::Crosshair] {
            assert_eq!(plan_schedule(&vs, mode).unwrap().stages(), &[vec![0, 1]]);
        }
    }

    #[test]
    fn crosshair_on_nine_by_nine() {
        let full = grid_array(9, 2);
        let cross: Vec<usize> = (0..81)
            .filter(|&i| {
                let b = full.views()[i].baseline;
                b.bx == 0.0 || b.by == 0.0
            })
            .collect();
        let vs = full.subset(&cross).unwrap();
        assert_eq!(vs.len(), 17);
        let plan = plan_schedule(&vs, PlanMode::Crosshair).unwrap();
        assert_eq!(plan.len(), 16);
        assert_eq!(plan.stages().last().unwrap().len(), 17);
        let b = |i: usize| vs.views()[i].baseline;
        let order = crosshair_order(&vs);
        let first: Vec<(f64, f64)> = order[..4].iter().map(|&i| (b(i).bx, b(i).by)).collect();
        assert_eq!(first, vec![(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)]);
        for pair in plan.stages().windows(2) {
            assert!(pair[0].iter().all(|i| pair[1].contains(i)));
            assert_eq!(pair[1].len(), pair[0].len() + 1);
        }
    }

    #[test]
    fn custom_order_must_cover_all_views() {
        let vs = line_array(5, 2);
        assert!(plan_schedule(&vs, PlanMode::Custom(vec![1, 3, 0, 4])).is_ok());
        assert!(matches!(plan_schedule(&vs, PlanMode::Custom(vec![1, 3, 0])), Err(Error::Plan(_))));
        assert!(matches!(plan_schedule(&vs, PlanMode::Custom(vec![1, 1, 3, 0, 4])), Err(Error::Plan(_))));
    }

    #[test]
    fn lowpass_thresholds() {
        use std::f64::consts::PI;
        let b = [BaselineVec::new(1.0, 0.0).unwrap()];
        let field = |v: f64| DisparityField::constant(4, 4, v).unwrap();
        assert!(!needs_lowpass(&b, &field(0.5), PI).unwrap().needed);
        assert_eq!(
            needs_lowpass(&b, &field(2.0), PI).unwrap(),
            LowpassDecision { needed: true, levels: 2 }
        );
        assert!(!needs_lowpass(&b, &field(0.0), PI).unwrap().needed);
        assert!(needs_lowpass(&b, &field(1.0), 4.0).is_err());
        // the 95th percentile ignores a few extreme pixels
        let mut v = vec![0.1; 100];
        v[0] = 50.0;
        let sparse = DisparityField::base(ImageGrid::new(10, 10, v).unwrap());
        assert!(!needs_lowpass(&b, &sparse, PI).unwrap().needed);
    }

    fn texture(x: f64, y: f64) -> f64 {
        0.5 + 0.15 * (0.8 * x + 0.3).sin() * (0.5 * y).cos() + 0.1 * (0.6 * y - 0.35 * x).cos()
    }

    fn shifted_set(n: usize, size: usize, w0: f64) -> ViewSet {
        let half = (n / 2) as isize;
        let views = (0..n as isize)
            .map(|i| {
                let b = (i - half) as f64;
                View {
                    image: ImageGrid::from_fn(size, size, |x, y| texture(x as f64 + b * w0, y as f64)).unwrap(),
                    baseline: BaselineVec::new(b, 0.0).unwrap(),
                }
            })
            .collect();
        ViewSet::new(views, n / 2).unwrap()
    }

    fn fast_config() -> SolverConfig {
        SolverConfig {
            alpha: 0.05,
            irls_iters: 5,
            cg_tol: 1e-8,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn single_stage_equals_irls() {
        let vs = shifted_set(3, 24, 0.3);
        let plan = plan_schedule(&vs, PlanMode::Gate { k: 1.0, c: 1.0 }).unwrap();
        assert_eq!(plan.len(), 1);
        let cfg = fast_config();
        let staged = run_progressive(&vs, &plan, &cfg).unwrap();
        let views: Vec<LinearizedView> = [0, 2]
            .iter()
            .map(|&i| {
                linearize_view(vs.reference(), &vs.views()[i].image, vs.views()[i].baseline, 0.75, cfg.gradient_mode)
                    .unwrap()
            })
            .collect();
        let direct = irls_solve(&views, &DisparityField::zeros(24, 24).unwrap(), &cfg, 3, &mut SigmaState::new()).unwrap();
        assert_eq!(staged[0].w, direct.w);
    }

    #[test]
    fn later_stage_shrinks_residual() {
        let vs = shifted_set(5, 32, 0.4);
        let plan = plan_schedule(&vs, PlanMode::Gate { k: 1.0, c: 1.0 }).unwrap();
        assert_eq!(plan.len(), 2);
        let stages = run_progressive(&vs, &plan, &fast_config()).unwrap();
        assert!(stages[1].residual_mean_abs() < stages[0].residual_mean_abs());
        let err: f64 = stages[1].w.values().iter().map(|v| (v - 0.4).abs()).sum::<f64>() / 1024.0;
        assert!(err < 0.05, "mean abs error {err}");
    }

    #[test]
    fn observer_has_no_effect() {
        let vs = shifted_set(5, 20, 0.25);
        let plan = plan_schedule(&vs, PlanMode::Crosshair).unwrap();
        let cfg = fast_config();
        let collected = run_progressive(&vs, &plan, &cfg).unwrap();
        let quiet = run_progressive_observed(&vs, &plan, &cfg, |_| {}).unwrap();
        assert_eq!(collected.last().unwrap().w, quiet);
    }

    #[test]
    fn warps_always_start_from_originals() {
        let vs = shifted_set(3, 16, 0.2);
        let w = DisparityField::constant(16, 16, 0.2).unwrap();
        let mut cache = vec![None; 3];
        let first = warp_views(&vs, &[0, 2], &w, &mut cache).unwrap();
        let second = warp_views(&vs, &[0, 2], &w, &mut cache).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn coarse_to_fine_handles_large_shift() {
        let vs = shifted_set(3, 48, 2.5);
        let plan = plan_schedule(&vs, PlanMode::Gate { k: 1.0, c: 1.0 }).unwrap();
        let cfg = SolverConfig {
            lowpass_omega: Some(std::f64::consts::PI / 2.0),
            initial_disparity_bound: Some(2.5),
            irls_iters: 8,
            data_penalty: PenaltyKind::L2,
            ..fast_config()
        };
        let stages = run_progressive(&vs, &plan, &cfg).unwrap();
        assert!(stages[0].lowpass_levels >= 1);
        let mut err = 0.0;
        for y in 10..38 {
            for x in 10..38 {
                err += (stages[0].w.get(x, y) - 2.5).abs();
            }
        }
        err /= 28.0 * 28.0;
        assert!(err < 0.3, "mean abs error {err}");
    }

    #[test]
    fn stage_errors_carry_index() {
        // the first stage pairs the reference with a view two units away, so
        // the automatic Welsch scale has no adjacent view to estimate from
        let vs = shifted_set(5, 8, 0.1);
        let plan = plan_schedule(&vs, PlanMode::Custom(vec![0, 1, 3, 4])).unwrap();
        let err = run_progressive(&vs, &plan, &fast_config()).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: 0, ref source } if matches!(**source, Error::Estimation(_))));
    }
}
