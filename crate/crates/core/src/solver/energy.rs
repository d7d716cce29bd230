use crate::domain::{ensure_same_dims, DisparityField};
use crate::error::Result;
use crate::robust::Penalty;
use crate::solver::operator::StencilGrid;
use crate::solver::LinearizedView;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub e_data: f64,
    pub e_reg: f64,
    /// `e_data + α_eff²·e_reg`.
    pub e_total: f64,
}

/// `α·√n` for a stage with `n` views (reference included).
pub fn effective_alpha(alpha: f64, n_views: usize) -> f64 {
    alpha * (n_views as f64).sqrt()
}

/// Linearized energy at `w`. `alpha_eff` is the already-scaled
/// regularization strength (see [`effective_alpha`]).
pub fn energy_eval(
    w: &DisparityField,
    views: &[LinearizedView],
    data: &Penalty,
    reg: &Penalty,
    alpha_eff: f64,
) -> Result<EnergyBreakdown> {
    let (width, height) = w.dims();
    energy_on(&StencilGrid::new(width, height), w, views, data, reg, alpha_eff)
}

pub(crate) fn energy_on(
    grid: &StencilGrid,
    w: &DisparityField,
    views: &[LinearizedView],
    data: &Penalty,
    reg: &Penalty,
    alpha_eff: f64,
) -> Result<EnergyBreakdown> {
    let wv = w.values();
    let mut e_data = 0.0;
    for view in views {
        ensure_same_dims(view.a.dims(), w.dims())?;
        for (i, &valid) in view.mask.data().iter().enumerate() {
            if valid {
                e_data += data.value(view.residual_at(i, wv[i]));
            }
        }
    }
    let e_reg: f64 = grid.gradient_norms(wv).into_iter().map(|g| reg.value(g)).sum();
    Ok(EnergyBreakdown {
        e_data,
        e_reg,
        e_total: e_data + alpha_eff * alpha_eff * e_reg,
    })
}
