use crate::domain::{DisparityField, ImageGrid, SolverConfig};
use crate::error::{Error, Result};
use crate::robust::{estimate_sigma_d, SigmaState};
use crate::solver::cg::cg_solve_from;
use crate::solver::energy::{effective_alpha, energy_on, EnergyBreakdown};
use crate::solver::operator::{assemble_weights_on, ElOperator, StencilGrid};
use crate::solver::LinearizedView;

#[derive(Debug, Clone, PartialEq)]
pub struct IrlsOutcome {
    pub w: DisparityField,
    /// Energy at the start, then after every reweighted solve. Each entry is
    /// evaluated with the Welsch scale in force for that solve.
    pub trace: Vec<EnergyBreakdown>,
    /// Welsch scale used at each step (empty for fixed-scale penalties).
    pub sigmas: Vec<f64>,
    pub cg_iterations: Vec<usize>,
}

/// Minimizes the linearized energy of `views` by iteratively reweighted
/// least squares, starting at `w_init`.
///
/// `n_views` is the size of the active view set including the reference;
/// it scales α. `sigma_state` carries the automatic Welsch scale across
/// calls and is only touched when the data penalty is automatic.
pub fn irls_solve(
    views: &[LinearizedView],
    w_init: &DisparityField,
    config: &SolverConfig,
    n_views: usize,
    sigma_state: &mut SigmaState,
) -> Result<IrlsOutcome> {
    config.validate()?;
    if views.is_empty() {
        return Err(Error::param("IRLS needs at least one non-reference view"));
    }
    let dims = w_init.dims();
    for v in views {
        if v.a.dims() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                got: v.a.dims(),
            });
        }
    }

    // Sum views in a canonical order so the result does not depend on how
    // the caller listed them.
    let mut order: Vec<usize> = (0..views.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (views[i].baseline, views[j].baseline);
        a.bx.total_cmp(&b.bx).then(a.by.total_cmp(&b.by))
    });
    let views: Vec<LinearizedView> = order.iter().map(|&i| views[i].clone()).collect();
    let adjacent: Vec<&LinearizedView> = views
        .iter()
        .filter(|v| (v.baseline.inf_norm() - 1.0).abs() < 1e-9)
        .collect();

    let (width, height) = dims;
    let grid = StencilGrid::new(width, height);
    let alpha_eff = effective_alpha(config.alpha, n_views);
    let reg = config.reg_penalty.resolve(None)?;

    let mut w = w_init.clone();
    let mut trace = Vec::with_capacity(config.irls_iters + 1);
    let mut sigmas = Vec::new();
    let mut cg_iterations = Vec::with_capacity(config.irls_iters);

    for step in 0..config.irls_iters {
        let sigma = if config.data_penalty.is_auto() {
            if adjacent.is_empty() {
                return Err(Error::Estimation(
                    "automatic sigma needs a view adjacent to the reference".to_string(),
                ));
            }
            let proposal = estimate_sigma_d(&w, &adjacent, config.sigma_floor)?;
            let s = sigma_state.clamp(proposal)?;
            sigmas.push(s);
            Some(s)
        } else {
            None
        };
        let data = config.data_penalty.resolve(sigma)?;
        if step == 0 {
            trace.push(energy_on(&grid, &w, &views, &data, &reg, alpha_eff)?);
        }

        let (wd, wr) = assemble_weights_on(&grid, &views, &w, &data, &reg)?;
        let op = ElOperator::new(&grid, &views, &wd, &wr, alpha_eff, config.reg_form)?;
        let mut rhs = vec![0.0; grid.len()];
        for (view, weights) in views.iter().zip(&wd) {
            for (((r, &a), &b), &wt) in rhs
                .iter_mut()
                .zip(view.a.data())
                .zip(view.b.data())
                .zip(weights.data())
            {
                *r -= wt * a * b;
            }
        }
        let outcome = cg_solve_from(&op, &rhs, w.values(), config.cg_tol, config.cg_max_iters)
            .map_err(|e| match e {
                Error::Numerical { iteration, message } => Error::Numerical {
                    iteration,
                    message: format!("IRLS step {step}: {message}"),
                },
                other => other,
            })?;
        cg_iterations.push(outcome.iterations);
        w = DisparityField::new(
            ImageGrid::new(width, height, outcome.solution).map_err(|_| Error::Numerical {
                iteration: outcome.iterations,
                message: format!("IRLS step {step} produced a non-finite disparity"),
            })?,
            w_init.resolution(),
        );
        trace.push(energy_on(&grid, &w, &views, &data, &reg, alpha_eff)?);
    }

    Ok(IrlsOutcome {
        w,
        trace,
        sigmas,
        cg_iterations,
    })
}
