use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::domain::{DisparityField, PenaltyKind, SolverConfig, ViewSet};
use crate::error::{Error, Result};
use crate::harness::metrics::rmse_against;
use crate::schedule::{run_progressive_observed, StagePlan};

/// Data-term and regularizer pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    L2L2,
    L2L1,
    L1L1,
    WelschL1,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::L2L2, Method::L2L1, Method::L1L1, Method::WelschL1];

    pub fn name(self) -> &'static str {
        match self {
            Method::L2L2 => "L2-L2",
            Method::L2L1 => "L2-L1",
            Method::L1L1 => "L1-L1",
            Method::WelschL1 => "Welsch-L1",
        }
    }

    pub fn penalties(self) -> (PenaltyKind, PenaltyKind) {
        match self {
            Method::L2L2 => (PenaltyKind::L2, PenaltyKind::L2),
            Method::L2L1 => (PenaltyKind::L2, PenaltyKind::l1()),
            Method::L1L1 => (PenaltyKind::l1(), PenaltyKind::l1()),
            Method::WelschL1 => (PenaltyKind::welsch_auto(), PenaltyKind::l1()),
        }
    }

    /// `base` with this method's penalties and the given α.
    pub fn configure(self, base: &SolverConfig, alpha: f64) -> SolverConfig {
        let (data_penalty, reg_penalty) = self.penalties();
        SolverConfig {
            alpha,
            data_penalty,
            reg_penalty,
            ..base.clone()
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::param(format!(
                    "unknown method {s:?}, expected one of l2-l2, l2-l1, l1-l1, welsch-l1"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub method: Method,
    pub alpha: f64,
    pub n_views: usize,
    /// NaN when the solver failed at this stage.
    pub rmse: f64,
    pub runtime_s: f64,
    pub stage: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Store wall-clock seconds per stage. Off by default so that repeated
    /// runs produce identical output.
    pub record_runtime: bool,
}

/// Runs every (method, α) cell over the plan and records the RMSE of the
/// accumulated estimate after every stage. A failing cell contributes a NaN
/// row for the stage that failed and the run moves on.
pub fn run_experiment(
    views: &ViewSet,
    gt: &DisparityField,
    methods: &[Method],
    alphas: &[f64],
    plan: &StagePlan,
    config: &SolverConfig,
    options: RunOptions,
) -> Result<Vec<ExperimentRow>> {
    if methods.is_empty() || alphas.is_empty() {
        return Err(Error::param("need at least one method and one alpha"));
    }
    let cells: Vec<(Method, f64)> = methods
        .iter()
        .flat_map(|&m| alphas.iter().map(move |&a| (m, a)))
        .collect();
    let mut rows: Vec<ExperimentRow> = cells
        .par_iter()
        .map(|&(method, alpha)| run_cell(views, gt, method, alpha, plan, config, options))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.alpha.total_cmp(&b.alpha))
            .then(a.stage.cmp(&b.stage))
    });
    Ok(rows)
}

fn run_cell(
    views: &ViewSet,
    gt: &DisparityField,
    method: Method,
    alpha: f64,
    plan: &StagePlan,
    config: &SolverConfig,
    options: RunOptions,
) -> Result<Vec<ExperimentRow>> {
    let cfg = method.configure(config, alpha);
    let start = Instant::now();
    let mut rows = Vec::with_capacity(plan.len());
    let mut metric_error = None;
    let outcome = run_progressive_observed(views, plan, &cfg, |stage| {
        let rmse = match rmse_against(&stage.w, gt) {
            Ok(v) => v,
            Err(e) => {
                metric_error.get_or_insert(e);
                f64::NAN
            }
        };
        rows.push(ExperimentRow {
            method,
            alpha,
            n_views: stage.n_views(),
            rmse,
            runtime_s: if options.record_runtime { start.elapsed().as_secs_f64() } else { 0.0 },
            stage: stage.stage,
            seed: cfg.seed,
        });
    });
    if let Some(e) = metric_error {
        return Err(e);
    }
    if let Err(e) = outcome {
        let failed = rows.len();
        eprintln!("{method} alpha={alpha}: {e}");
        rows.push(ExperimentRow {
            method,
            alpha,
            n_views: plan.stages()[failed.min(plan.len() - 1)].len(),
            rmse: f64::NAN,
            runtime_s: if options.record_runtime { start.elapsed().as_secs_f64() } else { 0.0 },
            stage: failed,
            seed: cfg.seed,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePoint {
    pub method: Method,
    pub n_views: usize,
    pub rmse: f64,
    pub alpha: f64,
}

/// Lowest RMSE over α for every (method, view count), ignoring failed rows.
pub fn best_alpha_envelope(rows: &[ExperimentRow]) -> Vec<EnvelopePoint> {
    let mut best: Vec<EnvelopePoint> = Vec::new();
    for row in rows.iter().filter(|r| r.rmse.is_finite()) {
        match best
            .iter_mut()
            .find(|p| p.method == row.method && p.n_views == row.n_views)
        {
            Some(p) if row.rmse < p.rmse => {
                p.rmse = row.rmse;
                p.alpha = row.alpha;
            }
            Some(_) => {}
            None => best.push(EnvelopePoint {
                method: row.method,
                n_views: row.n_views,
                rmse: row.rmse,
                alpha: row.alpha,
            }),
        }
    }
    best.sort_by(|a, b| a.method.cmp(&b.method).then(a.n_views.cmp(&b.n_views)));
    best
}

/// RMSE of `method` at `n_views` on the envelope.
pub fn envelope_at(envelope: &[EnvelopePoint], method: Method, n_views: usize) -> Option<f64> {
    envelope
        .iter()
        .find(|p| p.method == method && p.n_views == n_views)
        .map(|p| p.rmse)
}
