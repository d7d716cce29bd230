//! Robust penalties, their IRLS weights, and the automatic Welsch scale.
//!
//! Every penalty `φ` here has `φ(√q)` concave in `q`, so the weight
//! `W(x) = φ′(x)/x` defines a quadratic majorizer `½·W(x₀)·x² + const` that
//! touches `φ` at `x₀`. That is what makes the IRLS energy trace monotone.

use crate::domain::{DisparityField, PenaltyKind, WelschScale};
use crate::error::{Error, Result};
use crate::solver::LinearizedView;

/// A penalty with every parameter bound, ready for evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    L2,
    Huber { epsilon: f64 },
    Welsch { sigma: f64 },
}

impl Penalty {
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Penalty::L2 => 0.5 * x * x,
            Penalty::Huber { epsilon } => {
                let ax = x.abs();
                if ax <= epsilon {
                    x * x / (2.0 * epsilon)
                } else {
                    ax - 0.5 * epsilon
                }
            }
            Penalty::Welsch { sigma } => {
                let s2 = sigma * sigma;
                -s2 * (-x * x / (2.0 * s2)).exp_m1()
            }
        }
    }

    /// `φ′(x)/x`, finite at zero for every kind.
    #[inline]
    pub fn weight(&self, x: f64) -> f64 {
        match *self {
            Penalty::L2 => 1.0,
            Penalty::Huber { epsilon } => {
                let ax = x.abs();
                if ax <= epsilon {
                    1.0 / epsilon
                } else {
                    1.0 / ax
                }
            }
            Penalty::Welsch { sigma } => (-x * x / (2.0 * sigma * sigma)).exp(),
        }
    }
}

impl PenaltyKind {
    /// Binds the penalty. `sigma` supplies the scale of an automatic Welsch
    /// penalty and is ignored otherwise.
    pub fn resolve(&self, sigma: Option<f64>) -> Result<Penalty> {
        self.validate()?;
        Ok(match *self {
            PenaltyKind::L2 => Penalty::L2,
            PenaltyKind::HuberL1 { epsilon } => Penalty::Huber { epsilon },
            PenaltyKind::Welsch {
                sigma: WelschScale::Fixed(s),
            } => Penalty::Welsch { sigma: s },
            PenaltyKind::Welsch {
                sigma: WelschScale::Auto,
            } => match sigma {
                Some(s) if s.is_finite() && s > 0.0 => Penalty::Welsch { sigma: s },
                Some(s) => return Err(Error::param(format!("Welsch sigma must be > 0, got {s}"))),
                None => {
                    return Err(Error::State(
                        "automatic Welsch sigma has not been estimated yet".to_string(),
                    ))
                }
            },
        })
    }
}

pub fn penalty_value(kind: &PenaltyKind, x: f64) -> Result<f64> {
    Ok(kind.resolve(None)?.value(x))
}

pub fn penalty_weight(kind: &PenaltyKind, x: f64) -> Result<f64> {
    Ok(kind.resolve(None)?.weight(x))
}

/// Welsch scale history for one solver run. Never increases.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SigmaState {
    history: Vec<f64>,
}

impl SigmaState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current(&self) -> Option<f64> {
        self.history.last().copied()
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Accepts `min(current, proposal)` and records it.
    pub fn clamp(&mut self, proposal: f64) -> Result<f64> {
        if !(proposal.is_finite() && proposal > 0.0) {
            return Err(Error::param(format!("sigma proposal must be > 0, got {proposal}")));
        }
        let next = match self.current() {
            Some(c) => c.min(proposal),
            None => proposal,
        };
        self.history.push(next);
        Ok(next)
    }
}

/// Mean over the adjacent views of the RMS linearized residual `a·w + b`,
/// each RMS taken over that view's valid pixels. Views with no valid pixel
/// are skipped. The result is floored at `floor`.
pub fn estimate_sigma_d(
    w: &DisparityField,
    adjacent: &[&LinearizedView],
    floor: f64,
) -> Result<f64> {
    if adjacent.is_empty() {
        return Err(Error::Estimation("no views adjacent to the reference".to_string()));
    }
    let wv = w.values();
    let mut total = 0.0;
    let mut used = 0usize;
    for view in adjacent {
        if view.a.dims() != w.dims() {
            return Err(Error::DimensionMismatch {
                expected: view.a.dims(),
                got: w.dims(),
            });
        }
        let (mut sq, mut n) = (0.0, 0usize);
        for (i, &valid) in view.mask.data().iter().enumerate() {
            if valid {
                let r = view.residual_at(i, wv[i]);
                sq += r * r;
                n += 1;
            }
        }
        if n > 0 {
            total += (sq / n as f64).sqrt();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Estimation(
            "every adjacent view has an empty valid region".to_string(),
        ));
    }
    Ok((total / used as f64).max(floor))
}
