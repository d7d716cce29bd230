//! Flat `key = value` solver configuration files.

use std::path::Path;

use ini::Ini;

use crate::domain::{GradientMode, PenaltyKind, RegularizerForm, SolverConfig, WelschScale};
use crate::error::{Error, Result};
use crate::schedule::PlanMode;

/// Parses `l2`, `l1`, `huber:EPS`, `welsch` (automatic scale) or
/// `welsch:SIGMA`.
pub fn parse_penalty(text: &str) -> Result<PenaltyKind> {
    let text = text.trim().to_ascii_lowercase();
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (text.as_str(), None),
    };
    let number = |a: &str| {
        a.trim()
            .parse::<f64>()
            .map_err(|_| Error::param(format!("bad penalty parameter {a:?}")))
    };
    let kind = match (name, arg) {
        ("l2", None) => PenaltyKind::L2,
        ("l1", None) => PenaltyKind::l1(),
        ("huber", Some(a)) => PenaltyKind::HuberL1 { epsilon: number(a)? },
        ("welsch", None) | ("welsch", Some("auto")) => PenaltyKind::welsch_auto(),
        ("welsch", Some(a)) => PenaltyKind::Welsch {
            sigma: WelschScale::Fixed(number(a)?),
        },
        _ => return Err(Error::param(format!("unknown penalty {text:?}"))),
    };
    kind.validate()?;
    Ok(kind)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::param(format!("{key} = {value:?} is not valid")))
}

/// Applies one setting to `config`.
pub fn apply_setting(config: &mut SolverConfig, key: &str, value: &str) -> Result<()> {
    let v = value.trim();
    match key.trim() {
        "alpha" => config.alpha = parse_value(key, v)?,
        "data_penalty" => config.data_penalty = parse_penalty(v)?,
        "reg_penalty" => config.reg_penalty = parse_penalty(v)?,
        "dog_sigma" => config.dog_sigma = parse_value(key, v)?,
        "irls_iters" => config.irls_iters = parse_value(key, v)?,
        "cg_tol" => config.cg_tol = parse_value(key, v)?,
        "cg_max_iters" => config.cg_max_iters = parse_value(key, v)?,
        "schedule_k" => config.schedule_k = parse_value(key, v)?,
        "schedule_c" => config.schedule_c = parse_value(key, v)?,
        "seed" => config.seed = parse_value(key, v)?,
        "sigma_floor" => config.sigma_floor = parse_value(key, v)?,
        "gradient_mode" => {
            config.gradient_mode = match v {
                "average" => GradientMode::Average,
                "paper_sum" => GradientMode::PaperSum,
                _ => return Err(Error::param(format!("gradient_mode = {v:?}, expected average or paper_sum"))),
            }
        }
        "reg_form" => {
            config.reg_form = match v {
                "divergence" => RegularizerForm::Divergence,
                "symmetrized" => RegularizerForm::Symmetrized,
                "literal" => RegularizerForm::Literal,
                _ => {
                    return Err(Error::param(format!(
                        "reg_form = {v:?}, expected divergence, symmetrized or literal"
                    )))
                }
            }
        }
        "lowpass_omega" => config.lowpass_omega = optional(key, v)?,
        "initial_disparity_bound" => config.initial_disparity_bound = optional(key, v)?,
        other => return Err(Error::param(format!("unknown configuration key {other:?}"))),
    }
    Ok(())
}

fn optional(key: &str, v: &str) -> Result<Option<f64>> {
    if v.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse_value(key, v).map(Some)
    }
}

pub fn parse_config(text: &str, base: SolverConfig) -> Result<SolverConfig> {
    let ini = Ini::load_from_str(text).map_err(|e| Error::param(e.to_string()))?;
    let mut config = base;
    for (section, props) in ini.iter() {
        if let Some(name) = section {
            return Err(Error::param(format!("sections are not supported, found [{name}]")));
        }
        for (k, v) in props.iter() {
            apply_setting(&mut config, k, v)?;
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>, base: SolverConfig) -> Result<SolverConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    parse_config(&text, base).map_err(|e| Error::ingestion(path, e.to_string()))
}

/// Parses `crosshair` or `gate:k=K,c=C` (either key may be omitted).
pub fn parse_schedule(text: &str, config: &SolverConfig) -> Result<PlanMode> {
    let text = text.trim();
    if text.eq_ignore_ascii_case("crosshair") {
        return Ok(PlanMode::Crosshair);
    }
    let Some(rest) = text.strip_prefix("gate") else {
        return Err(Error::param(format!("unknown schedule {text:?}, expected crosshair or gate:k=K,c=C")));
    };
    let (mut k, mut c) = (config.schedule_k, config.schedule_c);
    let rest = rest.strip_prefix(':').unwrap_or(rest);
    for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::param(format!("schedule option {part:?} needs key=value")))?;
        match key.trim() {
            "k" => k = parse_value("k", value)?,
            "c" => c = parse_value("c", value)?,
            other => return Err(Error::param(format!("unknown schedule option {other:?}"))),
        }
    }
    Ok(PlanMode::Gate { k, c })
}
