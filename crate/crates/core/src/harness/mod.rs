//! Metrics, experiment sweeps, CSV reports and configuration files.

pub mod config;
pub mod experiment;
pub mod metrics;
pub mod report;

pub use config::{load_config, parse_config, parse_penalty, parse_schedule};
pub use experiment::{best_alpha_envelope, envelope_at, run_experiment, EnvelopePoint, ExperimentRow, Method, RunOptions};
pub use metrics::{rmse_against, rmse_hypotheses, rmse_plain};
pub use report::{emit_csv, read_csv, write_csv};
