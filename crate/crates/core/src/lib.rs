//! Multiview disparity estimation with a robust (Welsch) data term and an L1
//! regularizer, solved by iteratively reweighted least squares with
//! conjugate-gradient inner solves. Views are brought in progressively and
//! re-warped at twice the image resolution between stages.

pub mod data;
pub mod domain;
pub mod error;
pub mod harness;
pub mod hires_warp;
pub mod imgproc;
pub mod robust;
pub mod schedule;
pub mod solver;

pub use domain::{
    disparity_from_w, normalize_baselines, BaselineVec, CameraGeometry, DisparityField, DisplacementField,
    GradientMode, ImageGrid, Mask, PenaltyKind, RegularizerForm, Resolution, SolverConfig, View, ViewSet,
    WelschScale,
};
pub use error::{Error, Result};
pub use schedule::{plan_schedule, run_progressive, PlanMode, StagePlan, StageResult};
