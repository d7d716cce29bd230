//! Scene generation, noise, and file formats.

pub mod dataset;
pub mod lightfield;
pub mod noise;
pub mod pfm;
pub mod pgm;
pub mod slats;

pub use dataset::{load_dataset, save_views, Dataset, DatasetKind};
pub use lightfield::{load_lightfield, LightFieldSet};
pub use noise::add_noise;
pub use pfm::{read_pfm, write_pfm};
pub use pgm::write_pgm;
pub use slats::{generate_slats, SceneSpec, Slat, SlatsScene};
