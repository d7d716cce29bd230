//! Loader for 9×9 light-field scenes laid out as `input_CamNNN.png`,
//! `gt_disp_lowres.pfm` and `parameters.cfg`.

use std::path::{Path, PathBuf};

use ini::Ini;

use crate::data::pfm::read_pfm;
use crate::domain::{BaselineVec, DisparityField, ImageGrid, View, ViewSet};
use crate::error::{Error, Result};
use crate::hires_warp::multi_hypothesis_warp;

pub const GT_FILE: &str = "gt_disp_lowres.pfm";
pub const PARAMETERS_FILE: &str = "parameters.cfg";

#[derive(Debug, Clone)]
pub struct LightFieldSet {
    pub name: String,
    pub cams_x: usize,
    pub cams_y: usize,
    pub views: ViewSet,
    /// Reference-view disparity in normalized `w` units (image pixels per
    /// camera step).
    pub gt: DisparityField,
    /// Multiply the file's disparities by this to obtain `w`.
    pub disparity_unit: f64,
    pub baseline_mm: Option<f64>,
    pub focal_length_mm: Option<f64>,
    pub disparity_range: Option<(f64, f64)>,
}

impl LightFieldSet {
    /// The central row and column of the camera grid.
    pub fn crosshair(&self) -> Result<ViewSet> {
        let keep: Vec<usize> = self
            .views
            .views()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.baseline.bx == 0.0 || v.baseline.by == 0.0)
            .map(|(i, _)| i)
            .collect();
        self.views.subset(&keep)
    }
}

/// Rec. 601 luma of an RGB image, scaled to [0, 1].
pub fn load_luminance(path: &Path) -> Result<ImageGrid> {
    let img = image::ImageReader::open(path)
        .map_err(|e| Error::ingestion(path, e.to_string()))?
        .decode()
        .map_err(|e| Error::ingestion(path, e.to_string()))?
        .into_rgb32f();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img
        .pixels()
        .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64).clamp(0.0, 1.0))
        .collect();
    ImageGrid::new(w, h, data).map_err(|e| Error::ingestion(path, e.to_string()))
}

struct Parameters {
    width: usize,
    height: usize,
    cams_x: usize,
    cams_y: usize,
    baseline_mm: Option<f64>,
    focal_length_mm: Option<f64>,
    disparity_range: Option<(f64, f64)>,
}

fn parse_parameters(path: &Path) -> Result<Parameters> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::ingestion(path, e.to_string()))?;
    let ini = Ini::load_from_str(&text).map_err(|e| Error::ingestion(path, e.to_string()))?;
    let find = |key: &str| {
        ini.iter()
            .find_map(|(_, props)| props.get(key))
            .map(str::trim)
    };
    let number = |key: &str| -> Result<Option<f64>> {
        find(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::ingestion(path, format!("{key} = {v:?} is not a number")))
            })
            .transpose()
    };
    let count = |key: &str, default: Option<usize>| -> Result<usize> {
        match number(key)? {
            Some(v) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
            Some(v) => Err(Error::ingestion(path, format!("{key} = {v} is not a positive count"))),
            None => default.ok_or_else(|| Error::ingestion(path, format!("missing key {key}"))),
        }
    };
    let disparity_range = match (number("disp_min")?, number("disp_max")?) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        _ => None,
    };
    Ok(Parameters {
        width: count("image_resolution_x_px", None)?,
        height: count("image_resolution_y_px", None)?,
        cams_x: count("num_cams_x", Some(9))?,
        cams_y: count("num_cams_y", Some(9))?,
        baseline_mm: number("baseline_mm")?,
        focal_length_mm: number("focal_length_mm")?,
        disparity_range,
    })
}

fn camera_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("input_Cam{index:03}.png"))
}

/// Loads a light-field scene. Camera `k` sits at column `k % cams_x`, row
/// `k / cams_x`; the central camera is the reference.
///
/// The direction in which the file's disparities move content is not
/// recorded in the scene, so it is inferred by checking which sign makes the
/// ground truth align the reference with its right-hand neighbour.
pub fn load_lightfield(dir: impl AsRef<Path>) -> Result<LightFieldSet> {
    let dir = dir.as_ref();
    let params = parse_parameters(&dir.join(PARAMETERS_FILE))?;
    if params.cams_x % 2 == 0 || params.cams_y % 2 == 0 {
        return Err(Error::ingestion(
            dir.join(PARAMETERS_FILE),
            "camera grid needs odd dimensions to have a central view",
        ));
    }
    let (cx, cy) = (params.cams_x / 2, params.cams_y / 2);
    let n = params.cams_x * params.cams_y;

    let images = (0..n)
        .map(|k| {
            let path = camera_path(dir, k);
            let img = load_luminance(&path)?;
            if img.dims() != (params.width, params.height) {
                return Err(Error::ingestion(
                    &path,
                    format!(
                        "image is {:?}, parameters say {}x{}",
                        img.dims(),
                        params.width,
                        params.height
                    ),
                ));
            }
            Ok(img)
        })
        .collect::<Result<Vec<_>>>()?;

    let gt_path = dir.join(GT_FILE);
    let gt_raw = read_pfm(&gt_path)?;
    if gt_raw.dims() != (params.width, params.height) {
        return Err(Error::ingestion(
            &gt_path,
            format!("ground truth is {:?}, images are {}x{}", gt_raw.dims(), params.width, params.height),
        ));
    }

    let build = |sign: f64| -> Result<ViewSet> {
        let views = images
            .iter()
            .enumerate()
            .map(|(k, img)| {
                let (col, row) = ((k % params.cams_x) as f64, (k / params.cams_x) as f64);
                Ok(View {
                    image: img.clone(),
                    baseline: BaselineVec::new(sign * (col - cx as f64), sign * (row - cy as f64))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ViewSet::new(views, cy * params.cams_x + cx)
    };
    let gt = DisparityField::base(gt_raw);
    let right = cy * params.cams_x + cx + 1;
    let sign = infer_sign(&images[cy * params.cams_x + cx], &images[right], &gt)?;

    Ok(LightFieldSet {
        name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        cams_x: params.cams_x,
        cams_y: params.cams_y,
        views: build(sign)?,
        gt,
        disparity_unit: 1.0,
        baseline_mm: params.baseline_mm,
        focal_length_mm: params.focal_length_mm,
        disparity_range: params.disparity_range,
    })
}

/// `+1` when the neighbour one step to the right is best explained with
/// baseline `(1, 0)`, `-1` when `(-1, 0)` fits better.
fn infer_sign(reference: &ImageGrid, right: &ImageGrid, gt: &DisparityField) -> Result<f64> {
    let misfit = |b: BaselineVec| -> Result<f64> {
        let (warped, mask) = multi_hypothesis_warp(right, gt, b)?;
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, &ok) in mask.data().iter().enumerate() {
            if ok {
                sum += (warped.data()[i] - reference.data()[i]).powi(2);
                count += 1;
            }
        }
        Ok(if count == 0 { f64::INFINITY } else { sum / count as f64 })
    };
    let plus = misfit(BaselineVec::new(1.0, 0.0)?)?;
    let minus = misfit(BaselineVec::new(-1.0, 0.0)?)?;
    Ok(if minus < plus { -1.0 } else { 1.0 })
}
