//! On-disk datasets: generated slats scenes and light-field scenes behind
//! one loader.

use std::path::Path;

use ini::Ini;

use crate::data::lightfield::{load_lightfield, PARAMETERS_FILE};
use crate::data::pfm::{read_pfm, write_pfm};
use crate::domain::{BaselineVec, DisparityField, Resolution, View, ViewSet};
use crate::error::{Error, Result};

pub const SCENE_FILE: &str = "scene.cfg";
pub const SLATS_GT_FILE: &str = "gt_2x.pfm";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    /// Linear camera array with ground truth at twice the image resolution.
    Slats,
    /// Camera grid with ground truth at image resolution.
    LightField,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub kind: DatasetKind,
    pub views: ViewSet,
    pub gt: Option<DisparityField>,
}

fn view_file(i: usize) -> String {
    format!("view_{i:03}.pfm")
}

/// Writes every view as PFM, the ground truth, and a `scene.cfg` index.
pub fn save_views(dir: impl AsRef<Path>, views: &ViewSet, gt: Option<&DisparityField>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut ini = Ini::new();
    let (w, h) = views.dims();
    ini.with_section(Some("scene"))
        .set("kind", "slats")
        .set("n_views", views.len().to_string())
        .set("reference", views.reference_index().to_string())
        .set("width", w.to_string())
        .set("height", h.to_string());
    for (i, v) in views.views().iter().enumerate() {
        write_pfm(&v.image, dir.join(view_file(i)))?;
        ini.with_section(Some("views"))
            .set(view_file(i), format!("{} {}", v.baseline.bx, v.baseline.by));
    }
    if let Some(gt) = gt {
        write_pfm(gt.grid(), dir.join(SLATS_GT_FILE))?;
    }
    ini.write_to_file(dir.join(SCENE_FILE))?;
    Ok(())
}

fn load_saved(dir: &Path) -> Result<Dataset> {
    let path = dir.join(SCENE_FILE);
    let ini = Ini::load_from_file(&path).map_err(|e| Error::ingestion(&path, e.to_string()))?;
    let get = |section: &str, key: &str| {
        ini.get_from(Some(section), key)
            .ok_or_else(|| Error::ingestion(&path, format!("missing [{section}] {key}")))
    };
    let count = |key: &str| -> Result<usize> {
        let v = get("scene", key)?;
        v.trim()
            .parse()
            .map_err(|_| Error::ingestion(&path, format!("{key} = {v:?} is not a count")))
    };
    let n = count("n_views")?;
    let reference = count("reference")?;
    let views = (0..n)
        .map(|i| {
            let name = view_file(i);
            let raw = get("views", &name)?;
            let parts: Vec<f64> = raw
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::ingestion(&path, format!("bad baseline {raw:?} for {name}")))?;
            let [bx, by] = parts[..] else {
                return Err(Error::ingestion(&path, format!("baseline for {name} needs two numbers")));
            };
            Ok(View {
                image: read_pfm(dir.join(&name))?,
                baseline: BaselineVec::new(bx, by)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let views = ViewSet::new(views, reference)?;
    let gt_path = dir.join(SLATS_GT_FILE);
    let gt = if gt_path.exists() {
        let grid = read_pfm(&gt_path)?;
        let (w, h) = views.dims();
        if grid.dims() != (2 * w, 2 * h) {
            return Err(Error::ingestion(
                &gt_path,
                format!("ground truth is {:?}, expected twice {w}x{h}", grid.dims()),
            ));
        }
        Some(DisparityField::new(grid, Resolution::Double))
    } else {
        None
    };
    Ok(Dataset {
        name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        kind: DatasetKind::Slats,
        views,
        gt,
    })
}

/// Loads a directory written by [`save_views`] or a light-field scene.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    if dir.join(SCENE_FILE).exists() {
        load_saved(dir)
    } else if dir.join(PARAMETERS_FILE).exists() {
        let lf = load_lightfield(dir)?;
        Ok(Dataset {
            name: lf.name.clone(),
            kind: DatasetKind::LightField,
            views: lf.crosshair()?,
            gt: Some(lf.gt),
        })
    } else {
        Err(Error::ingestion(
            dir,
            format!("neither {SCENE_FILE} nor {PARAMETERS_FILE} found"),
        ))
    }
}
