//! Dataset-root discovery.
//!
//! Every subdirectory of the root is one dataset, named after the directory:
//!
//! * `annotations.txt` marks a Stanford Drone scene (pixels); a sibling
//!   `reference.png` becomes its image at one pixel per unit.
//! * Otherwise every other `*.txt` file is an ETH/UCY sequence (meters). An
//!   `H.txt` homography, when present, is applied to all of them.
//! * An optional `image.toml` (`path`, `units_per_pixel`, `origin`) sets or
//!   overrides the scene image.
//! * An optional `dataset.toml` overrides parsing and windowing:
//!
//! ```toml
//! stride = 1                  # steps between window starts
//! frame_step = 10             # ETH/UCY frames per step (inferred when absent)
//! sdd_classes = ["Pedestrian"]
//! sdd_drop_flags = ["lost"]   # any of lost, occluded, generated
//! sdd_frame_stride = 12
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::{
    build_scenes, parse_eth_ucy, parse_sdd, read_homography, DatasetEntry, EthUcyOptions, ImageSpec, SceneCache,
    AgentClass, SceneOptions, SddFlag, SddOptions, Units,
};
use crate::{Error, Result};

/// Agent ids of the k-th sequence file in a multi-file dataset are shifted by
/// `k * SEQUENCE_ID_STRIDE` so they stay unique inside the dataset.
pub const SEQUENCE_ID_STRIDE: i64 = 1_000_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageToml {
    path: PathBuf,
    units_per_pixel: f64,
    #[serde(default)]
    origin: [f64; 2],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetToml {
    stride: Option<usize>,
    frame_step: Option<i64>,
    sdd_classes: Option<BTreeSet<AgentClass>>,
    sdd_drop_flags: Option<BTreeSet<SddFlag>>,
    sdd_frame_stride: Option<i64>,
}

fn dataset_toml(dir: &Path) -> Result<DatasetToml> {
    let path = dir.join("dataset.toml");
    if !path.exists() {
        return Ok(DatasetToml::default());
    }
    let text = std::fs::read_to_string(&path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn image_spec(dir: &Path, default: Option<ImageSpec>) -> Result<Option<ImageSpec>> {
    let meta = dir.join("image.toml");
    if !meta.exists() {
        return Ok(default);
    }
    let text = std::fs::read_to_string(&meta)?;
    let t: ImageToml = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", meta.display())))?;
    let path = if t.path.is_absolute() { t.path } else { dir.join(t.path) };
    if !path.exists() {
        return Err(Error::MissingPaths(vec![path]));
    }
    Ok(Some(ImageSpec {
        path,
        units_per_pixel: t.units_per_pixel,
        origin: t.origin,
    }))
}

fn sequence_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| {
        p.is_file()
            && p.extension().and_then(|e| e.to_str()) == Some("txt")
            && p.file_name().and_then(|n| n.to_str()) != Some("H.txt")
    });
    files.sort();
    Ok(files)
}

/// Parses and windows one dataset directory.
pub fn load_dataset(dir: &Path) -> Result<(DatasetEntry, Vec<crate::data::Scene>)> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Data(format!("dataset directory {} has no usable name", dir.display())))?
        .to_string();
    let overrides = dataset_toml(dir)?;
    let sdd = dir.join("annotations.txt");
    let (units, tracks, default_image) = if sdd.exists() {
        let reference = dir.join("reference.png");
        let image = reference.exists().then_some(ImageSpec {
            path: reference,
            units_per_pixel: 1.0,
            origin: [0.0, 0.0],
        });
        let defaults = SddOptions::default();
        let opts = SddOptions {
            keep_classes: overrides.sdd_classes.unwrap_or(defaults.keep_classes),
            drop_flags: overrides.sdd_drop_flags.unwrap_or(defaults.drop_flags),
            frame_stride: overrides.sdd_frame_stride.unwrap_or(defaults.frame_stride),
        };
        (Units::Pixels, vec![parse_sdd(&sdd, &opts)?], image)
    } else {
        let files = sequence_files(dir)?;
        if files.is_empty() {
            return Err(Error::MissingPaths(vec![sdd, dir.join("*.txt")]));
        }
        let h = dir.join("H.txt");
        let opts = EthUcyOptions {
            frame_step: overrides.frame_step,
            homography: if h.exists() { Some(read_homography(&h)?) } else { None },
        };
        let multi = files.len() > 1;
        let mut tracks = Vec::with_capacity(files.len());
        for (k, f) in files.iter().enumerate() {
            let mut t = parse_eth_ucy(f, &opts)?;
            if multi {
                for tr in &mut t {
                    tr.agent_id += k as i64 * SEQUENCE_ID_STRIDE;
                }
            }
            tracks.push(t);
        }
        (Units::Meters, tracks, None)
    };
    let image = image_spec(dir, default_image)?;
    let opts = SceneOptions {
        image: image.as_ref().map(|_| name.clone()),
        stride: overrides.stride.unwrap_or(1),
        ..Default::default()
    };
    let mut scenes = Vec::new();
    for seq in &tracks {
        scenes.extend(build_scenes(seq, &name, &opts)?);
    }
    let entry = DatasetEntry {
        name,
        units,
        scene_count: scenes.len(),
        image,
    };
    Ok((entry, scenes))
}

/// Loads every dataset under `root`, or only those named in `only`.
pub fn load_dataset_root(root: &Path, only: &[String]) -> Result<SceneCache> {
    if !root.is_dir() {
        return Err(Error::MissingPaths(vec![root.to_path_buf()]));
    }
    let mut dirs: Vec<PathBuf> = if only.is_empty() {
        std::fs::read_dir(root)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|p| p.is_dir())
            .collect()
    } else {
        let wanted: Vec<PathBuf> = only.iter().map(|n| root.join(n)).collect();
        let missing: Vec<PathBuf> = wanted.iter().filter(|p| !p.is_dir()).cloned().collect();
        if !missing.is_empty() {
            return Err(Error::MissingPaths(missing));
        }
        wanted
    };
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::MissingPaths(vec![root.join("<dataset>")]));
    }
    let mut entries = Vec::new();
    let mut scenes = Vec::new();
    for d in dirs {
        let (e, s) = load_dataset(&d)?;
        entries.push(e);
        scenes.extend(s);
    }
    Ok(SceneCache::new(entries, scenes))
}
