//! Scene cache: one JSON document holding every scene of a prepared run.
//!
//! ```text
//! { "version": 1,
//!   "datasets": [ { "name", "units", "scene_count", "image": null | { "path", "units_per_pixel", "origin" } } ],
//!   "scenes":   [ Scene, ... ] }
//! ```
//!
//! Scenes are ordered by (dataset, agent id, start step); the writer emits
//! identical bytes for identical inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Scene, Units};
use crate::geometry::BevImage;
use crate::{Error, Result};

pub const SCENE_CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSpec {
    pub path: PathBuf,
    pub units_per_pixel: f64,
    pub origin: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub units: Units,
    pub scene_count: usize,
    pub image: Option<ImageSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneCache {
    pub version: u32,
    pub datasets: Vec<DatasetEntry>,
    pub scenes: Vec<Scene>,
}

impl SceneCache {
    pub fn new(mut datasets: Vec<DatasetEntry>, mut scenes: Vec<Scene>) -> Self {
        datasets.sort_by(|a, b| a.name.cmp(&b.name));
        scenes.sort_by(|a, b| (&a.dataset, a.agent_id, a.start_step).cmp(&(&b.dataset, b.agent_id, b.start_step)));
        Self {
            version: SCENE_CACHE_VERSION,
            datasets,
            scenes,
        }
    }

    pub fn dataset_names(&self) -> Vec<String> {
        self.datasets.iter().map(|d| d.name.clone()).collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let cache: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        if cache.version != SCENE_CACHE_VERSION {
            return Err(Error::Load(format!("scene cache version {} unsupported", cache.version)));
        }
        for s in &cache.scenes {
            s.validate()?;
        }
        Ok(cache)
    }
}

/// Bird's-eye-view images keyed by the name scenes refer to.
#[derive(Debug, Clone, Default)]
pub struct ImageStore {
    images: BTreeMap<String, BevImage>,
}

impl ImageStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, image: BevImage) {
        self.images.insert(key.into(), image);
    }

    pub fn get(&self, key: &str) -> Option<&BevImage> {
        self.images.get(key)
    }

    /// Loads every dataset image listed in the cache.
    pub fn from_cache(cache: &SceneCache) -> Result<Self> {
        let mut store = Self::new();
        for d in &cache.datasets {
            if let Some(spec) = &d.image {
                store.insert(d.name.clone(), BevImage::load(&spec.path, spec.units_per_pixel, spec.origin)?);
            }
        }
        Ok(store)
    }

    /// Image for a scene; a scene naming an image that is not loaded is an error.
    pub fn for_scene(&self, scene: &Scene) -> Result<Option<&BevImage>> {
        match &scene.image {
            None => Ok(None),
            Some(key) => self
                .get(key)
                .map(Some)
                .ok_or_else(|| Error::Load(format!("scene image `{key}` is not loaded"))),
        }
    }
}
