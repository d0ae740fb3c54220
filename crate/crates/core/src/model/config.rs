use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::Sampling;
use crate::{Error, Result, T_PRED};

/// Scene-image treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backbone {
    /// Agent and neighbor cross-attention only.
    #[default]
    Nomap,
    /// Adds a cross-attention over linearly projected image patches.
    Patch,
}

impl std::str::FromStr for Backbone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nomap" => Ok(Backbone::Nomap),
            "patch" => Ok(Backbone::Patch),
            other => Err(Error::Config(format!("unknown backbone `{other}` (expected nomap or patch)"))),
        }
    }
}

/// Architecture hyperparameters. Read from a flat TOML file; absent keys keep
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_blocks: usize,
    pub heads: usize,
    pub d_model: usize,
    /// Rows of the latent array.
    pub latent_len: usize,
    pub pose_mlp: Vec<usize>,
    pub pe_dim: usize,
    pub goal_mlp: Vec<usize>,
    pub traj_mlp: Vec<usize>,
    /// Feed-forward width of the latent transformer, in multiples of `d_model`.
    pub ff_mult: usize,
    pub backbone: Backbone,
    /// Crop side in pixels.
    pub crop_size: usize,
    pub patch_size: usize,
    pub sampling: Sampling,
    /// Share one set of weights across all encoder blocks.
    pub tie_block_weights: bool,
    /// Coordinates are divided by this before embedding and outputs multiplied by it.
    pub position_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_blocks: 4,
            heads: 8,
            d_model: 48,
            latent_len: 12,
            pose_mlp: vec![2, 8, 32],
            pe_dim: 16,
            goal_mlp: vec![576, 256, 64, 2],
            traj_mlp: vec![50, 256, 64, 24],
            ff_mult: 4,
            backbone: Backbone::Nomap,
            crop_size: 64,
            patch_size: 8,
            sampling: Sampling::Bilinear,
            tie_block_weights: false,
            position_scale: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.pose_mlp.first() != Some(&2) {
            return err(format!("pose MLP must take 2-D points, got {:?}", self.pose_mlp));
        }
        if !self.pe_dim.is_multiple_of(2) || self.pe_dim == 0 {
            return err(format!("positional encoding width must be even and positive, got {}", self.pe_dim));
        }
        if self.pose_mlp.last().copied().unwrap_or(0) + self.pe_dim != self.d_model {
            return err(format!(
                "pose embedding {:?} plus encoding {} must equal d_model {}",
                self.pose_mlp.last(),
                self.pe_dim,
                self.d_model
            ));
        }
        if self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return err(format!("d_model {} not divisible by {} heads", self.d_model, self.heads));
        }
        if self.goal_mlp.first() != Some(&(self.latent_len * self.d_model)) || self.goal_mlp.last() != Some(&2) {
            return err(format!(
                "goal MLP must map {} -> 2, got {:?}",
                self.latent_len * self.d_model,
                self.goal_mlp
            ));
        }
        if self.traj_mlp.first() != Some(&(self.d_model + 2)) || self.traj_mlp.last() != Some(&(2 * T_PRED)) {
            return err(format!(
                "trajectory MLP must map {} -> {}, got {:?}",
                self.d_model + 2,
                2 * T_PRED,
                self.traj_mlp
            ));
        }
        if self.latent_len == 0 || self.ff_mult == 0 {
            return err("latent length and feed-forward multiplier must be positive".into());
        }
        if self.backbone == Backbone::Patch && (self.patch_size == 0 || !self.crop_size.is_multiple_of(self.patch_size)) {
            return err(format!(
                "crop size {} not divisible by patch size {}",
                self.crop_size, self.patch_size
            ));
        }
        if !(self.position_scale.is_finite() && self.position_scale > 0.0) {
            return err(format!("position scale must be positive, got {}", self.position_scale));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn patch_count(&self) -> usize {
        (self.crop_size / self.patch_size).pow(2)
    }
}
