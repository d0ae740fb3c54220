use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::numerics::Precision;
use crate::{Error, Result};

/// Optimization hyperparameters, read from a flat TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr0: f64,
    pub decay_factor: f64,
    /// Epochs between learning-rate decays.
    pub decay_every: usize,
    pub epochs: usize,
    /// Weight of the goal (final displacement) term.
    pub lambda: f64,
    pub seed: u64,
    pub precision: Precision,
    /// Share of training scenes held out for checkpoint selection.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            lr0: 5e-4,
            decay_factor: 0.2,
            decay_every: 30,
            epochs: 65,
            lambda: 0.5,
            seed: 0,
            precision: Precision::Fast,
            val_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.batch_size == 0 || self.decay_every == 0 {
            return Err(Error::Config("batch_size and decay_every must be positive".into()));
        }
        if !positive(self.lr0) || !positive(self.decay_factor) {
            return Err(Error::Config(format!(
                "lr0 ({}) and decay_factor ({}) must be positive",
                self.lr0, self.decay_factor
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!("val_fraction {} outside [0, 1)", self.val_fraction)));
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
}

/// Step decay: `lr0 · decay_factor^⌊epoch / decay_every⌋`.
///
/// The power is taken by repeated multiplication, which lands on the
/// nearest double of every decayed value for the default settings.
pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> f64 {
    let mut lr = cfg.lr0;
    for _ in 0..epoch / cfg.decay_every {
        lr *= cfg.decay_factor;
    }
    lr
}
