//! Goal-conditioned pedestrian trajectory prediction.
//!
//! The pipeline normalizes every scene into the main agent's frame, embeds the
//! observed tracks of the agent and its neighbors (plus optional bird's-eye-view
//! image patches), and fuses them into a learnable latent array by alternating
//! cross-attention and latent self-attention blocks. Two heads decode the
//! latent: one proposes the final position (the goal), the other produces the
//! full future trajectory conditioned on a goal.
//!
//! Modules:
//! - [`numerics`]: tensors and a small reverse-mode tape with the layers,
//!   optimizer and gradient checker built on it.
//! - [`geometry`]: agent-centric rigid transforms and image crops.
//! - [`data`]: dataset parsers and the scene windows built from them.
//! - [`model`]: encoder blocks and the goal/trajectory decoders.
//! - [`training`]: the displacement loss and the trainer.
//! - [`eval`]: ADE/FDE against the constant-velocity baseline.
//! - [`cli`]: subcommand implementations used by the `trajpred` binary.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};

/// Observed steps per scene.
pub const T_OBS: usize = 8;
/// Predicted steps per scene.
pub const T_PRED: usize = 12;
/// Seconds between consecutive steps.
pub const DT: f64 = 0.4;
