//! Differentiable building blocks.
//!
//! Values live in [`Tensor`]s; computations that need gradients are recorded
//! on a [`Graph`] tape and differentiated in reverse. All reductions iterate in
//! a fixed order, so a given seed and precision reproduce results bit for bit.

mod adam;
mod checkpoint;
mod gradcheck;
mod graph;
mod ops;
mod params;
mod scalar;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointRecord, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport};
pub use graph::{Gradients, Graph, Var};
pub use ops::{layer_norm, linear, mlp, multi_head_attention, softmax, AttentionVars, LinearVars, MlpSpec, NormVars};
pub use params::{ModelParams, ParamBlock, ParamId};
pub use scalar::{Precision, Scalar};
pub use tensor::Tensor;
