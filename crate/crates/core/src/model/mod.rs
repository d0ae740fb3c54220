//! Encoder over a learnable latent array and the two decoding heads.

mod config;
mod encoding;
mod forward;
mod input;
mod layout;

pub use config::{Backbone, ModelConfig};
pub use encoding::positional_encoding;
pub use forward::{
    decode_goal, decode_trajectory, embed_tokens, encode, encoder_block, forward, predict, ForwardOutput, Mode,
    Prediction, SceneTokens,
};
pub use input::{prepare_input, ModelInput, NeighborInput};
pub use layout::{AttentionIds, BlockIds, CrossAttentionIds, LinearIds, ModelLayout, NormIds, TrajectoryModel};
