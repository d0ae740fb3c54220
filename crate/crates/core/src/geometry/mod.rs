//! Agent-centric frames and bird's-eye-view image preparation.

mod image;
mod transform;

pub use self::image::{extract_patches, patchify, rotate_crop, BevImage, PatchTokens, Sampling};
pub use transform::{apply_transform, heading_transform, heading_transform_points, RigidTransform2D};
