//! From annotation files to fixed-horizon scene windows and their splits.

mod cache;
mod eth_ucy;
mod scenes;
mod sdd;
mod splits;
pub mod synthetic;
mod trajectory;

pub use cache::{DatasetEntry, ImageSpec, ImageStore, SceneCache, SCENE_CACHE_VERSION};
pub use eth_ucy::{parse_eth_ucy, parse_eth_ucy_str, read_homography, EthUcyOptions};
pub use scenes::{build_scenes, NeighborTrack, Scene, SceneOptions};
pub use sdd::{parse_sdd, parse_sdd_str, SddFlag, SddOptions};
pub use splits::{holdout_split, loocv_splits, random_split, SplitPlan};
pub use trajectory::{split_contiguous, AgentClass, Frame, TrackPoint, Trajectory, Units};
