//! Scoring predictors against ground truth. Reports are per fold and carry
//! the per-scene errors used for the final-error distribution.

mod baseline;
mod distribution;
mod metrics;
pub mod plot;
mod report;

pub use baseline::{linear_baseline, linear_extrapolate};
pub use distribution::{error_distribution, kde, quantile, ErrorDistribution, Histogram, IsoLevel, Kde, ISO_MASSES};
pub use metrics::{ade, fde, scene_ade};
pub use report::{evaluate, markdown_table, FoldMetrics, LinearBaseline, MetricReport, NetworkPredictor, Predictor, SceneRecord};
