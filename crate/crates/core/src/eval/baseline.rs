use crate::data::Trajectory;
use crate::{Error, Result, T_PRED};

/// Constant-velocity extrapolation from the last two points:
/// step `k` lands at `last + k·(last − previous)`.
pub fn linear_extrapolate(points: &[[f64; 2]], steps: usize) -> Result<Vec<[f64; 2]>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Contract(format!(
            "linear baseline needs at least 2 observed points, got {n}"
        )));
    }
    let last = points[n - 1];
    let d = [last[0] - points[n - 2][0], last[1] - points[n - 2][1]];
    Ok((1..=steps)
        .map(|k| [last[0] + k as f64 * d[0], last[1] + k as f64 * d[1]])
        .collect())
}

/// [`linear_extrapolate`] over the prediction horizon, in the trajectory's own frame.
pub fn linear_baseline(observed: &Trajectory) -> Result<Vec<[f64; 2]>> {
    linear_extrapolate(&observed.positions(), T_PRED)
}
