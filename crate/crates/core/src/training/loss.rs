use crate::eval::{ade, fde};
use crate::model::{ForwardOutput, Prediction};
use crate::numerics::{Graph, Scalar, Tensor, Var};
use crate::{Error, Result};

/// `L_ADE + λ·L_FDE` for one scene: mean step distance of the trajectory plus
/// λ times the distance between the goal head and the true endpoint.
///
/// Both sides must be in the same frame.
pub fn loss(pred: &Prediction, gt_future: &[[f64; 2]], lambda: f64) -> Result<f64> {
    if pred.trajectory.len() != gt_future.len() {
        return Err(Error::Contract(format!(
            "prediction has {} steps, ground truth {}",
            pred.trajectory.len(),
            gt_future.len()
        )));
    }
    let last = *gt_future.last().ok_or(Error::Empty("ground-truth future"))?;
    let l_ade = ade(std::slice::from_ref(&pred.trajectory), &[gt_future.to_vec()])?;
    let l_fde = fde(&[vec![pred.goal]], &[vec![last]])?;
    Ok(l_ade + lambda * l_fde)
}

/// Differentiable form of [`loss`] on a forward pass.
pub fn loss_graph<F: Scalar>(g: &mut Graph<F>, out: &ForwardOutput, gt_future: &[[f64; 2]], lambda: f64) -> Result<Var> {
    let steps = g.shape(out.trajectory)[0];
    if steps != gt_future.len() {
        return Err(Error::Contract(format!("prediction has {steps} steps, ground truth {}", gt_future.len())));
    }
    let flat: Vec<f64> = gt_future.iter().flat_map(|p| [p[0], p[1]]).collect();
    let gt = g.constant(Tensor::from_f64(vec![steps, 2], &flat)?);
    let diff = g.sub(out.trajectory, gt)?;
    let norms = g.row_norms(diff);
    let l_ade = g.mean(norms);

    let last = &flat[flat.len() - 2..];
    let gt_goal = g.constant(Tensor::from_f64(vec![1, 2], last)?);
    let goal_diff = g.sub(out.goal, gt_goal)?;
    let goal_norm = g.row_norms(goal_diff);
    let l_fde = g.mean(goal_norm);
    let weighted = g.scale(l_fde, F::from_f64(lambda));
    g.add(l_ade, weighted)
}
