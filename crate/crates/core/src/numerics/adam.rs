use crate::numerics::{ModelParams, Scalar, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamState<F> {
    pub step: u64,
    pub m: Vec<Tensor<F>>,
    pub v: Vec<Tensor<F>>,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl<F: Scalar> AdamState<F> {
    /// Zero moments shaped like `params`, with beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(params: &ModelParams<F>) -> Self {
        let zeros: Vec<Tensor<F>> = params.blocks().iter().map(|b| Tensor::zeros(b.value.shape())).collect();
        Self {
            step: 0,
            m: zeros.clone(),
            v: zeros,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update from the gradients stored in `params`.
///
/// All gradients are validated before any parameter moves.
pub fn adam_step<F: Scalar>(params: &mut ModelParams<F>, state: &mut AdamState<F>, lr: f64) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(Error::Config("optimizer state does not match parameters".into()));
    }
    if let Some(bad) = params.blocks().iter().find(|b| !b.grad.all_finite()) {
        return Err(Error::Training {
            param: bad.name.clone(),
            reason: "non-finite gradient".into(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2) = (F::from_f64(state.beta1), F::from_f64(state.beta2));
    let (one_b1, one_b2) = (F::from_f64(1.0 - state.beta1), F::from_f64(1.0 - state.beta2));
    let step_size = F::from_f64(lr / bc1);
    let inv_bc2 = F::from_f64(1.0 / bc2);
    let eps = F::from_f64(state.eps);

    for (id, (m, v)) in state.m.iter_mut().zip(state.v.iter_mut()).enumerate() {
        let block = params.block_mut(id);
        let grad = block.grad.data().to_vec();
        for (((p, &g), mi), vi) in block
            .value
            .data_mut()
            .iter_mut()
            .zip(&grad)
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mi = b1 * *mi + one_b1 * g;
            *vi = b2 * *vi + one_b2 * g * g;
            *p = *p - step_size * *mi / ((*vi * inv_bc2).sqrt() + eps);
        }
    }
    Ok(())
}
