use crate::numerics::{Scalar, Tensor};
use crate::{Error, Result};

/// Sinusoidal temporal encoding, `[t_obs, pe_dim]`.
///
/// Row `pos`, columns `2i` and `2i + 1` hold `sin` and `cos` of
/// `pos · exp(-4 i / pe_dim)`.
pub fn positional_encoding<F: Scalar>(t_obs: usize, pe_dim: usize) -> Result<Tensor<F>> {
    if pe_dim == 0 || !pe_dim.is_multiple_of(2) {
        return Err(Error::Config(format!("positional encoding width must be even, got {pe_dim}")));
    }
    if t_obs == 0 {
        return Err(Error::Config("positional encoding needs at least one position".into()));
    }
    let mut data = Vec::with_capacity(t_obs * pe_dim);
    for pos in 0..t_obs {
        for i in 0..pe_dim / 2 {
            let angle = pos as f64 * (-4.0 * i as f64 / pe_dim as f64).exp();
            data.push(F::from_f64(angle.sin()));
            data.push(F::from_f64(angle.cos()));
        }
    }
    Tensor::new(vec![t_obs, pe_dim], data)
}
