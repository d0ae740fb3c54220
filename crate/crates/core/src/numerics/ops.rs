use crate::numerics::{Graph, Scalar, Var};
use crate::{Error, Result};

/// Epsilon inside the layer-norm square root.
pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub struct LinearVars {
    /// `[in, out]`
    pub w: Var,
    /// `[out]`
    pub b: Var,
}

#[derive(Debug, Clone, Copy)]
pub struct NormVars {
    pub gamma: Var,
    pub beta: Var,
}

/// Projections of one attention layer. Head `h` uses columns
/// `h*d_head..(h+1)*d_head` of `q`, `k` and `v`.
#[derive(Debug, Clone, Copy)]
pub struct AttentionVars {
    pub q: LinearVars,
    pub k: LinearVars,
    pub v: LinearVars,
    pub o: LinearVars,
}

/// Layer widths of a ReLU MLP, input first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec(Vec<usize>);

impl MlpSpec {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config(format!(
                "an MLP needs at least two widths, got {widths:?}"
            )));
        }
        if widths.contains(&0) {
            return Err(Error::Config(format!("zero-width MLP layer in {widths:?}")));
        }
        Ok(Self(widths))
    }

    pub fn widths(&self) -> &[usize] {
        &self.0
    }

    pub fn input(&self) -> usize {
        self.0[0]
    }

    pub fn output(&self) -> usize {
        *self.0.last().expect("validated")
    }

    /// `(in, out)` of each linear layer.
    pub fn layers(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }
}

/// `y = x·W + b` over the trailing axis of `x`.
pub fn linear<F: Scalar>(g: &mut Graph<F>, x: Var, p: LinearVars) -> Result<Var> {
    let xw = g.matmul(x, p.w)?;
    g.add_bias(xw, p.b)
}

/// Linear layers with ReLU between them and none after the last.
pub fn mlp<F: Scalar>(g: &mut Graph<F>, x: Var, layers: &[LinearVars]) -> Result<Var> {
    if layers.is_empty() {
        return Err(Error::Config("empty MLP".into()));
    }
    let mut h = x;
    for (i, &l) in layers.iter().enumerate() {
        h = linear(g, h, l)?;
        if i + 1 < layers.len() {
            h = g.relu(h);
        }
    }
    Ok(h)
}

pub fn softmax<F: Scalar>(g: &mut Graph<F>, x: Var) -> Result<Var> {
    g.softmax(x, None)
}

pub fn layer_norm<F: Scalar>(g: &mut Graph<F>, x: Var, p: NormVars) -> Result<Var> {
    g.layer_norm(x, p.gamma, p.beta, LAYER_NORM_EPS)
}

/// Scaled dot-product attention split over `heads`, heads concatenated and
/// projected by the output layer.
///
/// `key_mask[j] == false` removes key/value row `j` from every softmax.
pub fn multi_head_attention<F: Scalar>(
    g: &mut Graph<F>,
    q_in: Var,
    kv_in: Var,
    heads: usize,
    p: &AttentionVars,
    key_mask: Option<&[bool]>,
) -> Result<Var> {
    let d = g.shape(p.q.w)[1];
    if heads == 0 || !d.is_multiple_of(heads) {
        return Err(Error::Config(format!(
            "attention width {d} is not divisible by {heads} heads"
        )));
    }
    if let Some(m) = key_mask {
        if !m.iter().any(|&k| k) {
            return Err(Error::EmptyContext);
        }
    }
    let d_head = d / heads;
    let scale = F::from_f64(1.0 / (d_head as f64).sqrt());

    let q = linear(g, q_in, p.q)?;
    let k = linear(g, kv_in, p.k)?;
    let v = linear(g, kv_in, p.v)?;

    let mut outs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = g.slice_cols(q, h * d_head, d_head)?;
        let kh = g.slice_cols(k, h * d_head, d_head)?;
        let vh = g.slice_cols(v, h * d_head, d_head)?;
        let scores = g.matmul_bt(qh, kh)?;
        let scores = g.scale(scores, scale);
        let weights = g.softmax(scores, key_mask)?;
        outs.push(g.matmul(weights, vh)?);
    }
    let cat = g.concat_cols(&outs)?;
    linear(g, cat, p.o)
}
