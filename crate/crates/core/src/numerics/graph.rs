use crate::numerics::{ModelParams, ParamId, Scalar, Tensor};
use crate::{Error, Result};

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<F> {
    Leaf,
    Param,
    MatMul(Var, Var),
    /// `a · bᵀ`
    MatMulBt(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, F),
    Relu(Var),
    Softmax(Var),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<F>,
        rstd: Vec<F>,
    },
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Reshape(Var),
    MeanRows(Var),
    RepeatRows(Var),
    RowNorms(Var),
    Mean(Var),
}

struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
    needs_grad: bool,
}

/// Reverse-mode tape.
///
/// Nodes are appended in evaluation order, so walking them backwards is a
/// valid topological order for backpropagation.
pub struct Graph<F> {
    nodes: Vec<Node<F>>,
    param_vars: Vec<(ParamId, Var)>,
    relu_signature: u64,
}

impl<F: Scalar> Default for Graph<F> {
    fn default() -> Self {
        Self::new()
    }
}

fn dim_err(op: &'static str, lhs: &[usize], rhs: &[usize]) -> Error {
    Error::Dimension {
        op,
        lhs: lhs.to_vec(),
        rhs: rhs.to_vec(),
    }
}

impl<F: Scalar> Graph<F> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            param_vars: Vec::new(),
            relu_signature: 0xcbf2_9ce4_8422_2325,
        }
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Hash of every ReLU activation pattern recorded so far. Two evaluations
    /// with equal signatures lie on the same linear piece of every ReLU.
    pub fn relu_signature(&self) -> u64 {
        self.relu_signature
    }

    /// Constant input; no gradient flows into it.
    pub fn constant(&mut self, t: Tensor<F>) -> Var {
        self.push(t, Op::Leaf, false)
    }

    /// Differentiable input that is not a registered parameter.
    pub fn variable(&mut self, t: Tensor<F>) -> Var {
        self.push(t, Op::Leaf, true)
    }

    /// Records a parameter; repeated requests for the same id share one node.
    pub fn param(&mut self, params: &ModelParams<F>, id: ParamId) -> Var {
        if let Some(&(_, v)) = self.param_vars.iter().find(|(p, _)| *p == id) {
            return v;
        }
        let v = self.push(params.value(id).clone(), Op::Param, true);
        self.param_vars.push((id, v));
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        let (m, k) = (self.value(a).rows(), self.value(a).cols());
        if sb.len() != 2 || sb[0] != k {
            return Err(dim_err("matmul", sa, sb));
        }
        let n = sb[1];
        let mut out_shape = sa[..sa.len() - 1].to_vec();
        out_shape.push(n);
        let mut out = vec![F::zero(); m * n];
        mm(self.value(a).data(), self.value(b).data(), &mut out, m, k, n);
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Tensor::new(out_shape, out)?, Op::MatMul(a, b), ng))
    }

    /// `a · bᵀ` for `a: [m, k]`, `b: [n, k]`.
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.cols() {
            return Err(dim_err("matmul_bt", va.shape(), vb.shape()));
        }
        let (m, k, n) = (va.rows(), va.cols(), vb.rows());
        let mut out = vec![F::zero(); m * n];
        mm_bt(va.data(), vb.data(), &mut out, m, k, n);
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMulBt(a, b), ng))
    }

    /// Adds a `[n]` bias to every row of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (vx, vb) = (self.value(x), self.value(b));
        if vb.len() != vx.cols() {
            return Err(dim_err("add_bias", vx.shape(), vb.shape()));
        }
        let n = vx.cols();
        let mut out = vx.data().to_vec();
        for row in out.chunks_mut(n) {
            for (o, &bv) in row.iter_mut().zip(vb.data()) {
                *o = *o + bv;
            }
        }
        let t = Tensor::new(vx.shape().to_vec(), out)?;
        let ng = self.ng(x) || self.ng(b);
        Ok(self.push(t, Op::AddBias(x, b), ng))
    }

    fn elementwise(&mut self, a: Var, b: Var, sign: F, op: Op<F>, name: &'static str) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(dim_err(name, va.shape(), vb.shape()));
        }
        let out: Vec<F> = va.data().iter().zip(vb.data()).map(|(&x, &y)| x + sign * y).collect();
        let t = Tensor::new(va.shape().to_vec(), out)?;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(t, op, ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, F::one(), Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, -F::one(), Op::Sub(a, b), "sub")
    }

    pub fn scale(&mut self, x: Var, factor: F) -> Var {
        let v = self.value(x);
        let out = v.data().iter().map(|&e| e * factor).collect();
        let t = Tensor::new(v.shape().to_vec(), out).expect("same shape");
        let ng = self.ng(x);
        self.push(t, Op::Scale(x, factor), ng)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let mut sig = self.relu_signature;
        let out = v
            .data()
            .iter()
            .map(|&e| {
                let on = e > F::zero();
                sig = (sig ^ on as u64).wrapping_mul(0x0100_0000_01b3);
                if on {
                    e
                } else {
                    F::zero()
                }
            })
            .collect();
        let t = Tensor::new(v.shape().to_vec(), out).expect("same shape");
        self.relu_signature = sig;
        let ng = self.ng(x);
        self.push(t, Op::Relu(x), ng)
    }

    /// Row-wise softmax over the trailing axis. Columns where `mask` is
    /// `false` get probability zero.
    pub fn softmax(&mut self, x: Var, mask: Option<&[bool]>) -> Result<Var> {
        let v = self.value(x);
        let n = v.cols();
        if let Some(m) = mask {
            if m.len() != n {
                return Err(dim_err("softmax mask", v.shape(), &[m.len()]));
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::EmptyContext);
            }
        }
        if !v.all_finite() {
            return Err(Error::Numeric("non-finite softmax input".into()));
        }
        let keep = |j: usize| mask.is_none_or(|m| m[j]);
        let mut out = vec![F::zero(); v.len()];
        for (row, o) in v.data().chunks(n).zip(out.chunks_mut(n)) {
            let mut max = F::neg_infinity();
            for (j, &e) in row.iter().enumerate() {
                if keep(j) && e > max {
                    max = e;
                }
            }
            let mut sum = F::zero();
            for (j, &e) in row.iter().enumerate() {
                if keep(j) {
                    o[j] = (e - max).exp();
                    sum = sum + o[j];
                }
            }
            for e in o.iter_mut() {
                *e = *e / sum;
            }
        }
        let t = Tensor::new(v.shape().to_vec(), out)?;
        let ng = self.ng(x);
        Ok(self.push(t, Op::Softmax(x), ng))
    }

    /// Normalizes each row over the trailing axis, then applies `gamma`/`beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let (vx, vg, vb) = (self.value(x), self.value(gamma), self.value(beta));
        let n = vx.cols();
        if vg.len() != n || vb.len() != n {
            return Err(dim_err("layer_norm", vx.shape(), vg.shape()));
        }
        let inv_n = F::from_f64(1.0 / n as f64);
        let eps = F::from_f64(eps);
        let mut xhat = vec![F::zero(); vx.len()];
        let mut rstd = Vec::with_capacity(vx.rows());
        let mut out = vec![F::zero(); vx.len()];
        for ((row, xh), o) in vx.data().chunks(n).zip(xhat.chunks_mut(n)).zip(out.chunks_mut(n)) {
            let mean = row.iter().copied().sum::<F>() * inv_n;
            let var = row.iter().map(|&e| (e - mean) * (e - mean)).sum::<F>() * inv_n;
            let r = F::one() / (var + eps).sqrt();
            for j in 0..n {
                xh[j] = (row[j] - mean) * r;
                o[j] = xh[j] * vg.data()[j] + vb.data()[j];
            }
            rstd.push(r);
        }
        let t = Tensor::new(vx.shape().to_vec(), out)?;
        let ng = self.ng(x) || self.ng(gamma) || self.ng(beta);
        Ok(self.push(
            t,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            },
            ng,
        ))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        if let Some(bad) = parts.iter().find(|&&p| self.value(p).rows() != rows) {
            return Err(dim_err("concat_cols", self.shape(parts[0]), self.shape(*bad)));
        }
        let total: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.value(p).row(r));
            }
        }
        let t = Tensor::new(vec![rows, total], out)?;
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(t, Op::ConcatCols(parts.to_vec()), ng))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = self.value(parts[0]).cols();
        if let Some(bad) = parts.iter().find(|&&p| self.value(p).cols() != cols) {
            return Err(dim_err("concat_rows", self.shape(parts[0]), self.shape(*bad)));
        }
        let mut out = Vec::new();
        for &p in parts {
            out.extend_from_slice(self.value(p).data());
        }
        let rows = out.len() / cols;
        let t = Tensor::new(vec![rows, cols], out)?;
        let ng = parts.iter().any(|&p| self.ng(p));
        Ok(self.push(t, Op::ConcatRows(parts.to_vec()), ng))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, width: usize) -> Result<Var> {
        let v = self.value(x);
        if width == 0 || start + width > v.cols() {
            return Err(dim_err("slice_cols", v.shape(), &[start, width]));
        }
        let mut out = Vec::with_capacity(v.rows() * width);
        for r in 0..v.rows() {
            out.extend_from_slice(&v.row(r)[start..start + width]);
        }
        let t = Tensor::new(vec![v.rows(), width], out)?;
        let ng = self.ng(x);
        Ok(self.push(t, Op::SliceCols(x, start), ng))
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, count: usize) -> Result<Var> {
        let v = self.value(x);
        if count == 0 || start + count > v.rows() {
            return Err(dim_err("slice_rows", v.shape(), &[start, count]));
        }
        let c = v.cols();
        let out = v.data()[start * c..(start + count) * c].to_vec();
        let t = Tensor::new(vec![count, c], out)?;
        let ng = self.ng(x);
        Ok(self.push(t, Op::SliceRows(x, start), ng))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let t = self.value(x).clone().reshaped(shape)?;
        let ng = self.ng(x);
        Ok(self.push(t, Op::Reshape(x), ng))
    }

    /// Mean over rows: `[r, c] -> [1, c]`.
    pub fn mean_rows(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let (r, c) = (v.rows(), v.cols());
        let mut out = vec![F::zero(); c];
        for row in v.data().chunks(c) {
            for (o, &e) in out.iter_mut().zip(row) {
                *o = *o + e;
            }
        }
        let inv = F::from_f64(1.0 / r as f64);
        out.iter_mut().for_each(|o| *o = *o * inv);
        let t = Tensor::new(vec![1, c], out).expect("valid shape");
        let ng = self.ng(x);
        self.push(t, Op::MeanRows(x), ng)
    }

    /// Tiles a single row `count` times.
    pub fn repeat_rows(&mut self, x: Var, count: usize) -> Result<Var> {
        let v = self.value(x);
        if v.rows() != 1 || count == 0 {
            return Err(dim_err("repeat_rows", v.shape(), &[count]));
        }
        let out = v.data().repeat(count);
        let t = Tensor::new(vec![count, v.cols()], out)?;
        let ng = self.ng(x);
        Ok(self.push(t, Op::RepeatRows(x), ng))
    }

    /// Euclidean norm of each row: `[r, c] -> [r, 1]`.
    pub fn row_norms(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let out = v
            .data()
            .chunks(v.cols())
            .map(|row| row.iter().map(|&e| e * e).sum::<F>().sqrt())
            .collect::<Vec<_>>();
        let t = Tensor::new(vec![v.rows(), 1], out).expect("valid shape");
        let ng = self.ng(x);
        self.push(t, Op::RowNorms(x), ng)
    }

    /// Mean of all elements, as a `[1]` tensor.
    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let m = v.data().iter().copied().sum::<F>() * F::from_f64(1.0 / v.len() as f64);
        let ng = self.ng(x);
        self.push(Tensor::new(vec![1], vec![m]).expect("scalar"), Op::Mean(x), ng)
    }

    /// Backpropagates from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<F>> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(dim_err("backward", lv.shape(), &[1]));
        }
        let mut grads: Vec<Option<Vec<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![F::one()]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            self.backprop_node(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        let params = self
            .param_vars
            .iter()
            .filter_map(|&(id, v)| {
                grads[v.0]
                    .take()
                    .map(|g| (id, Tensor::new(self.shape(v).to_vec(), g).expect("same shape")))
            })
            .collect();
        Ok(Gradients { nodes: grads, params })
    }

    fn backprop_node(&self, node: &Node<F>, g: &[F], grads: &mut [Option<Vec<F>>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [F])| {
            if !self.nodes[v.0].needs_grad {
                return;
            }
            let slot = grads[v.0].get_or_insert_with(|| vec![F::zero(); self.nodes[v.0].value.len()]);
            f(slot);
        };
        match &node.op {
            Op::Leaf | Op::Param => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                acc(*a, &mut |s| mm_bt_acc(g, vb.data(), s, m, n, k));
                acc(*b, &mut |s| mm_at_acc(va.data(), g, s, m, k, n));
            }
            Op::MatMulBt(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                let (m, k, n) = (va.rows(), va.cols(), vb.rows());
                acc(*a, &mut |s| mm_acc(g, vb.data(), s, m, n, k));
                acc(*b, &mut |s| mm_at_acc(g, va.data(), s, m, n, k));
            }
            Op::AddBias(x, b) => {
                acc(*x, &mut |s| add_into(s, g));
                let n = val(*b).len();
                acc(*b, &mut |s| {
                    for row in g.chunks(n) {
                        add_into(s, row);
                    }
                });
            }
            Op::Add(a, b) => {
                acc(*a, &mut |s| add_into(s, g));
                acc(*b, &mut |s| add_into(s, g));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |s| add_into(s, g));
                acc(*b, &mut |s| {
                    for (d, &e) in s.iter_mut().zip(g) {
                        *d = *d - e;
                    }
                });
            }
            Op::Scale(x, f) => acc(*x, &mut |s| {
                for (d, &e) in s.iter_mut().zip(g) {
                    *d = *d + e * *f;
                }
            }),
            Op::Relu(x) => {
                let vx = val(*x);
                acc(*x, &mut |s| {
                    for ((d, &e), &xi) in s.iter_mut().zip(g).zip(vx.data()) {
                        if xi > F::zero() {
                            *d = *d + e;
                        }
                    }
                })
            }
            Op::Softmax(x) => {
                let y = &node.value;
                let n = y.cols();
                acc(*x, &mut |s| {
                    for ((yr, gr), sr) in y.data().chunks(n).zip(g.chunks(n)).zip(s.chunks_mut(n)) {
                        let dot = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum::<F>();
                        for j in 0..n {
                            sr[j] = sr[j] + yr[j] * (gr[j] - dot);
                        }
                    }
                })
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                rstd,
            } => {
                let n = val(*gamma).len();
                let gv = val(*gamma).data();
                let inv_n = F::from_f64(1.0 / n as f64);
                acc(*x, &mut |s| {
                    let mut dxhat = vec![F::zero(); n];
                    for (r, ((gr, xr), sr)) in g.chunks(n).zip(xhat.chunks(n)).zip(s.chunks_mut(n)).enumerate() {
                        for j in 0..n {
                            dxhat[j] = gr[j] * gv[j];
                        }
                        let m1 = dxhat.iter().copied().sum::<F>() * inv_n;
                        let m2 = dxhat.iter().zip(xr).map(|(&a, &b)| a * b).sum::<F>() * inv_n;
                        for j in 0..n {
                            sr[j] = sr[j] + rstd[r] * (dxhat[j] - m1 - xr[j] * m2);
                        }
                    }
                });
                acc(*gamma, &mut |s| {
                    for (gr, xr) in g.chunks(n).zip(xhat.chunks(n)) {
                        for j in 0..n {
                            s[j] = s[j] + gr[j] * xr[j];
                        }
                    }
                });
                acc(*beta, &mut |s| {
                    for gr in g.chunks(n) {
                        add_into(s, gr);
                    }
                });
            }
            Op::ConcatCols(parts) => {
                let total = node.value.cols();
                let mut offset = 0;
                for &p in parts {
                    let w = val(p).cols();
                    acc(p, &mut |s| {
                        for (sr, gr) in s.chunks_mut(w).zip(g.chunks(total)) {
                            add_into(sr, &gr[offset..offset + w]);
                        }
                    });
                    offset += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = val(p).len();
                    acc(p, &mut |s| add_into(s, &g[offset..offset + len]));
                    offset += len;
                }
            }
            Op::SliceCols(x, start) => {
                let w = node.value.cols();
                let c = val(*x).cols();
                acc(*x, &mut |s| {
                    for (sr, gr) in s.chunks_mut(c).zip(g.chunks(w)) {
                        add_into(&mut sr[*start..*start + w], gr);
                    }
                })
            }
            Op::SliceRows(x, start) => {
                let c = node.value.cols();
                let from = start * c;
                acc(*x, &mut |s| add_into(&mut s[from..from + g.len()], g))
            }
            Op::Reshape(x) => acc(*x, &mut |s| add_into(s, g)),
            Op::MeanRows(x) => {
                let vx = val(*x);
                let inv = F::from_f64(1.0 / vx.rows() as f64);
                acc(*x, &mut |s| {
                    for sr in s.chunks_mut(vx.cols()) {
                        for (d, &e) in sr.iter_mut().zip(g) {
                            *d = *d + e * inv;
                        }
                    }
                })
            }
            Op::RepeatRows(x) => acc(*x, &mut |s| {
                for gr in g.chunks(s.len()) {
                    add_into(s, gr);
                }
            }),
            Op::RowNorms(x) => {
                let vx = val(*x);
                let c = vx.cols();
                acc(*x, &mut |s| {
                    for (r, (sr, xr)) in s.chunks_mut(c).zip(vx.data().chunks(c)).enumerate() {
                        let norm = node.value.data()[r];
                        // Subgradient zero at the origin.
                        if norm > F::zero() {
                            let k = g[r] / norm;
                            for (d, &e) in sr.iter_mut().zip(xr) {
                                *d = *d + k * e;
                            }
                        }
                    }
                })
            }
            Op::Mean(x) => {
                let n = val(*x).len();
                let k = g[0] * F::from_f64(1.0 / n as f64);
                acc(*x, &mut |s| s.iter_mut().for_each(|d| *d = *d + k))
            }
        }
    }
}

/// Gradients produced by [`Graph::backward`].
pub struct Gradients<F> {
    nodes: Vec<Option<Vec<F>>>,
    params: Vec<(ParamId, Tensor<F>)>,
}

impl<F: Scalar> Gradients<F> {
    /// Gradient with respect to a non-parameter node, if one reached it.
    pub fn wrt(&self, v: Var) -> Option<&[F]> {
        self.nodes[v.0].as_deref()
    }

    pub fn params(&self) -> &[(ParamId, Tensor<F>)] {
        &self.params
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor<F>> {
        self.params.iter().find(|(p, _)| *p == id).map(|(_, t)| t)
    }

    /// Adds parameter gradients into the registry's `grad` buffers.
    pub fn accumulate_into(&self, params: &mut ModelParams<F>) {
        for (id, g) in &self.params {
            let dst = &mut params.block_mut(*id).grad;
            add_into(dst.data_mut(), g.data());
        }
    }
}

#[inline]
fn add_into<F: Scalar>(dst: &mut [F], src: &[F]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

/// `out[m,n] = a[m,k] · b[k,n]`
fn mm<F: Scalar>(a: &[F], b: &[F], out: &mut [F], m: usize, k: usize, n: usize) {
    mm_acc(a, b, out, m, k, n)
}

/// `out[m,n] += a[m,k] · b[k,n]`
fn mm_acc<F: Scalar>(a: &[F], b: &[F], out: &mut [F], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            let brow = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
}

/// `out[m,n] = a[m,k] · b[n,k]ᵀ`
fn mm_bt<F: Scalar>(a: &[F], b: &[F], out: &mut [F], m: usize, k: usize, n: usize) {
    mm_bt_acc(a, b, out, m, k, n)
}

fn mm_bt_acc<F: Scalar>(a: &[F], b: &[F], out: &mut [F], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let dot = arow.iter().zip(brow).map(|(&x, &y)| x * y).sum::<F>();
            out[i * n + j] = out[i * n + j] + dot;
        }
    }
}

/// `out[k,n] += a[m,k]ᵀ · b[m,n]`
fn mm_at_acc<F: Scalar>(a: &[F], b: &[F], out: &mut [F], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for (kk, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            let orow = &mut out[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
}
