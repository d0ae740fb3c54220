use std::collections::BTreeMap;

use crate::numerics::{Scalar, Tensor};
use crate::{Error, Result};

/// Index of a [`ParamBlock`] inside its [`ModelParams`] registry.
pub type ParamId = usize;

#[derive(Debug, Clone)]
pub struct ParamBlock<F> {
    pub name: String,
    pub value: Tensor<F>,
    pub grad: Tensor<F>,
}

/// Registry of named learnable tensors.
///
/// Blocks keep insertion order; the flat view concatenates them in that
/// order.
#[derive(Debug, Clone, Default)]
pub struct ModelParams<F> {
    blocks: Vec<ParamBlock<F>>,
    index: BTreeMap<String, ParamId>,
}

impl<F: Scalar> ModelParams<F> {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: impl Into<String>, value: Tensor<F>) -> Result<ParamId> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter `{name}`")));
        }
        let id = self.blocks.len();
        let grad = Tensor::zeros(value.shape());
        self.index.insert(name.clone(), id);
        self.blocks.push(ParamBlock { name, value, grad });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[ParamBlock<F>] {
        &self.blocks
    }

    pub fn block(&self, id: ParamId) -> &ParamBlock<F> {
        &self.blocks[id]
    }

    pub fn block_mut(&mut self, id: ParamId) -> &mut ParamBlock<F> {
        &mut self.blocks[id]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&ParamBlock<F>> {
        self.id(name).map(|id| &self.blocks[id])
    }

    pub fn value(&self, id: ParamId) -> &Tensor<F> {
        &self.blocks[id].value
    }

    /// Total scalar count.
    pub fn numel(&self) -> usize {
        self.blocks.iter().map(|b| b.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for b in &mut self.blocks {
            b.grad.data_mut().iter_mut().for_each(|g| *g = F::zero());
        }
    }

    pub fn flat_values(&self) -> Vec<F> {
        self.blocks.iter().flat_map(|b| b.value.data().iter().copied()).collect()
    }

    pub fn flat_grads(&self) -> Vec<F> {
        self.blocks.iter().flat_map(|b| b.grad.data().iter().copied()).collect()
    }

    pub fn set_flat_values(&mut self, flat: &[F]) -> Result<()> {
        if flat.len() != self.numel() {
            return Err(Error::Dimension {
                op: "set_flat_values",
                lhs: vec![self.numel()],
                rhs: vec![flat.len()],
            });
        }
        let mut offset = 0;
        for b in &mut self.blocks {
            let n = b.value.len();
            b.value.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Maps a flat coordinate to `(block, offset within block)`.
    pub fn locate(&self, flat_index: usize) -> Option<(ParamId, usize)> {
        let mut offset = flat_index;
        for (id, b) in self.blocks.iter().enumerate() {
            if offset < b.value.len() {
                return Some((id, offset));
            }
            offset -= b.value.len();
        }
        None
    }

    /// Adds `other`'s gradients into this registry's gradients.
    pub fn accumulate_grads_from(&mut self, other: &[Tensor<F>]) {
        for (b, g) in self.blocks.iter_mut().zip(other) {
            for (dst, &src) in b.grad.data_mut().iter_mut().zip(g.data()) {
                *dst = *dst + src;
            }
        }
    }

    pub fn scale_grads(&mut self, factor: F) {
        for b in &mut self.blocks {
            b.grad.data_mut().iter_mut().for_each(|g| *g = *g * factor);
        }
    }

    /// Converts every block to another precision.
    pub fn cast<G: Scalar>(&self) -> ModelParams<G> {
        ModelParams {
            blocks: self
                .blocks
                .iter()
                .map(|b| ParamBlock {
                    name: b.name.clone(),
                    value: b.value.cast(),
                    grad: b.grad.cast(),
                })
                .collect(),
            index: self.index.clone(),
        }
    }
}
