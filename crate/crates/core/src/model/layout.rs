use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{Backbone, ModelConfig};
use crate::numerics::{AttentionVars, Graph, LinearVars, MlpSpec, ModelParams, NormVars, ParamId, Scalar, Tensor};
use crate::numerics::read_checkpoint;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LinearIds {
    pub w: ParamId,
    pub b: ParamId,
}

impl LinearIds {
    pub fn bind<F: Scalar>(&self, g: &mut Graph<F>, p: &ModelParams<F>) -> LinearVars {
        LinearVars {
            w: g.param(p, self.w),
            b: g.param(p, self.b),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NormIds {
    pub gamma: ParamId,
    pub beta: ParamId,
}

impl NormIds {
    pub fn bind<F: Scalar>(&self, g: &mut Graph<F>, p: &ModelParams<F>) -> NormVars {
        NormVars {
            gamma: g.param(p, self.gamma),
            beta: g.param(p, self.beta),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AttentionIds {
    pub q: LinearIds,
    pub k: LinearIds,
    pub v: LinearIds,
    pub o: LinearIds,
}

impl AttentionIds {
    pub fn bind<F: Scalar>(&self, g: &mut Graph<F>, p: &ModelParams<F>) -> AttentionVars {
        AttentionVars {
            q: self.q.bind(g, p),
            k: self.k.bind(g, p),
            v: self.v.bind(g, p),
            o: self.o.bind(g, p),
        }
    }
}

/// Pre-norm residual cross-attention from the latent to one input modality.
#[derive(Debug, Clone, Copy)]
pub struct CrossAttentionIds {
    pub norm_latent: NormIds,
    pub norm_input: NormIds,
    pub attn: AttentionIds,
}

#[derive(Debug, Clone)]
pub struct BlockIds {
    pub agent: CrossAttentionIds,
    pub neighbors: CrossAttentionIds,
    pub image: Option<CrossAttentionIds>,
    pub norm_attn: NormIds,
    pub self_attn: AttentionIds,
    pub norm_ff: NormIds,
    pub ff: Vec<LinearIds>,
}

#[derive(Debug, Clone)]
pub struct PatchIds {
    pub proj: LinearIds,
    /// `[P, d_model]` learnable position embedding of the patch grid.
    pub pos: ParamId,
}

/// Parameter ids of every learnable tensor, grouped by role.
#[derive(Debug, Clone)]
pub struct ModelLayout {
    pub pose: Vec<LinearIds>,
    pub latent: ParamId,
    pub null_token: ParamId,
    pub patch: Option<PatchIds>,
    pub blocks: Vec<BlockIds>,
    pub goal: Vec<LinearIds>,
    pub traj: Vec<LinearIds>,
}

/// Validated configuration plus the layout of its parameter registry.
#[derive(Debug, Clone)]
pub struct TrajectoryModel {
    pub config: ModelConfig,
    pub layout: ModelLayout,
}

struct Init<'a> {
    params: &'a mut ModelParams<f64>,
    rng: ChaCha8Rng,
}

impl Init<'_> {
    /// Kaiming-uniform on fan-in, zero bias.
    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Result<LinearIds> {
        let bound = (6.0 / fan_in as f64).sqrt();
        let w: Vec<f64> = (0..fan_in * fan_out).map(|_| self.rng.random_range(-bound..bound)).collect();
        Ok(LinearIds {
            w: self.params.register(format!("{name}.w"), Tensor::new(vec![fan_in, fan_out], w)?)?,
            b: self.params.register(format!("{name}.b"), Tensor::zeros(&[fan_out]))?,
        })
    }

    fn mlp(&mut self, name: &str, spec: &MlpSpec) -> Result<Vec<LinearIds>> {
        spec.layers()
            .enumerate()
            .map(|(i, (a, b))| self.linear(&format!("{name}.{i}"), a, b))
            .collect()
    }

    fn norm(&mut self, name: &str, d: usize) -> Result<NormIds> {
        Ok(NormIds {
            gamma: self.params.register(format!("{name}.gamma"), Tensor::from_f64(vec![d], &vec![1.0; d])?)?,
            beta: self.params.register(format!("{name}.beta"), Tensor::zeros(&[d]))?,
        })
    }

    fn normal(&mut self, name: &str, shape: &[usize], std: f64) -> Result<ParamId> {
        let dist = Normal::new(0.0, std).expect("positive std");
        let n = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| dist.sample(&mut self.rng)).collect();
        self.params.register(name, Tensor::new(shape.to_vec(), data)?)
    }

    fn attention(&mut self, name: &str, d: usize, d_in: usize) -> Result<AttentionIds> {
        Ok(AttentionIds {
            q: self.linear(&format!("{name}.q"), d, d)?,
            k: self.linear(&format!("{name}.k"), d_in, d)?,
            v: self.linear(&format!("{name}.v"), d_in, d)?,
            o: self.linear(&format!("{name}.o"), d, d)?,
        })
    }

    fn cross(&mut self, name: &str, d: usize) -> Result<CrossAttentionIds> {
        Ok(CrossAttentionIds {
            norm_latent: self.norm(&format!("{name}.norm_latent"), d)?,
            norm_input: self.norm(&format!("{name}.norm_input"), d)?,
            attn: self.attention(&format!("{name}.attn"), d, d)?,
        })
    }

    fn block(&mut self, name: &str, cfg: &ModelConfig) -> Result<BlockIds> {
        let d = cfg.d_model;
        let ff_spec = MlpSpec::new(vec![d, cfg.ff_mult * d, d])?;
        Ok(BlockIds {
            agent: self.cross(&format!("{name}.agent"), d)?,
            neighbors: self.cross(&format!("{name}.neighbors"), d)?,
            image: match cfg.backbone {
                Backbone::Patch => Some(self.cross(&format!("{name}.image"), d)?),
                Backbone::Nomap => None,
            },
            norm_attn: self.norm(&format!("{name}.latent.norm_attn"), d)?,
            self_attn: self.attention(&format!("{name}.latent.attn"), d, d)?,
            norm_ff: self.norm(&format!("{name}.latent.norm_ff"), d)?,
            ff: self.mlp(&format!("{name}.latent.ff"), &ff_spec)?,
        })
    }
}

impl TrajectoryModel {
    /// Validates `config` and initializes a parameter registry from `seed`.
    ///
    /// Linear weights are Kaiming-uniform on fan-in with zero biases. Every
    /// other learnable array is drawn from N(0, 0.02²).
    pub fn new(config: ModelConfig, seed: u64) -> Result<(Self, ModelParams<f64>)> {
        config.validate()?;
        let mut params = ModelParams::new();
        let mut init = Init {
            params: &mut params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        let d = config.d_model;

        let pose = init.mlp("pose", &MlpSpec::new(config.pose_mlp.clone())?)?;
        let latent = init.normal("latent", &[config.latent_len, d], 0.02)?;
        let null_token = init.normal("null_token", &[1, d], 0.02)?;
        let patch = match config.backbone {
            Backbone::Patch => Some(PatchIds {
                proj: init.linear("patch.proj", config.patch_size * config.patch_size * 3, d)?,
                pos: init.normal("patch.pos", &[config.patch_count(), d], 0.02)?,
            }),
            Backbone::Nomap => None,
        };
        let mut blocks: Vec<BlockIds> = Vec::with_capacity(config.n_blocks);
        for b in 0..config.n_blocks {
            if config.tie_block_weights && b > 0 {
                blocks.push(blocks[0].clone());
            } else {
                blocks.push(init.block(&format!("block{b}"), &config)?);
            }
        }
        let goal = init.mlp("goal", &MlpSpec::new(config.goal_mlp.clone())?)?;
        let traj = init.mlp("traj", &MlpSpec::new(config.traj_mlp.clone())?)?;

        let layout = ModelLayout {
            pose,
            latent,
            null_token,
            patch,
            blocks,
            goal,
            traj,
        };
        Ok((Self { config, layout }, params))
    }

    /// Builds the layout for `config` and fills it from a checkpoint file.
    /// Any mismatch against the layout is a load error.
    pub fn from_checkpoint(config: ModelConfig, path: &Path) -> Result<(Self, ModelParams<f64>)> {
        let (model, mut params) = Self::new(config, 0)?;
        let file = File::open(path).map_err(|e| Error::Load(format!("{}: {e}", path.display())))?;
        let records = read_checkpoint(BufReader::new(file))?;
        params.load_records(&records)?;
        Ok((model, params))
    }
}
