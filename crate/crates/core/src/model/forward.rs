use crate::data::{Frame, Trajectory};
use crate::geometry::{extract_patches, RigidTransform2D};
use crate::model::{positional_encoding, BlockIds, CrossAttentionIds, ModelInput, TrajectoryModel};
use crate::numerics::{layer_norm, linear, mlp, multi_head_attention, Graph, LinearVars, ModelParams, Scalar, Tensor, Var};
use crate::{Error, Result, T_PRED};

/// How the trajectory head is conditioned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// On the ground-truth goal (training).
    TeacherForced,
    /// On the goal head's own prediction.
    Inference,
}

/// Embedded inputs of one scene, each `[rows, d_model]`.
#[derive(Debug, Clone)]
pub struct SceneTokens {
    pub agent: Var,
    pub neighbors: Var,
    /// `false` marks padded neighbor steps.
    pub neighbor_mask: Option<Vec<bool>>,
    pub image: Option<Var>,
}

#[derive(Debug, Clone, Copy)]
pub struct ForwardOutput {
    /// Final latent, `[latent_len, d_model]`.
    pub latent: Var,
    /// Goal head output, `[1, 2]`, agent frame, dataset units.
    pub goal: Var,
    /// `[T_PRED, 2]`, agent frame, dataset units.
    pub trajectory: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub goal: [f64; 2],
    pub trajectory: Vec<[f64; 2]>,
    pub frame: Frame,
    /// Agent frame back to dataset coordinates.
    pub to_world: RigidTransform2D,
}

impl Prediction {
    pub fn world_trajectory(&self) -> Vec<[f64; 2]> {
        self.trajectory.iter().map(|&p| self.to_world.apply(p)).collect()
    }

    pub fn world_goal(&self) -> [f64; 2] {
        self.to_world.apply(self.goal)
    }
}

fn bind_all<F: Scalar>(g: &mut Graph<F>, p: &ModelParams<F>, ids: &[crate::model::LinearIds]) -> Vec<LinearVars> {
    ids.iter().map(|l| l.bind(g, p)).collect()
}

/// Pose-MLP embeddings of stacked trajectories concatenated with the
/// temporal encoding of each point's index within its own trajectory.
fn embed_stack<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    trajs: &[&Trajectory],
) -> Result<Var> {
    let cfg = &model.config;
    let inv_scale = 1.0 / cfg.position_scale;
    let mut points = Vec::new();
    let mut pe_rows = Vec::new();
    let longest = trajs.iter().map(|t| t.len()).max().unwrap_or(0);
    if longest == 0 {
        return Err(Error::Empty("trajectory to embed"));
    }
    let pe = positional_encoding::<F>(longest, cfg.pe_dim)?;
    for t in trajs {
        if t.frame != Frame::AgentCentric {
            return Err(Error::Contract(format!(
                "agent {} must be normalized to the agent frame before embedding",
                t.agent_id
            )));
        }
        for (k, p) in t.points.iter().enumerate() {
            points.push(F::from_f64(p.x * inv_scale));
            points.push(F::from_f64(p.y * inv_scale));
            pe_rows.extend_from_slice(pe.row(k));
        }
    }
    let n = points.len() / 2;
    let x = g.constant(Tensor::new(vec![n, 2], points)?);
    let layers = bind_all(g, params, &model.layout.pose);
    let emb = mlp(g, x, &layers)?;
    let pe = g.constant(Tensor::new(vec![n, cfg.pe_dim], pe_rows)?);
    g.concat_cols(&[emb, pe])
}

/// Per-step tokens of one normalized trajectory, `[T, d_model]`.
pub fn embed_tokens<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    traj: &Trajectory,
) -> Result<Var> {
    embed_stack(g, params, model, &[traj])
}

fn scene_tokens<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    input: &ModelInput,
) -> Result<SceneTokens> {
    let agent = embed_tokens(g, params, model, &input.observed)?;
    let (neighbors, neighbor_mask) = if input.neighbors.is_empty() {
        (g.param(params, model.layout.null_token), None)
    } else {
        let trajs: Vec<&Trajectory> = input.neighbors.iter().map(|n| &n.trajectory).collect();
        let mask: Vec<bool> = input.neighbors.iter().flat_map(|n| n.valid.iter().copied()).collect();
        let tokens = embed_stack(g, params, model, &trajs)?;
        let mask = if mask.iter().all(|&m| m) { None } else { Some(mask) };
        (tokens, mask)
    };
    let image = match (&model.layout.patch, &input.image) {
        (None, _) => None,
        (Some(_), None) => return Err(Error::Contract("patch backbone needs an image crop".into())),
        (Some(ids), Some(crop)) => {
            let patches = g.constant(extract_patches::<F>(crop, model.config.patch_size)?);
            let proj = ids.proj.bind(g, params);
            let tokens = linear(g, patches, proj)?;
            let pos = g.param(params, ids.pos);
            Some(g.add(tokens, pos)?)
        }
    };
    Ok(SceneTokens {
        agent,
        neighbors,
        neighbor_mask,
        image,
    })
}

fn cross_attend<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    heads: usize,
    ids: &CrossAttentionIds,
    z: Var,
    tokens: Var,
    mask: Option<&[bool]>,
) -> Result<Var> {
    let nl = ids.norm_latent.bind(g, params);
    let ni = ids.norm_input.bind(g, params);
    let q = layer_norm(g, z, nl)?;
    let kv = layer_norm(g, tokens, ni)?;
    let attn = ids.attn.bind(g, params);
    let update = multi_head_attention(g, q, kv, heads, &attn, mask)?;
    g.add(z, update)
}

/// Cross-attends the latent to each input modality in turn, then runs one
/// pre-norm self-attention + feed-forward layer on it. Every sub-block is
/// residual.
pub fn encoder_block<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    block: &BlockIds,
    z: Var,
    tokens: &SceneTokens,
) -> Result<Var> {
    let d = model.config.d_model;
    for &t in [Some(tokens.agent), Some(tokens.neighbors), tokens.image].iter().flatten() {
        if g.value(t).cols() != d {
            return Err(Error::Dimension {
                op: "encoder_block",
                lhs: g.shape(t).to_vec(),
                rhs: vec![d],
            });
        }
    }
    let heads = model.config.heads;
    let mut z = cross_attend(g, params, heads, &block.agent, z, tokens.agent, None)?;
    z = cross_attend(g, params, heads, &block.neighbors, z, tokens.neighbors, tokens.neighbor_mask.as_deref())?;
    if let (Some(ids), Some(img)) = (&block.image, tokens.image) {
        z = cross_attend(g, params, heads, ids, z, img, None)?;
    }

    let n1 = block.norm_attn.bind(g, params);
    let h = layer_norm(g, z, n1)?;
    let attn = block.self_attn.bind(g, params);
    let sa = multi_head_attention(g, h, h, heads, &attn, None)?;
    z = g.add(z, sa)?;

    let n2 = block.norm_ff.bind(g, params);
    let h = layer_norm(g, z, n2)?;
    let ff = bind_all(g, params, &block.ff);
    let f = mlp(g, h, &ff)?;
    g.add(z, f)
}

/// Runs every encoder block starting from the learnable latent array.
pub fn encode<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    input: &ModelInput,
) -> Result<Var> {
    let tokens = scene_tokens(g, params, model, input)?;
    let mut z = g.param(params, model.layout.latent);
    for block in &model.layout.blocks {
        z = encoder_block(g, params, model, block, z, &tokens)?;
    }
    Ok(z)
}

/// Flattened latent through the goal MLP, `[1, 2]`, in model units.
pub fn decode_goal<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    z: Var,
) -> Result<Var> {
    let n = g.value(z).len();
    let flat = g.reshape(z, vec![1, n])?;
    let layers = bind_all(g, params, &model.layout.goal);
    mlp(g, flat, &layers)
}

/// Each latent row with the goal appended goes through the shared trajectory
/// MLP; the row outputs are averaged and read as `[T_PRED, 2]` (model units).
pub fn decode_trajectory<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    z: Var,
    goal: Var,
) -> Result<Var> {
    let rows = g.value(z).rows();
    let goal = g.reshape(goal, vec![1, 2])?;
    let tiled = g.repeat_rows(goal, rows)?;
    let x = g.concat_cols(&[z, tiled])?;
    let layers = bind_all(g, params, &model.layout.traj);
    let per_row = mlp(g, x, &layers)?;
    let pooled = g.mean_rows(per_row);
    g.reshape(pooled, vec![T_PRED, 2])
}

/// Full network on one prepared scene.
///
/// Inference mode never reads `input.future`.
pub fn forward<F: Scalar>(
    g: &mut Graph<F>,
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    input: &ModelInput,
    mode: Mode,
) -> Result<ForwardOutput> {
    let scale = model.config.position_scale;
    let z = encode(g, params, model, input)?;
    let goal_units = decode_goal(g, params, model, z)?;
    let condition = match mode {
        Mode::Inference => goal_units,
        Mode::TeacherForced => {
            let future = input
                .future
                .as_ref()
                .ok_or_else(|| Error::Contract("teacher forcing needs the ground-truth future".into()))?;
            let last = future.last().ok_or(Error::Empty("ground-truth future"))?;
            g.constant(Tensor::from_f64(vec![1, 2], &[last[0] / scale, last[1] / scale])?)
        }
    };
    let traj_units = decode_trajectory(g, params, model, z, condition)?;
    let goal = g.scale(goal_units, F::from_f64(scale));
    let trajectory = g.scale(traj_units, F::from_f64(scale));
    Ok(ForwardOutput {
        latent: z,
        goal,
        trajectory,
    })
}

/// Evaluates [`forward`] on a fresh tape and returns plain values.
pub fn predict<F: Scalar>(
    params: &ModelParams<F>,
    model: &TrajectoryModel,
    input: &ModelInput,
    mode: Mode,
) -> Result<Prediction> {
    let mut g = Graph::new();
    let out = forward(&mut g, params, model, input, mode)?;
    let goal = g.value(out.goal).data();
    let traj = g.value(out.trajectory);
    Ok(Prediction {
        goal: [goal[0].as_f64(), goal[1].as_f64()],
        trajectory: (0..T_PRED).map(|r| [traj.at(r, 0).as_f64(), traj.at(r, 1).as_f64()]).collect(),
        frame: Frame::AgentCentric,
        to_world: input.transform.inverse(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::{generate, synthetic_image, SyntheticConfig};
    use crate::data::Scene;
    use crate::geometry::Sampling;
    use crate::model::{prepare_input, Backbone, ModelConfig};

    fn scene(seed: u64) -> Scene {
        let cfg = SyntheticConfig {
            scenes: 1,
            neighbors: (3, 3),
            ..Default::default()
        };
        generate(&cfg, seed).remove(0)
    }

    fn setup(cfg: ModelConfig) -> (TrajectoryModel, ModelParams<f64>, ModelInput) {
        let (model, params) = TrajectoryModel::new(cfg, 1).unwrap();
        let input = prepare_input(&scene(4), None, &model.config).unwrap();
        (model, params, input)
    }

    fn max_diff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
        a.iter()
            .zip(b)
            .flat_map(|(p, q)| [(p[0] - q[0]).abs(), (p[1] - q[1]).abs()])
            .fold(0.0, f64::max)
    }

    #[test]
    fn output_shapes() {
        let (model, params, input) = setup(ModelConfig::default());
        let mut g = Graph::new();
        let out = forward(&mut g, &params, &model, &input, Mode::TeacherForced).unwrap();
        assert_eq!(g.shape(out.latent), &[12, 48]);
        assert_eq!(g.shape(out.goal), &[1, 2]);
        assert_eq!(g.shape(out.trajectory), &[T_PRED, 2]);
        let tokens = embed_tokens(&mut g, &params, &model, &input.observed).unwrap();
        assert_eq!(g.shape(tokens), &[8, 48]);
    }

    #[test]
    fn single_point_embeds_to_one_token() {
        let (model, params, input) = setup(ModelConfig::default());
        let mut one = input.observed.clone();
        one.points.truncate(1);
        let mut g = Graph::new();
        let t = embed_tokens(&mut g, &params, &model, &one).unwrap();
        assert_eq!(g.shape(t), &[1, 48]);
    }

    #[test]
    fn world_frame_tokens_are_rejected() {
        let (model, params, input) = setup(ModelConfig::default());
        let mut raw = input.observed.clone();
        raw.frame = Frame::World;
        let mut g = Graph::new();
        assert!(matches!(embed_tokens(&mut g, &params, &model, &raw), Err(Error::Contract(_))));
    }

    #[test]
    fn neighbor_order_does_not_matter() {
        let (model, params, input) = setup(ModelConfig::default());
        assert!(input.neighbors.len() >= 2);
        let a = predict(&params, &model, &input, Mode::Inference).unwrap();
        let mut shuffled = input.clone();
        shuffled.neighbors.reverse();
        shuffled.neighbors.rotate_left(1);
        let b = predict(&params, &model, &shuffled, Mode::Inference).unwrap();
        assert!(max_diff(&a.trajectory, &b.trajectory) < 1e-10);
        assert!(max_diff(&[a.goal], &[b.goal]) < 1e-10);
    }

    #[test]
    fn inference_ignores_future() {
        let (model, params, input) = setup(ModelConfig::default());
        let base = predict(&params, &model, &input.without_future(), Mode::Inference).unwrap();
        let mut other = input.clone();
        other.future = Some(vec![[100.0, -50.0]; T_PRED]);
        for inp in [&input, &other] {
            let p = predict(&params, &model, inp, Mode::Inference).unwrap();
            assert_eq!(p.trajectory, base.trajectory);
            assert_eq!(p.goal, base.goal);
        }
    }

    #[test]
    fn teacher_forcing_needs_future() {
        let (model, params, input) = setup(ModelConfig::default());
        let mut g = Graph::new();
        let err = forward(&mut g, &params, &model, &input.without_future(), Mode::TeacherForced).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn time_order_changes_output() {
        let (model, params, input) = setup(ModelConfig::default());
        let a = predict(&params, &model, &input, Mode::Inference).unwrap();
        let mut reversed = input.clone();
        let pts: Vec<_> = reversed.observed.points.iter().map(|p| (p.x, p.y)).rev().collect();
        for (p, (x, y)) in reversed.observed.points.iter_mut().zip(pts) {
            p.x = x;
            p.y = y;
        }
        let b = predict(&params, &model, &reversed, Mode::Inference).unwrap();
        assert!(max_diff(&a.trajectory, &b.trajectory) > 1e-6);
    }

    #[test]
    fn zeroed_update_paths_leave_latent_unchanged() {
        let (model, mut params, input) = setup(ModelConfig::default());
        let names: Vec<String> = params
            .blocks()
            .iter()
            .map(|b| b.name.clone())
            .filter(|n| n.contains(".attn.o.") || n.contains(".ff.1."))
            .collect();
        assert_eq!(names.len(), 4 * 4 * 2);
        for n in names {
            let id = params.id(&n).unwrap();
            params.block_mut(id).value.data_mut().fill(0.0);
        }
        let mut g = Graph::new();
        let z = encode(&mut g, &params, &model, &input).unwrap();
        assert_eq!(g.value(z), params.value(model.layout.latent));
    }

    #[test]
    fn zero_blocks_returns_latent() {
        let cfg = ModelConfig { n_blocks: 0, ..Default::default() };
        let (model, params, input) = setup(cfg);
        let mut g = Graph::new();
        let z = encode(&mut g, &params, &model, &input).unwrap();
        assert_eq!(g.value(z), params.value(model.layout.latent));
    }

    fn dense(x: &[f64], w: &Tensor<f64>, b: &Tensor<f64>, relu: bool) -> Vec<f64> {
        let (n_in, n_out) = (w.shape()[0], w.shape()[1]);
        (0..n_out)
            .map(|j| {
                let s = b.data()[j] + (0..n_in).map(|i| x[i] * w.at(i, j)).sum::<f64>();
                if relu {
                    s.max(0.0)
                } else {
                    s
                }
            })
            .collect()
    }

    fn mlp_oracle(x: &[f64], params: &ModelParams<f64>, ids: &[crate::model::LinearIds]) -> Vec<f64> {
        let mut h = x.to_vec();
        for (k, l) in ids.iter().enumerate() {
            h = dense(&h, params.value(l.w), params.value(l.b), k + 1 < ids.len());
        }
        h
    }

    #[test]
    fn heads_match_scalar_oracle() {
        let (model, params, input) = setup(ModelConfig::default());
        let mut g = Graph::new();
        let out = forward(&mut g, &params, &model, &input, Mode::Inference).unwrap();
        let z = g.value(out.latent).clone();

        let goal = mlp_oracle(z.data(), &params, &model.layout.goal);
        let got_goal = g.value(out.goal).data();
        assert!((goal[0] - got_goal[0]).abs() < 1e-10 && (goal[1] - got_goal[1]).abs() < 1e-10);

        let mut pooled = [0.0; 24];
        for r in 0..z.rows() {
            let mut row = z.row(r).to_vec();
            row.extend_from_slice(&goal);
            for (acc, v) in pooled.iter_mut().zip(mlp_oracle(&row, &params, &model.layout.traj)) {
                *acc += v / z.rows() as f64;
            }
        }
        let got = g.value(out.trajectory).data();
        for (a, b) in pooled.iter().zip(got) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn position_scale_is_equivariant() {
        let (model, params, input) = setup(ModelConfig::default());
        let base = predict(&params, &model, &input, Mode::Inference).unwrap();

        let s = 20.0;
        let mut scaled_model = model.clone();
        scaled_model.config.position_scale = s;
        let mut scaled = input.clone();
        for p in &mut scaled.observed.points {
            p.x *= s;
            p.y *= s;
        }
        for n in &mut scaled.neighbors {
            for p in &mut n.trajectory.points {
                p.x *= s;
                p.y *= s;
            }
        }
        let out = predict(&params, &scaled_model, &scaled, Mode::Inference).unwrap();
        let expect: Vec<[f64; 2]> = base.trajectory.iter().map(|p| [p[0] * s, p[1] * s]).collect();
        assert!(max_diff(&out.trajectory, &expect) < 1e-9);
    }

    #[test]
    fn patch_backbone_consumes_image() {
        let cfg = ModelConfig {
            backbone: Backbone::Patch,
            crop_size: 16,
            patch_size: 8,
            sampling: Sampling::Nearest,
            ..Default::default()
        };
        let (model, params) = TrajectoryModel::new(cfg, 2).unwrap();
        let img = synthetic_image(64, 0.5, 3);
        let sc = scene(4);
        let input = prepare_input(&sc, Some(&img), &model.config).unwrap();
        assert!(input.image.is_some());
        let a = predict(&params, &model, &input, Mode::Inference).unwrap();

        let mut blank = input.clone();
        let crop = blank.image.as_ref().unwrap();
        blank.image = Some(crate::geometry::BevImage::zeros(crop.height(), crop.width()));
        let b = predict(&params, &model, &blank, Mode::Inference).unwrap();
        assert!(max_diff(&a.trajectory, &b.trajectory) > 1e-9);

        let mut missing = input;
        missing.image = None;
        let mut g = Graph::new();
        assert!(matches!(
            forward(&mut g, &params, &model, &missing, Mode::Inference),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn world_prediction_inverts_normalization() {
        let (model, params, input) = setup(ModelConfig::default());
        let p = predict(&params, &model, &input, Mode::Inference).unwrap();
        let back: Vec<[f64; 2]> = p.world_trajectory().iter().map(|&q| input.transform.apply(q)).collect();
        assert!(max_diff(&back, &p.trajectory) < 1e-9);
    }
}
