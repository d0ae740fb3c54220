use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{holdout_split, ImageStore, Scene, SplitPlan};
use crate::eval::{ade, fde};
use crate::model::{forward, predict, prepare_input, Backbone, Mode, ModelInput, TrajectoryModel};
use crate::numerics::{adam_step, write_checkpoint, AdamState, Graph, ModelParams, Precision, Scalar};
use crate::training::{loss_graph, lr_schedule, TrainConfig};
use crate::{Error, Result};

pub const FINAL_CHECKPOINT: &str = "model.ckpt";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LAST_GOOD_CHECKPOINT: &str = "last_good.ckpt";

/// One line of the progress stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-scene training loss over the epoch, taken as batches run.
    pub loss: f64,
    pub lr: f64,
    pub val_ade: Option<f64>,
    pub val_fde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub precision: Precision,
    pub train_scenes: usize,
    pub val_scenes: usize,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub wall_clock_secs: f64,
    pub final_checkpoint: Option<PathBuf>,
    pub best_checkpoint: Option<PathBuf>,
}

pub struct TrainOutcome {
    pub report: TrainReport,
    /// Parameters after the last epoch, widened to `f64`.
    pub params: ModelParams<f64>,
    /// Parameters at the best validation ADE, when a validation set exists.
    pub best: Option<ModelParams<f64>>,
}

/// Where checkpoints and the JSON-lines progress stream go.
pub struct TrainSinks<'a> {
    pub out_dir: Option<&'a Path>,
    pub progress: Option<&'a mut dyn Write>,
}

impl TrainSinks<'_> {
    pub fn none() -> Self {
        TrainSinks {
            out_dir: None,
            progress: None,
        }
    }
}

fn save<F: Scalar>(params: &ModelParams<F>, dir: Option<&Path>, name: &str) -> Result<Option<PathBuf>> {
    let Some(dir) = dir else {
        return Ok(None);
    };
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    write_checkpoint(params, &mut w)?;
    w.flush()?;
    Ok(Some(path))
}

/// Prepares model inputs for the given scene indices, in order.
pub fn prepare_inputs(model: &TrajectoryModel, scenes: &[Scene], indices: &[usize], images: &ImageStore) -> Result<Vec<ModelInput>> {
    indices
        .iter()
        .map(|&i| {
            let scene = scenes
                .get(i)
                .ok_or_else(|| Error::Contract(format!("scene index {i} out of range ({})", scenes.len())))?;
            let image = match model.config.backbone {
                Backbone::Patch => images.for_scene(scene)?,
                Backbone::Nomap => None,
            };
            prepare_input(scene, image, &model.config)
        })
        .collect()
}

/// Inference-mode ADE and FDE over prepared inputs, in the agent frame.
pub fn score_inputs<F: Scalar>(model: &TrajectoryModel, params: &ModelParams<F>, inputs: &[ModelInput]) -> Result<(f64, f64)> {
    let mut preds = Vec::with_capacity(inputs.len());
    let mut gts = Vec::with_capacity(inputs.len());
    for input in inputs {
        let gt = input.future.clone().ok_or(Error::Empty("ground-truth future"))?;
        preds.push(predict(params, model, &input.without_future(), Mode::Inference)?.trajectory);
        gts.push(gt);
    }
    Ok((ade(&preds, &gts)?, fde(&preds, &gts)?))
}

/// Trains on the split's training scenes, holding out `val_fraction` of them
/// for checkpoint selection.
pub fn train_split(
    model: &TrajectoryModel,
    init: &ModelParams<f64>,
    scenes: &[Scene],
    split: &SplitPlan,
    images: &ImageStore,
    cfg: &TrainConfig,
    sinks: TrainSinks<'_>,
) -> Result<TrainOutcome> {
    let (train_idx, val_idx) = holdout_split(&split.train, cfg.val_fraction, cfg.seed);
    let train_inputs = prepare_inputs(model, scenes, &train_idx, images)?;
    let val_inputs = prepare_inputs(model, scenes, &val_idx, images)?;
    train(model, init, &train_inputs, &val_inputs, cfg, sinks)
}

/// Teacher-forced Adam training on prepared inputs.
///
/// Each mini-batch sums per-scene gradients in a fixed order and averages
/// them, so a seed fixes every number the run produces. With zero epochs the
/// initialization is written as the final checkpoint.
pub fn train(
    model: &TrajectoryModel,
    init: &ModelParams<f64>,
    train_inputs: &[ModelInput],
    val_inputs: &[ModelInput],
    cfg: &TrainConfig,
    sinks: TrainSinks<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_inputs.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if let Some(i) = train_inputs.iter().position(|x| x.future.is_none()) {
        return Err(Error::Contract(format!("training input {i} has no ground-truth future")));
    }
    match cfg.precision {
        Precision::Fast => run::<f32>(model, init, train_inputs, val_inputs, cfg, sinks),
        Precision::Check => run::<f64>(model, init, train_inputs, val_inputs, cfg, sinks),
    }
}

fn run<F: Scalar>(
    model: &TrajectoryModel,
    init: &ModelParams<f64>,
    train_inputs: &[ModelInput],
    val_inputs: &[ModelInput],
    cfg: &TrainConfig,
    mut sinks: TrainSinks<'_>,
) -> Result<TrainOutcome> {
    let started = Instant::now();
    let mut params: ModelParams<F> = init.cast();
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_inputs.len()).collect();
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams<F>)> = None;
    let mut best_checkpoint = None;

    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(epoch, cfg);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            params.zero_grad();
            for &i in batch {
                let input = &train_inputs[i];
                let mut g = Graph::new();
                let out = forward(&mut g, &params, model, input, Mode::TeacherForced)?;
                let gt = input.future.as_ref().expect("checked before training");
                let l = loss_graph(&mut g, &out, gt, cfg.lambda)?;
                let value = g.value(l).data()[0].as_f64();
                if !value.is_finite() {
                    save(&params, sinks.out_dir, LAST_GOOD_CHECKPOINT)?;
                    return Err(Error::Training {
                        param: "loss".into(),
                        reason: format!("non-finite loss {value} at epoch {epoch}"),
                    });
                }
                loss_sum += value;
                g.backward(l)?.accumulate_into(&mut params);
            }
            params.scale_grads(F::from_f64(1.0 / batch.len() as f64));
            let before = params.clone();
            if let Err(e) = adam_step(&mut params, &mut adam, lr) {
                save(&before, sinks.out_dir, LAST_GOOD_CHECKPOINT)?;
                return Err(e);
            }
        }

        let (val_ade, val_fde) = if val_inputs.is_empty() {
            (None, None)
        } else {
            let (a, f) = score_inputs(model, &params, val_inputs)?;
            (Some(a), Some(f))
        };
        let record = EpochRecord {
            epoch,
            loss: loss_sum / train_inputs.len() as f64,
            lr,
            val_ade,
            val_fde,
        };
        if let Some(w) = sinks.progress.as_mut() {
            writeln!(w, "{}", serde_json::to_string(&record)?)?;
            w.flush()?;
        }
        if let Some(a) = val_ade {
            if best.as_ref().is_none_or(|(b, _, _)| a < *b) {
                best_checkpoint = save(&params, sinks.out_dir, BEST_CHECKPOINT)?;
                best = Some((a, epoch, params.clone()));
            }
        }
        records.push(record);
    }

    let final_checkpoint = save(&params, sinks.out_dir, FINAL_CHECKPOINT)?;
    let report = TrainReport {
        seed: cfg.seed,
        precision: cfg.precision,
        train_scenes: train_inputs.len(),
        val_scenes: val_inputs.len(),
        epochs: records,
        best_epoch: best.as_ref().map(|(_, e, _)| *e),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        final_checkpoint,
        best_checkpoint,
    };
    Ok(TrainOutcome {
        report,
        params: params.cast(),
        best: best.map(|(_, _, p)| p.cast()),
    })
}
