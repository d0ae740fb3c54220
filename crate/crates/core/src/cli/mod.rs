//! Command-line pipeline: `prepare`, `train`, `eval`, `baseline`,
//! `gradcheck` and `plot`.
//!
//! Every flag can also be set through a `TRAJPRED_`-prefixed environment
//! variable (`--dataset-root` reads `TRAJPRED_DATASET_ROOT`, and so on).
//! Explicit flags override values from the TOML config files.

mod datasets;
mod split;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use datasets::{load_dataset, load_dataset_root, SEQUENCE_ID_STRIDE};
pub use split::SplitSpec;

use crate::data::synthetic::{generate, synthetic_image, SyntheticConfig};
use crate::data::{DatasetEntry, ImageSpec, ImageStore, SceneCache, SplitPlan, Units};
use crate::eval::plot::{render_distribution, render_overlay, save_png};
use crate::eval::{error_distribution, evaluate, markdown_table, LinearBaseline, MetricReport, NetworkPredictor, Predictor};
use crate::geometry::rotate_crop;
use crate::model::{prepare_input, Backbone, ModelConfig, TrajectoryModel};
use crate::numerics::{gradient_check, GradCheckConfig, ModelParams, Precision};
use crate::training::{loss_graph, train_split, TrainConfig, TrainSinks, FINAL_CHECKPOINT};
use crate::{Error, Result};

pub const CACHE_FILE: &str = "scenes.json";
pub const MODEL_CONFIG_FILE: &str = "model_config.toml";
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "trajpred", version, about = "Goal-conditioned pedestrian trajectory prediction")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand. Recorded as `run.json` in the output
/// directory.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RunConfig {
    /// Directory holding one subdirectory per dataset.
    #[arg(long, global = true, env = "TRAJPRED_DATASET_ROOT")]
    pub dataset_root: Option<PathBuf>,
    /// Scene cache written by `prepare` (default: `<out>/scenes.json`).
    #[arg(long, global = true, env = "TRAJPRED_CACHE")]
    pub cache: Option<PathBuf>,
    /// all | loocv | loocv:<dataset> | random:<fraction>
    #[arg(long, global = true, env = "TRAJPRED_SPLIT", default_value = "all")]
    pub split: String,
    #[arg(long, global = true, env = "TRAJPRED_MODEL_CONFIG")]
    pub model_config: Option<PathBuf>,
    #[arg(long, global = true, env = "TRAJPRED_TRAIN_CONFIG")]
    pub train_config: Option<PathBuf>,
    #[arg(long, global = true, env = "TRAJPRED_OUT", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, env = "TRAJPRED_SEED")]
    pub seed: Option<u64>,
    /// fast (f32) | check (f64)
    #[arg(long, global = true, env = "TRAJPRED_PRECISION")]
    pub precision: Option<Precision>,
    /// nomap | patch
    #[arg(long, global = true, env = "TRAJPRED_BACKBONE")]
    pub backbone: Option<Backbone>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum Command {
    /// Parse annotations (or generate synthetic scenes) into a scene cache.
    Prepare {
        /// Restrict to these dataset directories.
        #[arg(long, value_delimiter = ',')]
        datasets: Vec<String>,
        /// Generate this many synthetic scenes per set instead of reading files.
        #[arg(long)]
        synthetic: Option<usize>,
        /// Number of synthetic datasets (named synthetic0, synthetic1, ...).
        #[arg(long, default_value_t = 1)]
        synthetic_sets: usize,
        /// Share of synthetic agents that turn.
        #[arg(long, default_value_t = 0.5)]
        curved_fraction: f64,
        /// Also write a synthetic scene image and crop from it.
        #[arg(long)]
        synthetic_image: bool,
        /// Dump the agent-frame crops of this many scenes as PNGs.
        #[arg(long, default_value_t = 0)]
        dump_crops: usize,
    },
    /// Train one model per split fold.
    Train {
        #[arg(long, env = "TRAJPRED_EPOCHS")]
        epochs: Option<usize>,
    },
    /// Evaluate a checkpoint (file, or a directory with one subdirectory per fold).
    Eval {
        #[arg(long, env = "TRAJPRED_CHECKPOINT")]
        checkpoint: PathBuf,
    },
    /// Evaluate the constant-velocity baseline.
    Baseline,
    /// Compare analytic and finite-difference gradients of the training loss.
    Gradcheck {
        #[arg(long, default_value_t = 200)]
        probes: usize,
    },
    /// Final-error distribution and trajectory overlays from an eval report.
    Plot {
        /// `metrics.json` written by eval or baseline.
        #[arg(long)]
        metrics: PathBuf,
        /// Checkpoint whose predictions are drawn in the overlays.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        overlays: usize,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Prepare { .. } => "prepare",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Baseline => "baseline",
            Command::Gradcheck { .. } => "gradcheck",
            Command::Plot { .. } => "plot",
        }
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    args: &'a Command,
    #[serde(flatten)]
    run: &'a RunConfig,
    seed: u64,
}

/// Parses `args` (including the program name) and runs the subcommand,
/// writing a summary to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        // --help and --version
        Err(e) if !e.use_stderr() => {
            write!(stdout, "{e}")?;
            return Ok(());
        }
        Err(e) => return Err(Error::Config(e.to_string().trim_end().to_string())),
    };
    execute(&cli, stdout)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let run = &cli.run;
    std::fs::create_dir_all(&run.out)?;
    let seed = run.seed.unwrap_or(0);
    write_json(
        &run.out.join(format!("run_{}.json", cli.command.name())),
        &RunRecord {
            command: cli.command.name(),
            args: &cli.command,
            run,
            seed,
        },
    )?;
    match &cli.command {
        Command::Prepare {
            datasets,
            synthetic,
            synthetic_sets,
            curved_fraction,
            synthetic_image,
            dump_crops,
        } => {
            let cache = match synthetic {
                Some(n) => synthetic_cache(&run.out, *n, *synthetic_sets, *curved_fraction, *synthetic_image, seed)?,
                None => {
                    let root = run
                        .dataset_root
                        .as_ref()
                        .ok_or_else(|| Error::Config("prepare needs --dataset-root or --synthetic".into()))?;
                    load_dataset_root(root, datasets)?
                }
            };
            let path = run.out.join(CACHE_FILE);
            cache.write(&path)?;
            for d in &cache.datasets {
                writeln!(stdout, "{}: {} scenes ({})", d.name, d.scene_count, d.units)?;
            }
            writeln!(stdout, "total: {} scenes -> {}", cache.scenes.len(), path.display())?;
            if *dump_crops > 0 {
                dump_scene_crops(run, &cache, *dump_crops)?;
            }
            Ok(())
        }
        Command::Train { epochs } => cmd_train(run, *epochs, seed, stdout),
        Command::Eval { checkpoint } => cmd_eval(run, checkpoint, seed, stdout),
        Command::Baseline => {
            let cache = load_cache(run)?;
            let images = ImageStore::from_cache(&cache)?;
            let plans = split_spec(run)?.plans(&cache, seed)?;
            let report = evaluate(&LinearBaseline, &cache.scenes, &plans, &images)?;
            write_report(&run.out, &report, stdout)
        }
        Command::Gradcheck { probes } => cmd_gradcheck(run, *probes, seed, stdout),
        Command::Plot {
            metrics,
            checkpoint,
            overlays,
            bins,
        } => cmd_plot(run, metrics, checkpoint.as_deref(), *overlays, *bins, stdout),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn split_spec(run: &RunConfig) -> Result<SplitSpec> {
    run.split.parse()
}

fn model_config(run: &RunConfig, fallback: Option<&Path>) -> Result<ModelConfig> {
    let mut cfg = match (&run.model_config, fallback) {
        (Some(p), _) => ModelConfig::load(p)?,
        (None, Some(p)) if p.exists() => ModelConfig::load(p)?,
        _ => ModelConfig::default(),
    };
    if let Some(b) = run.backbone {
        cfg.backbone = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train_config(run: &RunConfig, epochs: Option<usize>) -> Result<TrainConfig> {
    let mut cfg = match &run.train_config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(p) = run.precision {
        cfg.precision = p;
    }
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Cache from `--cache`, else a fresh parse of `--dataset-root`, else
/// `<out>/scenes.json`.
fn load_cache(run: &RunConfig) -> Result<SceneCache> {
    if let Some(p) = &run.cache {
        if !p.exists() {
            return Err(Error::MissingPaths(vec![p.clone()]));
        }
        return SceneCache::read(p);
    }
    if let Some(root) = &run.dataset_root {
        return load_dataset_root(root, &[]);
    }
    let p = run.out.join(CACHE_FILE);
    if p.exists() {
        SceneCache::read(&p)
    } else {
        Err(Error::MissingPaths(vec![p]))
    }
}

fn synthetic_cache(out: &Path, n: usize, sets: usize, curved: f64, with_image: bool, seed: u64) -> Result<SceneCache> {
    if n == 0 || sets == 0 {
        return Err(Error::Config("synthetic scene and set counts must be positive".into()));
    }
    let mut entries = Vec::new();
    let mut scenes = Vec::new();
    for k in 0..sets {
        let name = if sets == 1 { "synthetic".to_string() } else { format!("synthetic{k}") };
        let image = if with_image {
            let path = out.join(format!("{name}.png"));
            let upp = 0.25;
            let img = synthetic_image(160, upp, seed.wrapping_add(k as u64));
            img.save_png(&path)?;
            Some(ImageSpec {
                path,
                units_per_pixel: upp,
                origin: img.origin,
            })
        } else {
            None
        };
        let cfg = SyntheticConfig {
            dataset: name.clone(),
            scenes: n,
            curved_fraction: curved,
            image: image.as_ref().map(|_| name.clone()),
            ..Default::default()
        };
        let s = generate(&cfg, seed.wrapping_add(1000 * k as u64));
        entries.push(DatasetEntry {
            name,
            units: Units::Meters,
            scene_count: s.len(),
            image,
        });
        scenes.extend(s);
    }
    Ok(SceneCache::new(entries, scenes))
}

fn dump_scene_crops(run: &RunConfig, cache: &SceneCache, count: usize) -> Result<()> {
    let cfg = model_config(run, None)?;
    let images = ImageStore::from_cache(cache)?;
    let dir = run.out.join("crops");
    std::fs::create_dir_all(&dir)?;
    for (i, scene) in cache.scenes.iter().filter(|s| s.image.is_some()).take(count).enumerate() {
        let image = images.for_scene(scene)?.expect("filtered on image");
        let t = crate::geometry::heading_transform(&scene.observed_trajectory())?;
        rotate_crop(image, &t, cfg.crop_size, cfg.sampling)?.save_png(&dir.join(format!("crop_{i:04}.png")))?;
    }
    Ok(())
}

fn fold_dir(out: &Path, plans: &[SplitPlan], plan: &SplitPlan) -> PathBuf {
    if plans.len() == 1 {
        out.to_path_buf()
    } else {
        out.join(&plan.name)
    }
}

fn cmd_train(run: &RunConfig, epochs: Option<usize>, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let cache = load_cache(run)?;
    let images = ImageStore::from_cache(&cache)?;
    let mcfg = model_config(run, None)?;
    let tcfg = train_config(run, epochs)?;
    let plans = split_spec(run)?.plans(&cache, seed)?;
    for plan in &plans {
        let dir = fold_dir(&run.out, &plans, plan);
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join(MODEL_CONFIG_FILE), mcfg.to_toml_string())?;
        std::fs::write(dir.join("train_config.toml"), tcfg.to_toml_string())?;
        let (model, init) = TrajectoryModel::new(mcfg.clone(), seed)?;
        let mut progress = BufWriter::new(File::create(dir.join("progress.jsonl"))?);
        let sinks = TrainSinks {
            out_dir: Some(&dir),
            progress: Some(&mut progress),
        };
        let outcome = train_split(&model, &init, &cache.scenes, plan, &images, &tcfg, sinks)?;
        progress.flush()?;
        write_json(&dir.join("train_report.json"), &outcome.report)?;
        let last = outcome.report.epochs.last();
        writeln!(
            stdout,
            "fold {}: {} train / {} val scenes, {} epochs, final loss {}, best epoch {} -> {}",
            plan.name,
            outcome.report.train_scenes,
            outcome.report.val_scenes,
            outcome.report.epochs.len(),
            last.map_or("n/a".to_string(), |r| format!("{:.4}", r.loss)),
            outcome.report.best_epoch.map_or("n/a".to_string(), |e| e.to_string()),
            dir.join(FINAL_CHECKPOINT).display()
        )?;
    }
    Ok(())
}

fn resolve_checkpoint(path: &Path, plans: &[SplitPlan], plan: &SplitPlan) -> PathBuf {
    if path.is_dir() {
        fold_dir(path, plans, plan).join(FINAL_CHECKPOINT)
    } else {
        path.to_path_buf()
    }
}

fn load_model(run: &RunConfig, ckpt: &Path) -> Result<(TrajectoryModel, ModelParams<f64>)> {
    if !ckpt.exists() {
        return Err(Error::MissingPaths(vec![ckpt.to_path_buf()]));
    }
    let sibling = ckpt.parent().map(|d| d.join(MODEL_CONFIG_FILE));
    let cfg = model_config(run, sibling.as_deref())?;
    TrajectoryModel::from_checkpoint(cfg, ckpt)
}

fn network_report(
    model: &TrajectoryModel,
    params: &ModelParams<f64>,
    precision: Precision,
    cache: &SceneCache,
    plan: &SplitPlan,
    images: &ImageStore,
) -> Result<MetricReport> {
    let label = format!("ours-{}", format!("{:?}", model.config.backbone).to_lowercase());
    let plans = std::slice::from_ref(plan);
    match precision {
        Precision::Check => {
            let p = NetworkPredictor { model, params, label };
            evaluate(&p, &cache.scenes, plans, images)
        }
        Precision::Fast => {
            let fast: ModelParams<f32> = params.cast();
            let p = NetworkPredictor {
                model,
                params: &fast,
                label,
            };
            evaluate(&p, &cache.scenes, plans, images)
        }
    }
}

fn cmd_eval(run: &RunConfig, checkpoint: &Path, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let cache = load_cache(run)?;
    let images = ImageStore::from_cache(&cache)?;
    let plans = split_spec(run)?.plans(&cache, seed)?;
    let precision = run.precision.unwrap_or_default();
    let mut parts = Vec::with_capacity(plans.len());
    for plan in &plans {
        let ckpt = resolve_checkpoint(checkpoint, &plans, plan);
        let (model, params) = load_model(run, &ckpt)?;
        parts.push(network_report(&model, &params, precision, &cache, plan, &images)?);
    }
    write_report(&run.out, &MetricReport::merge(parts)?, stdout)
}

fn write_report(out: &Path, report: &MetricReport, stdout: &mut dyn Write) -> Result<()> {
    std::fs::write(out.join("metrics.json"), report.to_json()?)?;
    let table = markdown_table(std::slice::from_ref(report));
    std::fs::write(out.join("metrics.md"), &table)?;
    write!(stdout, "{table}")?;
    writeln!(
        stdout,
        "{}: ADE {:.4} FDE {:.4} ({}) over {} scenes",
        report.predictor,
        report.mean_ade,
        report.mean_fde,
        report.units,
        report.scenes.len()
    )?;
    Ok(())
}

fn cmd_gradcheck(run: &RunConfig, probes: usize, seed: u64, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = model_config(run, None)?;
    let scfg = SyntheticConfig {
        scenes: 1,
        neighbors: (2, 2),
        image: (cfg.backbone == Backbone::Patch).then(|| "synthetic".to_string()),
        ..Default::default()
    };
    let scene = generate(&scfg, seed).remove(0);
    let image = synthetic_image(32, 0.5, seed);
    if run.model_config.is_none() && cfg.backbone == Backbone::Patch {
        cfg.crop_size = 32;
    }
    let (model, mut params) = TrajectoryModel::new(cfg, seed)?;
    let input = prepare_input(&scene, Some(&image), &model.config)?;
    let gt = input.future.clone().ok_or(Error::Empty("ground-truth future"))?;
    let lambda = train_config(run, None)?.lambda;
    let gcfg = GradCheckConfig {
        probes,
        seed,
        ..Default::default()
    };
    let report = gradient_check(&mut params, &gcfg, |g, p| {
        let out = crate::model::forward(g, p, &model, &input, crate::model::Mode::TeacherForced)?;
        loss_graph(g, &out, &gt, lambda)
    })?;
    write_json(&run.out.join("gradcheck.json"), &report)?;
    writeln!(
        stdout,
        "max_rel_err {:.3e} over {} probes ({} rejected), worst {}",
        report.max_rel_err,
        report.probes_checked,
        report.probes_rejected,
        report.worst_param.as_deref().unwrap_or("-")
    )?;
    if report.max_rel_err >= GRADCHECK_TOLERANCE {
        return Err(Error::Numeric(format!(
            "gradient check failed: {:.3e} >= {GRADCHECK_TOLERANCE:e}",
            report.max_rel_err
        )));
    }
    Ok(())
}

fn cmd_plot(
    run: &RunConfig,
    metrics: &Path,
    checkpoint: Option<&Path>,
    overlays: usize,
    bins: usize,
    stdout: &mut dyn Write,
) -> Result<()> {
    if !metrics.exists() {
        return Err(Error::MissingPaths(vec![metrics.to_path_buf()]));
    }
    let report: MetricReport = serde_json::from_str(&std::fs::read_to_string(metrics)?)?;
    let dist = error_distribution(&report, bins)?;
    write_json(&run.out.join("error_distribution.json"), &dist)?;
    save_png(&render_distribution(&dist, 400), &run.out.join("error_distribution.png"))?;
    writeln!(
        stdout,
        "{} final errors, median {:.4} {}",
        dist.count, dist.median, dist.units
    )?;

    if overlays == 0 {
        return Ok(());
    }
    let cache = load_cache(run)?;
    let images = ImageStore::from_cache(&cache)?;
    let loaded = checkpoint.map(|c| load_model(run, c)).transpose()?;
    let predictor: Box<dyn Predictor + '_> = match &loaded {
        Some((model, params)) => Box::new(NetworkPredictor {
            model,
            params,
            label: "model".into(),
        }),
        None => Box::new(LinearBaseline),
    };
    let mut drawn = 0;
    for rec in report.scenes.iter().take(overlays) {
        let Some(scene) = cache
            .scenes
            .iter()
            .find(|s| s.dataset == rec.dataset && s.agent_id == rec.agent_id && s.start_step == rec.start_step)
        else {
            continue;
        };
        let pred = predictor.predict_scene(scene, &images)?;
        let img = render_overlay(scene, &pred, images.for_scene(scene)?, 400);
        save_png(&img, &run.out.join(format!("overlay_{drawn:03}.png")))?;
        drawn += 1;
    }
    writeln!(stdout, "{drawn} overlays ({})", predictor.name())?;
    Ok(())
}
