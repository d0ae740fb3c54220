use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::{ImageStore, Scene, SplitPlan, Units};
use crate::eval::metrics::{dist, scene_ade};
use crate::eval::linear_extrapolate;
use crate::geometry::heading_transform;
use crate::model::{predict, prepare_input, Mode, TrajectoryModel};
use crate::numerics::{ModelParams, Scalar};
use crate::{Error, Result, T_PRED};

/// Anything that maps a scene to a future in dataset coordinates.
pub trait Predictor {
    fn name(&self) -> String;

    fn predict_scene(&self, scene: &Scene, images: &ImageStore) -> Result<Vec<[f64; 2]>>;
}

/// Constant-velocity extrapolation of the last two observed points.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearBaseline;

impl Predictor for LinearBaseline {
    fn name(&self) -> String {
        "linear".into()
    }

    fn predict_scene(&self, scene: &Scene, _images: &ImageStore) -> Result<Vec<[f64; 2]>> {
        linear_extrapolate(&scene.observed, T_PRED)
    }
}

/// The trained network in inference mode.
pub struct NetworkPredictor<'a, F: Scalar> {
    pub model: &'a TrajectoryModel,
    pub params: &'a ModelParams<F>,
    pub label: String,
}

impl<F: Scalar> Predictor for NetworkPredictor<'_, F> {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn predict_scene(&self, scene: &Scene, images: &ImageStore) -> Result<Vec<[f64; 2]>> {
        let image = match self.model.config.backbone {
            crate::model::Backbone::Patch => images.for_scene(scene)?,
            crate::model::Backbone::Nomap => None,
        };
        let input = prepare_input(scene, image, &self.model.config)?.without_future();
        Ok(predict(self.params, self.model, &input, Mode::Inference)?.world_trajectory())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub fold: String,
    pub dataset: String,
    pub agent_id: i64,
    pub start_step: i64,
    pub units: Units,
    pub ade: f64,
    pub fde: f64,
    /// Predicted minus true final position, rotated into the agent frame.
    pub final_error: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub name: String,
    /// "m", "px", or "mixed".
    pub units: String,
    pub scenes: usize,
    pub ade: f64,
    pub fde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub predictor: String,
    pub folds: Vec<FoldMetrics>,
    /// Unweighted mean over folds.
    pub mean_ade: f64,
    pub mean_fde: f64,
    pub units: String,
    pub scenes: Vec<SceneRecord>,
}

fn units_label<'a>(mut units: impl Iterator<Item = &'a Units>) -> String {
    match units.next() {
        None => "mixed".into(),
        Some(first) => {
            if units.all(|u| u == first) {
                first.to_string()
            } else {
                "mixed".into()
            }
        }
    }
}

/// Scores `predictor` on the test scenes of every plan, in plan and index
/// order.
pub fn evaluate(
    predictor: &dyn Predictor,
    scenes: &[Scene],
    plans: &[SplitPlan],
    images: &ImageStore,
) -> Result<MetricReport> {
    let mut folds = Vec::with_capacity(plans.len());
    let mut records = Vec::new();
    for plan in plans {
        if plan.test.is_empty() {
            return Err(Error::Empty("test split"));
        }
        let start = records.len();
        for &i in &plan.test {
            let scene = scenes
                .get(i)
                .ok_or_else(|| Error::Contract(format!("split `{}` references scene {i} of {}", plan.name, scenes.len())))?;
            let pred = predictor.predict_scene(scene, images)?;
            if pred.len() != scene.future.len() {
                return Err(Error::Contract(format!(
                    "predictor returned {} steps for a {}-step future",
                    pred.len(),
                    scene.future.len()
                )));
            }
            let gt_last = *scene.future.last().ok_or(Error::Empty("scene future"))?;
            let p_last = *pred.last().expect("checked length");
            let t = heading_transform(&scene.observed_trajectory())?;
            records.push(SceneRecord {
                fold: plan.name.clone(),
                dataset: scene.dataset.clone(),
                agent_id: scene.agent_id,
                start_step: scene.start_step,
                units: scene.units,
                ade: scene_ade(&pred, &scene.future),
                fde: dist(p_last, gt_last),
                final_error: t.rotate([p_last[0] - gt_last[0], p_last[1] - gt_last[1]]),
            });
        }
        let fold = &records[start..];
        let n = fold.len() as f64;
        folds.push(FoldMetrics {
            name: plan.name.clone(),
            units: units_label(fold.iter().map(|r| &r.units)),
            scenes: fold.len(),
            ade: fold.iter().map(|r| r.ade).sum::<f64>() / n,
            fde: fold.iter().map(|r| r.fde).sum::<f64>() / n,
        });
    }
    if folds.is_empty() {
        return Err(Error::Empty("split plan list"));
    }
    let k = folds.len() as f64;
    Ok(MetricReport {
        predictor: predictor.name(),
        mean_ade: folds.iter().map(|f| f.ade).sum::<f64>() / k,
        mean_fde: folds.iter().map(|f| f.fde).sum::<f64>() / k,
        units: units_label(records.iter().map(|r| &r.units)),
        folds,
        scenes: records,
    })
}

impl MetricReport {
    /// Concatenates per-fold reports of one predictor; means are recomputed
    /// over all folds.
    pub fn merge(parts: Vec<MetricReport>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let mut out = iter.next().ok_or(Error::Empty("report list"))?;
        for p in iter {
            out.folds.extend(p.folds);
            out.scenes.extend(p.scenes);
        }
        let k = out.folds.len() as f64;
        out.mean_ade = out.folds.iter().map(|f| f.ade).sum::<f64>() / k;
        out.mean_fde = out.folds.iter().map(|f| f.fde).sum::<f64>() / k;
        out.units = units_label(out.scenes.iter().map(|r| &r.units));
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_markdown(&self) -> String {
        markdown_table(std::slice::from_ref(self))
    }
}

/// One row per report, one ADE/FDE column per fold plus the average.
/// Fold columns come from the first report.
pub fn markdown_table(reports: &[MetricReport]) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else {
        return out;
    };
    out.push_str("| Method |");
    for f in &first.folds {
        let _ = write!(out, " {} ({}) |", f.name, f.units);
    }
    out.push_str(" AVG |\n|---|");
    for _ in &first.folds {
        out.push_str("---|");
    }
    out.push_str("---|\n");
    for r in reports {
        let _ = write!(out, "| {} |", r.predictor);
        for f in &first.folds {
            match r.folds.iter().find(|g| g.name == f.name) {
                Some(g) => {
                    let _ = write!(out, " {:.2}/{:.2} |", g.ade, g.fde);
                }
                None => out.push_str(" - |"),
            }
        }
        let _ = writeln!(out, " {:.2}/{:.2} |", r.mean_ade, r.mean_fde);
    }
    out
}
