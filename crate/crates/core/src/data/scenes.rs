use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{AgentClass, Frame, Trajectory, Units};
use crate::{Error, Result, T_OBS, T_PRED};

/// Observed track of a neighbor over the main agent's observation window.
///
/// Steps the neighbor was not annotated at repeat its nearest annotated point
/// and are marked invalid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborTrack {
    pub agent_id: i64,
    pub positions: Vec<[f64; 2]>,
    pub valid: Vec<bool>,
}

/// One prediction instance in dataset coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub dataset: String,
    pub agent_id: i64,
    pub class: AgentClass,
    pub units: Units,
    /// Step of the first observed point.
    pub start_step: i64,
    pub observed: Vec<[f64; 2]>,
    pub future: Vec<[f64; 2]>,
    pub neighbors: Vec<NeighborTrack>,
    /// Key of the dataset's bird's-eye-view image, if any.
    pub image: Option<String>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if self.observed.len() != T_OBS || self.future.len() != T_PRED {
            return Err(Error::Contract(format!(
                "scene {}/{}@{}: observed/future lengths {}/{} (expected {T_OBS}/{T_PRED})",
                self.dataset,
                self.agent_id,
                self.start_step,
                self.observed.len(),
                self.future.len()
            )));
        }
        for n in &self.neighbors {
            if n.agent_id == self.agent_id {
                return Err(Error::Contract(format!("agent {} listed as its own neighbor", self.agent_id)));
            }
            if n.positions.len() != T_OBS || n.valid.len() != T_OBS || !n.valid.iter().any(|&v| v) {
                return Err(Error::Contract(format!("neighbor {} does not cover the observation window", n.agent_id)));
            }
        }
        let finite = |p: &[f64; 2]| p[0].is_finite() && p[1].is_finite();
        let all = self
            .observed
            .iter()
            .chain(&self.future)
            .chain(self.neighbors.iter().flat_map(|n| &n.positions));
        if !all.clone().all(finite) {
            return Err(Error::Contract("non-finite coordinate in scene".into()));
        }
        Ok(())
    }

    pub fn observed_trajectory(&self) -> Trajectory {
        Trajectory::from_positions(self.agent_id, self.class, self.units, Frame::World, self.start_step, &self.observed)
            .expect("scene windows are contiguous")
    }

    pub fn future_trajectory(&self) -> Trajectory {
        Trajectory::from_positions(
            self.agent_id,
            self.class,
            self.units,
            Frame::World,
            self.start_step + T_OBS as i64,
            &self.future,
        )
        .expect("scene windows are contiguous")
    }
}

#[derive(Debug, Clone)]
pub struct SceneOptions {
    pub t_obs: usize,
    pub t_pred: usize,
    /// Steps between consecutive window starts.
    pub stride: usize,
    pub image: Option<String>,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self {
            t_obs: T_OBS,
            t_pred: T_PRED,
            stride: 1,
            image: None,
        }
    }
}

/// Slides a `t_obs + t_pred` window over every contiguous track.
///
/// Neighbors are all other agents annotated at least once inside the observed
/// window, ordered by agent id. Output order is (agent id, window start).
pub fn build_scenes(tracks: &[Trajectory], dataset: &str, opts: &SceneOptions) -> Result<Vec<Scene>> {
    if opts.t_obs != T_OBS || opts.t_pred != T_PRED {
        return Err(Error::Config(format!(
            "scene windows are fixed at {T_OBS}+{T_PRED} steps, got {}+{}",
            opts.t_obs, opts.t_pred
        )));
    }
    if opts.stride == 0 {
        return Err(Error::Config("scene stride must be positive".into()));
    }
    let window = (opts.t_obs + opts.t_pred) as i64;

    // step -> agent -> position
    let mut by_step: BTreeMap<i64, BTreeMap<i64, [f64; 2]>> = BTreeMap::new();
    for t in tracks {
        for p in &t.points {
            by_step.entry(p.step).or_default().insert(t.agent_id, [p.x, p.y]);
        }
    }

    let mut order: Vec<&Trajectory> = tracks.iter().collect();
    order.sort_by_key(|t| (t.agent_id, t.first_step()));

    let mut scenes = Vec::new();
    for t in order {
        if (t.len() as i64) < window {
            continue;
        }
        let first = t.first_step().expect("non-empty");
        let last_start = t.len() as i64 - window;
        let pos = t.positions();
        for offset in (0..=last_start).step_by(opts.stride) {
            let start = first + offset;
            let o = offset as usize;
            let observed = pos[o..o + opts.t_obs].to_vec();
            let future = pos[o + opts.t_obs..o + window as usize].to_vec();

            let mut seen: BTreeMap<i64, Vec<Option<[f64; 2]>>> = BTreeMap::new();
            for k in 0..opts.t_obs {
                if let Some(agents) = by_step.get(&(start + k as i64)) {
                    for (&id, &p) in agents {
                        if id != t.agent_id {
                            seen.entry(id).or_insert_with(|| vec![None; opts.t_obs])[k] = Some(p);
                        }
                    }
                }
            }
            let neighbors = seen
                .into_iter()
                .map(|(agent_id, slots)| pad_neighbor(agent_id, &slots))
                .collect();

            let scene = Scene {
                dataset: dataset.to_string(),
                agent_id: t.agent_id,
                class: t.class,
                units: t.units,
                start_step: start,
                observed,
                future,
                neighbors,
                image: opts.image.clone(),
            };
            scene.validate()?;
            scenes.push(scene);
        }
    }
    Ok(scenes)
}

/// Fills missing steps with the nearest annotated step (earlier wins ties).
fn pad_neighbor(agent_id: i64, slots: &[Option<[f64; 2]>]) -> NeighborTrack {
    let known: Vec<(usize, [f64; 2])> = slots.iter().enumerate().filter_map(|(k, p)| p.map(|p| (k, p))).collect();
    let positions = (0..slots.len())
        .map(|k| {
            slots[k].unwrap_or_else(|| {
                known
                    .iter()
                    .min_by_key(|(j, _)| (k.abs_diff(*j), *j))
                    .map(|&(_, p)| p)
                    .expect("at least one annotated step")
            })
        })
        .collect();
    NeighborTrack {
        agent_id,
        positions,
        valid: slots.iter().map(Option::is_some).collect(),
    }
}
