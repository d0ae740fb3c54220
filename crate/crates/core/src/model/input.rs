use crate::data::{Frame, Scene, Trajectory};
use crate::geometry::{apply_transform, heading_transform, rotate_crop, BevImage, RigidTransform2D};
use crate::model::{Backbone, ModelConfig};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct NeighborInput {
    pub trajectory: Trajectory,
    pub valid: Vec<bool>,
}

/// A scene expressed in the main agent's frame, ready for the network.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub observed: Trajectory,
    pub neighbors: Vec<NeighborInput>,
    /// Rotated crop around the agent (patch backbone only).
    pub image: Option<BevImage>,
    /// Ground-truth future in the agent frame, when known.
    pub future: Option<Vec<[f64; 2]>>,
    /// Dataset frame to agent frame.
    pub transform: RigidTransform2D,
}

fn to_agent_frame(t: &RigidTransform2D, traj: &Trajectory) -> Trajectory {
    let mut out = apply_transform(t, traj);
    out.frame = Frame::AgentCentric;
    out
}

/// Normalizes a scene with the heading transform of its main agent and, for
/// the patch backbone, crops the scene image.
pub fn prepare_input(scene: &Scene, image: Option<&BevImage>, config: &ModelConfig) -> Result<ModelInput> {
    scene.validate()?;
    let observed_world = scene.observed_trajectory();
    let transform = heading_transform(&observed_world)?;
    let observed = to_agent_frame(&transform, &observed_world);

    let neighbors = scene
        .neighbors
        .iter()
        .map(|n| {
            let traj = Trajectory::from_positions(
                n.agent_id,
                scene.class,
                scene.units,
                Frame::World,
                scene.start_step,
                &n.positions,
            )?;
            Ok(NeighborInput {
                trajectory: to_agent_frame(&transform, &traj),
                valid: n.valid.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let image = match config.backbone {
        Backbone::Nomap => None,
        Backbone::Patch => {
            let src = image.ok_or_else(|| {
                Error::Contract(format!(
                    "patch backbone needs a scene image, scene {}/{} has none",
                    scene.dataset, scene.agent_id
                ))
            })?;
            Some(rotate_crop(src, &transform, config.crop_size, config.sampling)?)
        }
    };

    Ok(ModelInput {
        observed,
        neighbors,
        image,
        future: Some(scene.future.iter().map(|&p| transform.apply(p)).collect()),
        transform,
    })
}

impl ModelInput {
    /// Copy without the ground-truth future.
    pub fn without_future(&self) -> Self {
        Self {
            future: None,
            ..self.clone()
        }
    }
}
