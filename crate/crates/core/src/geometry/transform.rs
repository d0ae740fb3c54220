use serde::{Deserialize, Serialize};

use crate::data::Trajectory;
use crate::{Error, Result};

/// `p -> rotation · p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform2D {
    pub rotation: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

impl Default for RigidTransform2D {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform2D {
    pub fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
        }
    }

    /// Counter-clockwise rotation by `angle` radians followed by `translation`.
    pub fn from_angle(angle: f64, translation: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: [[c, -s], [s, c]],
            translation,
        }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let r = &self.rotation;
        [
            r[0][0] * p[0] + r[0][1] * p[1] + self.translation[0],
            r[1][0] * p[0] + r[1][1] * p[1] + self.translation[1],
        ]
    }

    /// Rotation only, for displacement vectors.
    pub fn rotate(&self, v: [f64; 2]) -> [f64; 2] {
        let r = &self.rotation;
        [r[0][0] * v[0] + r[0][1] * v[1], r[1][0] * v[0] + r[1][1] * v[1]]
    }

    pub fn inverse(&self) -> Self {
        let r = &self.rotation;
        let rt = [[r[0][0], r[1][0]], [r[0][1], r[1][1]]];
        let t = self.translation;
        Self {
            rotation: rt,
            translation: [
                -(rt[0][0] * t[0] + rt[0][1] * t[1]),
                -(rt[1][0] * t[0] + rt[1][1] * t[1]),
            ],
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (&self.rotation, &other.rotation);
        let mut rotation = [[0.0; 2]; 2];
        for (i, row) in rotation.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self {
            rotation,
            translation: self.apply(other.translation),
        }
    }

    pub fn determinant(&self) -> f64 {
        let r = &self.rotation;
        r[0][0] * r[1][1] - r[0][1] * r[1][0]
    }
}

/// Transform that moves the last point to the origin and turns the heading
/// onto +x.
///
/// The heading is the last nonzero displacement in the window; a fully static
/// window keeps the identity rotation.
pub fn heading_transform_points(points: &[[f64; 2]]) -> Result<RigidTransform2D> {
    if points.len() < 2 {
        return Err(Error::Contract(format!(
            "heading needs at least 2 observed points, got {}",
            points.len()
        )));
    }
    let last = points[points.len() - 1];
    let heading = points
        .windows(2)
        .rev()
        .map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]])
        .find(|d| d[0] != 0.0 || d[1] != 0.0);
    let rotation = match heading {
        Some(d) => {
            let n = d[0].hypot(d[1]);
            let (c, s) = (d[0] / n, d[1] / n);
            [[c, s], [-s, c]]
        }
        None => [[1.0, 0.0], [0.0, 1.0]],
    };
    let r = &rotation;
    Ok(RigidTransform2D {
        rotation,
        translation: [
            -(r[0][0] * last[0] + r[0][1] * last[1]),
            -(r[1][0] * last[0] + r[1][1] * last[1]),
        ],
    })
}

pub fn heading_transform(observed: &Trajectory) -> Result<RigidTransform2D> {
    heading_transform_points(&observed.positions())
}

/// Maps every point; steps and metadata are kept.
pub fn apply_transform(t: &RigidTransform2D, traj: &Trajectory) -> Trajectory {
    let mut out = traj.clone();
    for p in &mut out.points {
        let q = t.apply([p.x, p.y]);
        p.x = q[0];
        p.y = q[1];
    }
    out
}
