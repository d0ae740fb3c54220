//! Seeded synthetic scenes for tests and smoke runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{AgentClass, NeighborTrack, Scene, Units};
use crate::geometry::BevImage;
use crate::{DT, T_OBS, T_PRED};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub dataset: String,
    pub scenes: usize,
    /// Speed range in m/s.
    pub speed: (f64, f64),
    /// Range of |turn rate| in rad/s for curved agents.
    pub turn_rate: (f64, f64),
    /// Probability that an agent turns; the rest walk straight.
    pub curved_fraction: f64,
    /// Inclusive neighbor count range.
    pub neighbors: (usize, usize),
    /// Half-width of uniform jitter added to observed points.
    pub noise: f64,
    /// Start positions are drawn from `[-extent, extent]²`.
    pub extent: f64,
    pub image: Option<String>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dataset: "synthetic".into(),
            scenes: 8,
            speed: (1.0, 1.6),
            turn_rate: (0.15, 0.4),
            curved_fraction: 0.5,
            neighbors: (1, 3),
            noise: 0.0,
            extent: 5.0,
            image: None,
        }
    }
}

/// Constant-speed, constant-turn-rate positions sampled every `DT`.
pub fn arc_positions(start: [f64; 2], heading: f64, speed: f64, turn_rate: f64, steps: usize) -> Vec<[f64; 2]> {
    (0..steps)
        .map(|k| {
            let t = k as f64 * DT;
            if turn_rate.abs() < 1e-12 {
                [start[0] + speed * t * heading.cos(), start[1] + speed * t * heading.sin()]
            } else {
                let r = speed / turn_rate;
                let th = heading + turn_rate * t;
                [start[0] + r * (th.sin() - heading.sin()), start[1] - r * (th.cos() - heading.cos())]
            }
        })
        .collect()
}

pub fn generate(cfg: &SyntheticConfig, seed: u64) -> Vec<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = T_OBS + T_PRED;
    (0..cfg.scenes)
        .map(|i| {
            let start = [rng.random_range(-cfg.extent..=cfg.extent), rng.random_range(-cfg.extent..=cfg.extent)];
            let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let speed = rng.random_range(cfg.speed.0..=cfg.speed.1);
            let turn = if rng.random_bool(cfg.curved_fraction.clamp(0.0, 1.0)) {
                let w = rng.random_range(cfg.turn_rate.0..=cfg.turn_rate.1);
                if rng.random_bool(0.5) {
                    w
                } else {
                    -w
                }
            } else {
                0.0
            };
            let mut path = arc_positions(start, heading, speed, turn, window);
            if cfg.noise > 0.0 {
                for p in path.iter_mut().take(T_OBS) {
                    p[0] += rng.random_range(-cfg.noise..=cfg.noise);
                    p[1] += rng.random_range(-cfg.noise..=cfg.noise);
                }
            }

            let n_neighbors = rng.random_range(cfg.neighbors.0..=cfg.neighbors.1);
            let neighbors = (0..n_neighbors)
                .map(|j| {
                    let offset = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
                    let h = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    let v = rng.random_range(0.5..1.5);
                    let positions = arc_positions([start[0] + offset[0], start[1] + offset[1]], h, v, 0.0, T_OBS);
                    let missing = if rng.random_bool(0.25) { rng.random_range(1..4) } else { 0 };
                    let mut positions = positions;
                    for k in 0..missing {
                        positions[k] = positions[missing];
                    }
                    NeighborTrack {
                        agent_id: 1_000 + j as i64,
                        positions,
                        valid: (0..T_OBS).map(|k| k >= missing).collect(),
                    }
                })
                .collect();

            Scene {
                dataset: cfg.dataset.clone(),
                agent_id: i as i64,
                class: AgentClass::Pedestrian,
                units: Units::Meters,
                start_step: 0,
                observed: path[..T_OBS].to_vec(),
                future: path[T_OBS..].to_vec(),
                neighbors,
                image: cfg.image.clone(),
            }
        })
        .collect()
}

/// Smooth random RGB field of `size × size` pixels centered on the world origin.
pub fn synthetic_image(size: usize, units_per_pixel: f64, seed: u64) -> BevImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<[f64; 4]> = (0..9)
        .map(|_| {
            [
                rng.random_range(0.05..0.4),
                rng.random_range(0.05..0.4),
                rng.random_range(0.0..6.3),
                rng.random_range(0.2..1.0),
            ]
        })
        .collect();
    let mut pixels = Vec::with_capacity(size * size * 3);
    for r in 0..size {
        for c in 0..size {
            for ch in 0..3 {
                let v: f64 = waves[ch * 3..ch * 3 + 3]
                    .iter()
                    .map(|w| w[3] * (w[0] * r as f64 + w[1] * c as f64 + w[2]).sin())
                    .sum();
                pixels.push((0.5 + v / 6.0).clamp(0.0, 1.0) as f32);
            }
        }
    }
    let half = size as f64 * units_per_pixel / 2.0;
    BevImage::new(size, size, pixels, units_per_pixel, [-half, -half]).expect("valid synthetic image")
}
