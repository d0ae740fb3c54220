//! Static PNG renderings: trajectory overlays and the final-error summary.

use std::path::Path;

use image::imageops::FilterType;
use image::{Rgb, RgbImage};

use crate::data::Scene;
use crate::eval::ErrorDistribution;
use crate::geometry::BevImage;
use crate::Result;

pub const OBSERVED_COLOR: Rgb<u8> = Rgb([20, 40, 200]);
pub const TRUTH_COLOR: Rgb<u8> = Rgb([90, 150, 255]);
pub const PREDICTION_COLOR: Rgb<u8> = Rgb([220, 20, 20]);
const NEIGHBOR_COLOR: Rgb<u8> = Rgb([150, 150, 150]);
const AXIS_COLOR: Rgb<u8> = Rgb([0, 0, 0]);
const BAR_COLOR: Rgb<u8> = Rgb([70, 110, 190]);
const POINT_COLOR: Rgb<u8> = Rgb([60, 60, 60]);
const CONTOUR_COLORS: [Rgb<u8>; 3] = [Rgb([200, 30, 30]), Rgb([230, 130, 20]), Rgb([220, 200, 30])];

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn dot(img: &mut RgbImage, x: f64, y: f64, r: i64, c: Rgb<u8>) {
    let (cx, cy) = (x.round() as i64, y.round() as i64);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                put(img, cx + dx, cy + dy, c);
            }
        }
    }
}

/// Two-pixel-wide segment by uniform sampling along its length.
fn line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: Rgb<u8>) {
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = a.0 + t * (b.0 - a.0);
        let y = a.1 + t * (b.1 - a.1);
        dot(img, x, y, 1, c);
    }
}

fn polyline(img: &mut RgbImage, pts: &[(f64, f64)], c: Rgb<u8>) {
    for w in pts.windows(2) {
        line(img, w[0], w[1], c);
    }
    for &p in pts {
        dot(img, p.0, p.1, 2, c);
    }
}

/// World point to fractional (x, y) pixel position.
type PixelMap = Box<dyn Fn([f64; 2]) -> (f64, f64)>;

/// Draws the observed history and ground truth in blue over gray neighbors,
/// with the prediction in red.
///
/// With a background the scene's own pixel mapping is used, upscaled by an
/// integer factor towards `size`. Otherwise the view is fitted to all drawn
/// points on a `size × size` white canvas.
pub fn render_overlay(scene: &Scene, prediction: &[[f64; 2]], background: Option<&BevImage>, size: u32) -> RgbImage {
    let neighbor_pts = scene.neighbors.iter().flat_map(|n| {
        n.positions
            .iter()
            .zip(&n.valid)
            .filter(|(_, &v)| v)
            .map(|(p, _)| *p)
    });
    let (mut img, to_px): (RgbImage, PixelMap) = match background {
        Some(bg) => {
            let bg = bg.clone();
            let raw = bg.to_rgb_image();
            let k = (size / raw.width().max(raw.height())).max(1);
            let scaled = image::imageops::resize(&raw, raw.width() * k, raw.height() * k, FilterType::Nearest);
            let k = k as f64;
            (
                scaled,
                Box::new(move |p| {
                    let (r, c) = bg.world_to_pixel(p);
                    ((c + 0.5) * k, (r + 0.5) * k)
                }),
            )
        }
        None => {
            let all: Vec<[f64; 2]> = scene
                .observed
                .iter()
                .chain(&scene.future)
                .chain(prediction)
                .copied()
                .chain(neighbor_pts.clone())
                .collect();
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in &all {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
            let margin = 0.08 * size as f64;
            let scale = (size as f64 - 2.0 * margin) / span;
            let flip = size as f64 - margin;
            (
                RgbImage::from_pixel(size, size, Rgb([255, 255, 255])),
                // y grows upward in the plot.
                Box::new(move |p| (margin + (p[0] - lo[0]) * scale, flip - (p[1] - lo[1]) * scale)),
            )
        }
    };
    for n in &scene.neighbors {
        let pts: Vec<_> = n.positions.iter().zip(&n.valid).filter(|(_, &v)| v).map(|(&p, _)| to_px(p)).collect();
        polyline(&mut img, &pts, NEIGHBOR_COLOR);
    }
    let last = *scene.observed.last().expect("scenes have observations");
    let obs: Vec<_> = scene.observed.iter().map(|&p| to_px(p)).collect();
    let truth: Vec<_> = std::iter::once(last).chain(scene.future.iter().copied()).map(&to_px).collect();
    let pred: Vec<_> = std::iter::once(last).chain(prediction.iter().copied()).map(&to_px).collect();
    polyline(&mut img, &truth, TRUTH_COLOR);
    polyline(&mut img, &obs, OBSERVED_COLOR);
    polyline(&mut img, &pred, PREDICTION_COLOR);
    img
}

/// Histogram of final displacement errors (left) and the 2-D final-error
/// cloud with its density iso-contours (right).
pub fn render_distribution(dist: &ErrorDistribution, panel: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(2 * panel, panel, Rgb([255, 255, 255]));
    let m = (panel / 10) as f64;
    let inner = panel as f64 - 2.0 * m;
    let bottom = panel as f64 - m;

    line(&mut img, (m, bottom), (m + inner, bottom), AXIS_COLOR);
    line(&mut img, (m, bottom), (m, m), AXIS_COLOR);
    let counts = &dist.histogram.counts;
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bw = inner / counts.len() as f64;
    for (i, &c) in counts.iter().enumerate() {
        let h = inner * c as f64 / peak;
        let x0 = (m + i as f64 * bw + 1.0).round() as i64;
        let x1 = (m + (i + 1) as f64 * bw - 1.0).round() as i64;
        for x in x0..=x1.max(x0) {
            for y in (bottom - h).round() as i64..bottom as i64 {
                put(&mut img, x, y, BAR_COLOR);
            }
        }
    }
    if let (Some(&lo), Some(&hi)) = (dist.histogram.edges.first(), dist.histogram.edges.last()) {
        if hi > lo {
            let x = m + inner * (dist.median - lo) / (hi - lo);
            line(&mut img, (x, bottom), (x, m), PREDICTION_COLOR);
        }
    }

    let ox = panel as f64;
    let extent = dist
        .points
        .iter()
        .flat_map(|p| [p[0].abs(), p[1].abs()])
        .chain(dist.kde.iter().flat_map(|k| [k.x[0].abs(), k.x[k.x.len() - 1].abs(), k.y[0].abs(), k.y[k.y.len() - 1].abs()]))
        .fold(0.0, f64::max)
        .max(1e-9);
    let half = inner / 2.0;
    let cx = ox + m + half;
    let cy = m + half;
    let to_px = |p: [f64; 2]| (cx + p[0] / extent * half, cy - p[1] / extent * half);
    line(&mut img, (ox + m, cy), (ox + m + inner, cy), AXIS_COLOR);
    line(&mut img, (cx, m), (cx, m + inner), AXIS_COLOR);
    if let Some(k) = &dist.kde {
        let (nx, ny) = (k.x.len(), k.y.len());
        let cell = |i: usize, j: usize| k.density[j * nx + i];
        for (li, level) in k.levels.iter().enumerate() {
            let color = CONTOUR_COLORS[li % CONTOUR_COLORS.len()];
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    let corners = [cell(i, j), cell(i + 1, j), cell(i, j + 1), cell(i + 1, j + 1)];
                    let above = corners.iter().filter(|&&d| d >= level.density).count();
                    if above > 0 && above < 4 {
                        let p = [(k.x[i] + k.x[i + 1]) / 2.0, (k.y[j] + k.y[j + 1]) / 2.0];
                        let (x, y) = to_px(p);
                        dot(&mut img, x, y, 1, color);
                    }
                }
            }
        }
    }
    for &p in &dist.points {
        let (x, y) = to_px(p);
        dot(&mut img, x, y, 1, POINT_COLOR);
    }
    img
}

pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    img.save(path)?;
    Ok(())
}
