use serde::{Deserialize, Serialize};

use crate::eval::MetricReport;
use crate::{Error, Result};

/// Probability masses whose highest-density contours are reported.
pub const ISO_MASSES: [f64; 3] = [0.5, 0.8, 0.95];
const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
const KDE_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoLevel {
    /// Fraction of samples enclosed by the contour.
    pub mass: f64,
    pub density: f64,
}

/// Gaussian product-kernel density of the 2-D final errors on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kde {
    pub bandwidth: [f64; 2],
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Row-major, `y.len()` rows of `x.len()` values.
    pub density: Vec<f64>,
    pub levels: Vec<IsoLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    pub units: String,
    pub count: usize,
    pub median: f64,
    /// `(p, value)` pairs.
    pub quantiles: Vec<(f64, f64)>,
    pub histogram: Histogram,
    /// Final errors in the agent frame (x along the heading).
    pub points: Vec<[f64; 2]>,
    /// Absent when either axis has zero spread.
    pub kde: Option<Kde>,
}

/// Linear interpolation between closest ranks of an ascending slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn histogram(values: &[f64], bins: usize) -> Histogram {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Histogram {
            edges: vec![0.0, 0.0],
            counts: vec![values.len()],
        };
    }
    let width = max / bins as f64;
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    let mut counts = vec![0; bins];
    for &v in values {
        let b = ((v / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram { edges, counts }
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn gauss(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn density_at(points: &[[f64; 2]], h: [f64; 2], q: [f64; 2]) -> f64 {
    let norm = 1.0 / (points.len() as f64 * h[0] * h[1]);
    points
        .iter()
        .map(|p| gauss((q[0] - p[0]) / h[0]) * gauss((q[1] - p[1]) / h[1]))
        .sum::<f64>()
        * norm
}

/// Kernel density estimate with Scott's-rule bandwidth `σ·n^(-1/6)` per axis.
pub fn kde(points: &[[f64; 2]]) -> Option<Kde> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let sx = std_dev(points.iter().map(|p| p[0]));
    let sy = std_dev(points.iter().map(|p| p[1]));
    if !(sx > 0.0 && sy > 0.0) {
        return None;
    }
    let factor = (n as f64).powf(-1.0 / 6.0);
    let h = [sx * factor, sy * factor];
    let axis = |i: usize| {
        let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min) - 3.0 * h[i];
        let hi = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max) + 3.0 * h[i];
        (0..KDE_GRID)
            .map(|k| lo + (hi - lo) * k as f64 / (KDE_GRID - 1) as f64)
            .collect::<Vec<_>>()
    };
    let (x, y) = (axis(0), axis(1));
    let density = y
        .iter()
        .flat_map(|&yy| x.iter().map(move |&xx| [xx, yy]))
        .map(|q| density_at(points, h, q))
        .collect();

    let mut at_samples: Vec<f64> = points.iter().map(|&p| density_at(points, h, p)).collect();
    at_samples.sort_by(f64::total_cmp);
    let levels = ISO_MASSES
        .iter()
        .map(|&mass| IsoLevel {
            mass,
            density: quantile(&at_samples, 1.0 - mass),
        })
        .collect();
    Some(Kde {
        bandwidth: h,
        x,
        y,
        density,
        levels,
    })
}

/// Summary of the per-scene final errors in `report`.
pub fn error_distribution(report: &MetricReport, bins: usize) -> Result<ErrorDistribution> {
    if report.scenes.is_empty() {
        return Err(Error::Empty("metric report"));
    }
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let mut fde: Vec<f64> = report.scenes.iter().map(|r| r.fde).collect();
    let points: Vec<[f64; 2]> = report.scenes.iter().map(|r| r.final_error).collect();
    let histogram = histogram(&fde, bins);
    fde.sort_by(f64::total_cmp);
    Ok(ErrorDistribution {
        units: report.units.clone(),
        count: fde.len(),
        median: quantile(&fde, 0.5),
        quantiles: QUANTILES.iter().map(|&p| (p, quantile(&fde, p))).collect(),
        histogram,
        kde: kde(&points),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Units;
    use crate::eval::SceneRecord;
    use proptest::prelude::*;

    fn report(errors: &[[f64; 2]]) -> MetricReport {
        let scenes = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| SceneRecord {
                fold: "f".into(),
                dataset: "d".into(),
                agent_id: i as i64,
                start_step: 0,
                units: Units::Meters,
                ade: 0.0,
                fde: e[0].hypot(e[1]),
                final_error: e,
            })
            .collect();
        MetricReport {
            predictor: "p".into(),
            folds: vec![],
            mean_ade: 0.0,
            mean_fde: 0.0,
            units: "m".into(),
            scenes,
        }
    }

    #[test]
    fn all_zero_errors() {
        let d = error_distribution(&report(&[[0.0, 0.0]; 5]), 10).unwrap();
        assert_eq!(d.median, 0.0);
        assert_eq!(d.histogram.counts, vec![5]);
        assert!(d.kde.is_none());
    }

    #[test]
    fn symmetric_unit_errors() {
        let d = error_distribution(&report(&[[1.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]]), 4).unwrap();
        assert_eq!(d.median, 1.0);
        let sum: [f64; 2] = d.points.iter().fold([0.0, 0.0], |a, p| [a[0] + p[0], a[1] + p[1]]);
        assert_eq!(sum, [0.0, 0.0]);
    }

    #[test]
    fn kde_is_normalized_and_levels_ordered() {
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.7;
                [t.sin() * (1.0 + 0.1 * i as f64), t.cos() * 0.5]
            })
            .collect();
        let k = kde(&pts).unwrap();
        let dx = k.x[1] - k.x[0];
        let dy = k.y[1] - k.y[0];
        let mass: f64 = k.density.iter().sum::<f64>() * dx * dy;
        assert!((mass - 1.0).abs() < 0.02, "{mass}");
        assert!(k.levels[0].density >= k.levels[1].density && k.levels[1].density >= k.levels[2].density);
        let n = 40f64;
        let expected_hx = std_dev(pts.iter().map(|p| p[0])) * n.powf(-1.0 / 6.0);
        assert!((k.bandwidth[0] - expected_hx).abs() < 1e-15);
    }

    #[test]
    fn histogram_counts_everything() {
        let d = error_distribution(&report(&[[0.5, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 0.0]]), 2).unwrap();
        assert_eq!(d.histogram.counts, vec![2, 2]);
        assert_eq!(d.histogram.edges, vec![0.0, 1.0, 2.0]);
    }

    proptest! {
        #[test]
        fn quantiles_match_sort_oracle(mut v in prop::collection::vec(0.0f64..100.0, 1..60), p in 0.0f64..=1.0) {
            let q = {
                let mut s = v.clone();
                s.sort_by(f64::total_cmp);
                quantile(&s, p)
            };
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let expect = if lo + 1 < v.len() { v[lo] + (h - lo as f64) * (v[lo + 1] - v[lo]) } else { v[lo] };
            prop_assert_eq!(q, expect);
        }
    }
}
