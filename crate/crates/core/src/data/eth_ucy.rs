use std::collections::BTreeMap;
use std::path::Path;

use crate::data::{split_contiguous, AgentClass, TrackPoint, Trajectory, Units};
use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct EthUcyOptions {
    /// Frames between annotations (10 for the 2.5 Hz releases). Inferred as
    /// the gcd of frame gaps when absent.
    pub frame_step: Option<i64>,
    /// Maps annotation coordinates to world meters as `H · [x, y, 1]`.
    pub homography: Option<[[f64; 3]; 3]>,
}

/// Reads a 3×3 homography written as three whitespace-separated rows.
pub fn read_homography(path: &Path) -> Result<[[f64; 3]; 3]> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: path.display().to_string(),
        line,
        reason,
    };
    if rows.len() != 3 {
        return Err(parse_err(rows.len(), format!("expected 3 rows, found {}", rows.len())));
    }
    let mut h = [[0.0; 3]; 3];
    for (i, row) in rows.iter().enumerate() {
        let vals: Vec<f64> = row
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|e| parse_err(i + 1, e.to_string())))
            .collect::<Result<_>>()?;
        if vals.len() != 3 {
            return Err(parse_err(i + 1, format!("expected 3 values, found {}", vals.len())));
        }
        h[i].copy_from_slice(&vals);
    }
    Ok(h)
}

fn apply_homography(h: &[[f64; 3]; 3], x: f64, y: f64) -> [f64; 2] {
    let w = h[2][0] * x + h[2][1] * y + h[2][2];
    [
        (h[0][0] * x + h[0][1] * y + h[0][2]) / w,
        (h[1][0] * x + h[1][1] * y + h[1][2]) / w,
    ]
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

pub fn parse_eth_ucy(path: &Path, opts: &EthUcyOptions) -> Result<Vec<Trajectory>> {
    let text = std::fs::read_to_string(path)?;
    parse_eth_ucy_str(&text, &path.display().to_string(), opts)
}

/// Parses whitespace-delimited `frame id x y` rows.
///
/// Eight-column `obsmat` rows (`frame id x z y vx vz vy`) are also accepted;
/// their position is columns 3 and 5. Blank lines and `#` comments are
/// skipped. Tracks are split wherever an agent misses an annotation step.
pub fn parse_eth_ucy_str(text: &str, source: &str, opts: &EthUcyOptions) -> Result<Vec<Trajectory>> {
    let mut rows: Vec<(usize, i64, i64, f64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: source.to_string(),
            line: line_no,
            reason,
        };
        let cols: Vec<f64> = trimmed
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| err(format!("not a number: `{s}`"))))
            .collect::<Result<_>>()?;
        let (x, y) = match cols.len() {
            4 => (cols[2], cols[3]),
            8 => (cols[2], cols[4]),
            n => return Err(err(format!("expected 4 or 8 columns, found {n}"))),
        };
        if cols[0].fract() != 0.0 || cols[1].fract() != 0.0 {
            return Err(err("frame and id must be integers".into()));
        }
        if !(x.is_finite() && y.is_finite()) {
            return Err(err("non-finite coordinate".into()));
        }
        rows.push((line_no, cols[0] as i64, cols[1] as i64, x, y));
    }
    if rows.is_empty() {
        return Ok(Vec::new());
    }

    let base = rows.iter().map(|r| r.1).min().expect("non-empty");
    let step = match opts.frame_step {
        Some(s) if s > 0 => s,
        Some(s) => return Err(Error::Config(format!("frame step must be positive, got {s}"))),
        None => {
            let mut frames: Vec<i64> = rows.iter().map(|r| r.1).collect();
            frames.sort_unstable();
            frames.dedup();
            frames.windows(2).fold(0, |g, w| gcd(g, w[1] - w[0])).max(1)
        }
    };

    let mut per_agent: BTreeMap<i64, Vec<TrackPoint>> = BTreeMap::new();
    for (line_no, frame, id, x, y) in rows {
        if (frame - base) % step != 0 {
            return Err(Error::Data(format!(
                "{source}:{line_no}: frame {frame} is off the {step}-frame annotation grid"
            )));
        }
        let s = (frame - base) / step;
        let pts = per_agent.entry(id).or_default();
        if let Some(last) = pts.last() {
            if s <= last.step {
                return Err(Error::Data(format!(
                    "{source}:{line_no}: frames for agent {id} are not increasing"
                )));
            }
        }
        let [wx, wy] = match &opts.homography {
            Some(h) => apply_homography(h, x, y),
            None => [x, y],
        };
        pts.push(TrackPoint { step: s, x: wx, y: wy });
    }

    let mut out = Vec::new();
    for (id, pts) in per_agent {
        out.extend(split_contiguous(id, AgentClass::Pedestrian, Units::Meters, pts)?);
    }
    Ok(out)
}
