use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{split_contiguous, AgentClass, TrackPoint, Trajectory, Units};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SddFlag {
    /// Annotation outside the view.
    Lost,
    Occluded,
    /// Interpolated by the annotation tool.
    Generated,
}

#[derive(Debug, Clone)]
pub struct SddOptions {
    pub keep_classes: BTreeSet<AgentClass>,
    pub drop_flags: BTreeSet<SddFlag>,
    /// Video frames per annotation step: 30 fps at 0.4 s gives 12.
    pub frame_stride: i64,
}

impl Default for SddOptions {
    fn default() -> Self {
        Self {
            keep_classes: BTreeSet::from([AgentClass::Pedestrian]),
            drop_flags: BTreeSet::from([SddFlag::Lost]),
            frame_stride: 12,
        }
    }
}

pub fn parse_sdd(path: &Path, opts: &SddOptions) -> Result<Vec<Trajectory>> {
    let text = std::fs::read_to_string(path)?;
    parse_sdd_str(&text, &path.display().to_string(), opts)
}

/// Parses `id xmin ymin xmax ymax frame lost occluded generated "label"`
/// rows into bounding-box-center tracks in pixels.
///
/// Only frames on the `frame_stride` grid are kept.
pub fn parse_sdd_str(text: &str, source: &str, opts: &SddOptions) -> Result<Vec<Trajectory>> {
    if opts.frame_stride <= 0 {
        return Err(Error::Config("SDD frame stride must be positive".into()));
    }
    let mut per_agent: BTreeMap<i64, (AgentClass, Vec<TrackPoint>)> = BTreeMap::new();
    let mut last_frame: BTreeMap<i64, i64> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: source.to_string(),
            line: line_no,
            reason,
        };
        let cols: Vec<&str> = trimmed.split_whitespace().collect();
        if cols.len() != 10 {
            return Err(err(format!("expected 10 columns, found {}", cols.len())));
        }
        let num = |k: usize| cols[k].parse::<i64>().map_err(|_| err(format!("not an integer: `{}`", cols[k])));
        let (id, xmin, ymin, xmax, ymax, frame) = (num(0)?, num(1)?, num(2)?, num(3)?, num(4)?, num(5)?);
        let flag = |k: usize| -> Result<bool> {
            match cols[k] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(err(format!("flag must be 0 or 1, got `{other}`"))),
            }
        };
        let flags = [(SddFlag::Lost, flag(6)?), (SddFlag::Occluded, flag(7)?), (SddFlag::Generated, flag(8)?)];
        let class: AgentClass = cols[9]
            .parse()
            .map_err(|_| Error::Data(format!("{source}:{line_no}: unknown label {}", cols[9])))?;

        if let Some(&prev) = last_frame.get(&id) {
            if frame <= prev {
                return Err(Error::Data(format!("{source}:{line_no}: frames for agent {id} are not increasing")));
            }
        }
        last_frame.insert(id, frame);

        if flags.iter().any(|(f, on)| *on && opts.drop_flags.contains(f)) {
            continue;
        }
        if !opts.keep_classes.contains(&class) || frame % opts.frame_stride != 0 {
            continue;
        }
        let entry = per_agent.entry(id).or_insert((class, Vec::new()));
        entry.1.push(TrackPoint {
            step: frame / opts.frame_stride,
            x: (xmin + xmax) as f64 / 2.0,
            y: (ymin + ymax) as f64 / 2.0,
        });
    }
    let mut out = Vec::new();
    for (id, (class, pts)) in per_agent {
        out.extend(split_contiguous(id, class, Units::Pixels, pts)?);
    }
    Ok(out)
}
