use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, DT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentClass {
    Pedestrian,
    Biker,
    Skater,
    Cart,
    Car,
    Bus,
}

impl FromStr for AgentClass {
    type Err = Error;

    /// Accepts SDD's label spellings and the long names.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim_matches('"') {
            "Pedestrian" => AgentClass::Pedestrian,
            "Biker" | "Bicyclist" => AgentClass::Biker,
            "Skater" | "Skateboarder" => AgentClass::Skater,
            "Cart" => AgentClass::Cart,
            "Car" => AgentClass::Car,
            "Bus" => AgentClass::Bus,
            other => return Err(Error::Data(format!("unknown agent label `{other}`"))),
        })
    }
}

impl fmt::Display for AgentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Meters,
    Pixels,
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Meters => "m",
            Units::Pixels => "px",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Dataset coordinates.
    World,
    /// Last observed position at the origin, heading along +x.
    AgentCentric,
}

/// One annotated position on the global step grid (`t = step · DT`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub step: i64,
    pub x: f64,
    pub y: f64,
}

impl TrackPoint {
    pub fn time(&self) -> f64 {
        self.step as f64 * DT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub agent_id: i64,
    pub class: AgentClass,
    pub units: Units,
    pub frame: Frame,
    pub points: Vec<TrackPoint>,
}

impl Trajectory {
    pub fn new(agent_id: i64, class: AgentClass, units: Units, frame: Frame, points: Vec<TrackPoint>) -> Result<Self> {
        let t = Self {
            agent_id,
            class,
            units,
            frame,
            points,
        };
        t.validate()?;
        Ok(t)
    }

    /// Consecutive steps, finite coordinates.
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.points.iter().find(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::Data(format!("agent {}: non-finite point at step {}", self.agent_id, p.step)));
        }
        if let Some(w) = self.points.windows(2).find(|w| w[1].step != w[0].step + 1) {
            return Err(Error::Data(format!(
                "agent {}: steps {} -> {} break the {DT} s grid",
                self.agent_id, w[0].step, w[1].step
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn first_step(&self) -> Option<i64> {
        self.points.first().map(|p| p.step)
    }

    pub fn last_step(&self) -> Option<i64> {
        self.points.last().map(|p| p.step)
    }

    /// Builds a contiguous trajectory from positions starting at `start_step`.
    pub fn from_positions(
        agent_id: i64,
        class: AgentClass,
        units: Units,
        frame: Frame,
        start_step: i64,
        positions: &[[f64; 2]],
    ) -> Result<Self> {
        let points = positions
            .iter()
            .enumerate()
            .map(|(i, p)| TrackPoint {
                step: start_step + i as i64,
                x: p[0],
                y: p[1],
            })
            .collect();
        Self::new(agent_id, class, units, frame, points)
    }
}

/// Splits per-agent point lists (strictly increasing steps) at gaps.
pub fn split_contiguous(agent_id: i64, class: AgentClass, units: Units, points: Vec<TrackPoint>) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    let mut current: Vec<TrackPoint> = Vec::new();
    for p in points {
        if let Some(last) = current.last() {
            if p.step != last.step + 1 {
                out.push(Trajectory::new(agent_id, class, units, Frame::World, std::mem::take(&mut current))?);
            }
        }
        current.push(p);
    }
    if !current.is_empty() {
        out.push(Trajectory::new(agent_id, class, units, Frame::World, current)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(step: i64) -> TrackPoint {
        TrackPoint { step, x: step as f64, y: 0.0 }
    }

    #[test]
    fn gaps_split_tracks() {
        let parts = split_contiguous(1, AgentClass::Pedestrian, Units::Meters, vec![pt(0), pt(1), pt(3), pt(4), pt(5)]).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1].len(), 3);
        assert!((parts[1].points[0].time() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn gap_is_invalid_inside_one_trajectory() {
        let t = Trajectory::new(1, AgentClass::Pedestrian, Units::Meters, Frame::World, vec![pt(0), pt(2)]);
        assert!(t.is_err());
    }

    #[test]
    fn labels() {
        assert_eq!("\"Biker\"".parse::<AgentClass>().unwrap(), AgentClass::Biker);
        assert_eq!("Skateboarder".parse::<AgentClass>().unwrap(), AgentClass::Skater);
        let err = "Horse".parse::<AgentClass>().unwrap_err().to_string();
        assert!(err.contains("Horse"));
    }
}
