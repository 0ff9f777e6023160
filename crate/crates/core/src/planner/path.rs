/*
  Copyright 2026 The conplan Authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

//! Planned paths, their persistence and an independent validity check.

use super::{PlanStats, PlannerParams, Problem};
use crate::error::{check_version, from_json_str, Result};
use crate::kinematics::Configuration;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const PATH_VERSION: u32 = 1;
/// Interpolation step (max-norm, rad) of the validator's collision sweep.
pub const VALIDATION_RESOLUTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Path<T> {
    pub waypoints: Vec<Configuration<T>>,
    pub stats: PlanStats,
}

impl<T: Real> Path<T> {
    /// Sum of Euclidean joint-space distances between consecutive waypoints.
    pub fn length(&self) -> T {
        joint_length(&self.waypoints)
    }
}

pub(crate) fn joint_length<T: Real>(w: &[Configuration<T>]) -> T {
    w.windows(2).map(|p| p[0].distance(&p[1])).sum()
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct PathFile<T> {
    version: u32,
    #[serde(flatten)]
    path: Path<T>,
}

pub fn path_to_string<T: Real>(path: &Path<T>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&PathFile {
        version: PATH_VERSION,
        path: path.clone(),
    })?)
}

pub fn path_from_str<T: Real>(text: &str) -> Result<Path<T>> {
    check_version("path", text, PATH_VERSION)?;
    Ok(from_json_str::<PathFile<T>>("path", text)?.path)
}

pub fn save_path<T: Real>(path: &Path<T>, file: &std::path::Path) -> Result<()> {
    std::fs::write(file, path_to_string(path)?)?;
    Ok(())
}

pub fn load_path<T: Real>(file: &std::path::Path) -> Result<Path<T>> {
    path_from_str(&std::fs::read_to_string(file)?)
}

/// First problem found by [`validate_path`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Empty,
    Dimension { index: usize },
    Endpoint { which: &'static str, distance: f64 },
    JointLimits { index: usize },
    Constraint { index: usize, norm: f64 },
    Gap { index: usize, gap: f64 },
    Collision { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "path has no waypoints"),
            Violation::Dimension { index } => write!(f, "waypoint {index} has the wrong dimension"),
            Violation::Endpoint { which, distance } => {
                write!(f, "{which} waypoint is {distance:.3e} away from the query {which}")
            }
            Violation::JointLimits { index } => write!(f, "waypoint {index} is outside the joint limits"),
            Violation::Constraint { index, norm } => {
                write!(f, "constraint violated at waypoint {index} (error {norm:.3e})")
            }
            Violation::Gap { index, gap } => {
                write!(f, "gap of {gap:.4} rad between waypoints {index} and {}", index + 1)
            }
            Violation::Collision { index } => {
                write!(f, "collision on the motion between waypoints {index} and {}", index + 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub violation: Option<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks endpoints, joint limits, constraint error, gaps, and collisions of
/// `waypoints`.
///
/// Collisions are swept at [`VALIDATION_RESOLUTION`] against the obstacle
/// geometry itself (no clearance margin), independently of the planner's
/// motion checker.
pub fn validate_path<T: Real>(
    problem: &Problem<'_, T>,
    waypoints: &[Configuration<T>],
    start: &Configuration<T>,
    goal: &Configuration<T>,
    params: &PlannerParams,
) -> Result<ValidationReport> {
    let fail = |v| Ok(ValidationReport { violation: Some(v) });
    let (Some(first), Some(last)) = (waypoints.first(), waypoints.last()) else {
        return fail(Violation::Empty);
    };
    let dof = problem.chain.dof();
    if let Some(index) = waypoints.iter().position(|w| w.dof() != dof) {
        return fail(Violation::Dimension { index });
    }
    let tol = T::lit(1e-9);
    for (which, w, q) in [("start", first, start), ("goal", last, goal)] {
        let d = w.max_distance(q);
        if !(d <= tol) {
            return fail(Violation::Endpoint {
                which,
                distance: d.as_f64(),
            });
        }
    }
    for (index, w) in waypoints.iter().enumerate() {
        if !problem.chain.within_limits(w) {
            return fail(Violation::JointLimits { index });
        }
        let norm = problem.spec.error(problem.chain, w)?.norm;
        if !(norm < problem.spec.epsilon()) {
            return fail(Violation::Constraint {
                index,
                norm: norm.as_f64(),
            });
        }
    }
    let max_gap = T::lit(params.max_step) * T::lit(1.0 + 1e-9);
    for (index, pair) in waypoints.windows(2).enumerate() {
        let gap = pair[0].max_distance(&pair[1]);
        if !(gap <= max_gap) {
            return fail(Violation::Gap {
                index,
                gap: gap.as_f64(),
            });
        }
    }
    let res = VALIDATION_RESOLUTION;
    for (index, pair) in waypoints.windows(2).enumerate() {
        let span = pair[0].max_distance(&pair[1]).as_f64();
        let n = ((span / res).ceil() as usize).max(1);
        for k in 0..=n {
            let q = pair[0].lerp(&pair[1], T::lit(k as f64 / n as f64));
            let segments = problem.chain.link_segments(&q)?;
            if problem.world.segments_touch_obstacles(&segments) {
                return fail(Violation::Collision { index });
            }
        }
    }
    if waypoints.len() == 1 {
        let segments = problem.chain.link_segments(first)?;
        if problem.world.segments_touch_obstacles(&segments) {
            return fail(Violation::Collision { index: 0 });
        }
    }
    Ok(ValidationReport { violation: None })
}
