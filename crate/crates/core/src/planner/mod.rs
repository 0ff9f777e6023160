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

//! Bidirectional constrained planning.
//!
//! Two trees grow from the start and the goal. Every iteration draws a sample
//! from a [`Sampler`], extends one tree toward it along the manifold, extends
//! the other tree toward the new frontier, and stops once the two frontiers
//! are within the reach threshold of each other. Trees and frontier pair swap
//! roles after every iteration.

mod path;
mod smooth;
mod tree;

pub use path::{load_path, path_from_str, path_to_string, save_path, validate_path, Path, ValidationReport, Violation, PATH_VERSION};
pub use smooth::smooth;
pub use tree::{PlanTree, TreeSide};

use crate::constraints::{ConstraintSpec, DEFAULT_PROJECTION_ITERS};
use crate::error::{Error, Result};
use crate::kinematics::{Configuration, KinematicChain};
use crate::sampler::Sampler;
use crate::scalar::Real;
use crate::world::{World, MOTION_RESOLUTION};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Consecutive tree nodes closer than this end an extension.
pub const PROGRESS_GUARD: f64 = 1e-6;
/// Step halvings tried when a projected step lands too far from its origin.
pub const MAX_STEP_HALVINGS: usize = 3;
/// Default number of shortcut attempts when smoothing.
pub const DEFAULT_SMOOTHING_ATTEMPTS: usize = 100;

/// Which configuration the sampler receives as its goal argument.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalInput {
    /// The other tree's most recent frontier.
    #[default]
    Frontier,
    /// The other tree's root.
    OppositeRoot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub max_iterations: usize,
    /// Fraction of the remaining joint-space vector covered by one extension step.
    pub step_fraction: f64,
    /// Largest per-joint change between consecutive tree nodes (rad).
    pub max_step: f64,
    /// Max-norm distance at which two frontiers count as connected (rad).
    pub reach: f64,
    pub projection_iters: usize,
    /// Upper bound on nodes added by a single extension.
    pub max_extension_steps: usize,
    pub goal_input: GoalInput,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            max_iterations: 2000,
            step_fraction: 0.05,
            max_step: 0.1,
            reach: 0.05,
            projection_iters: DEFAULT_PROJECTION_ITERS,
            max_extension_steps: 200,
            goal_input: GoalInput::Frontier,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.step_fraction, self.max_step, self.reach];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite())
            || self.max_iterations == 0
            || self.projection_iters == 0
            || self.max_extension_steps == 0
        {
            return Err(Error::config("planner", "parameters must be positive"));
        }
        if self.step_fraction > 1.0 {
            return Err(Error::config("planner", "step fraction must not exceed 1"));
        }
        if self.reach < MOTION_RESOLUTION {
            return Err(Error::config(
                "planner",
                format!("reach {} below the motion resolution {MOTION_RESOLUTION}", self.reach),
            ));
        }
        if self.reach > self.max_step {
            return Err(Error::config("planner", "reach must not exceed the maximum step"));
        }
        Ok(())
    }
}

/// Chain, obstacles and constraint of one planning problem.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a, T> {
    pub chain: &'a KinematicChain<T>,
    pub world: &'a World<T>,
    pub spec: &'a ConstraintSpec<T>,
}

impl<'a, T: Real> Problem<'a, T> {
    pub fn new(chain: &'a KinematicChain<T>, world: &'a World<T>, spec: &'a ConstraintSpec<T>) -> Self {
        Problem { chain, world, spec }
    }

    /// Why `c` cannot be a query endpoint, if anything.
    pub fn endpoint_problem(&self, c: &Configuration<T>) -> Result<Option<String>> {
        self.chain.check_dimension(c)?;
        if !self.chain.within_limits(c) {
            return Ok(Some("outside joint limits".into()));
        }
        let err = self.spec.error(self.chain, c)?;
        if !(err.norm < self.spec.epsilon()) {
            return Ok(Some(format!("constraint error {} not below epsilon", err.norm)));
        }
        if self.world.config_in_collision(self.chain, c)? {
            return Ok(Some("in collision".into()));
        }
        Ok(None)
    }

    /// The constrained-edge contract for a new edge between two on-manifold nodes.
    pub(crate) fn edge_ok(&self, a: &Configuration<T>, b: &Configuration<T>, max_step: T) -> Result<bool> {
        Ok(a.max_distance(b) <= max_step && self.world.motion_collision_free(self.chain, a, b)?)
    }
}

/// Counters of one planning run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub iterations: usize,
    pub nodes_expanded: usize,
    pub projection_calls: usize,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug)]
pub struct PlanOutcome<T> {
    /// `None` when the iteration budget ran out.
    pub path: Option<Path<T>>,
    pub stats: PlanStats,
    /// Start-side tree first.
    pub trees: [PlanTree<T>; 2],
}

impl<T> PlanOutcome<T> {
    pub fn succeeded(&self) -> bool {
        self.path.is_some()
    }
}

/// Grows `tree` from node `near` toward `target` by projected steps.
///
/// Each step moves `step_fraction` of the remaining vector (scaled down so no
/// joint moves more than `max_step`), projects the result onto the manifold,
/// and keeps it when the motion from the previous node is collision-free. The
/// extension ends on reaching `target` (Euclidean distance at most `reach`),
/// on a failed projection or collision, when a step stops approaching the
/// target, or after `max_extension_steps` nodes. Returns the frontier index,
/// which is `near` itself when nothing was added.
pub fn traverse_manifold<T: Real>(
    problem: &Problem<'_, T>,
    tree: &mut PlanTree<T>,
    near: usize,
    target: &Configuration<T>,
    params: &PlannerParams,
    stats: &mut PlanStats,
) -> Result<usize> {
    let chain = problem.chain;
    let reach = T::lit(params.reach);
    let max_step = T::lit(params.max_step);
    let guard = T::lit(PROGRESS_GUARD);
    let mut idx = near;
    let mut current = tree.node(near).clone();
    let mut dist = current.distance(target);
    for _ in 0..params.max_extension_steps {
        if dist <= reach {
            break;
        }
        let diff: Vec<T> = target
            .as_slice()
            .iter()
            .zip(current.as_slice())
            .map(|(t, c)| *t - *c)
            .collect();
        let mut scale = T::lit(params.step_fraction);
        let largest = diff.iter().fold(T::zero(), |m, v| m.max(v.abs())) * scale;
        if largest > max_step {
            scale = scale * max_step / largest;
        }
        let mut candidate = None;
        for _ in 0..=MAX_STEP_HALVINGS {
            let raw: Vec<T> = current
                .as_slice()
                .iter()
                .zip(&diff)
                .map(|(c, d)| *c + scale * *d)
                .collect();
            stats.projection_calls += 1;
            match problem.spec.project(chain, &chain.clamp(&raw), params.projection_iters)? {
                None => break,
                Some(p) if p.config.max_distance(&current) <= max_step => {
                    candidate = Some(p.config);
                    break;
                }
                Some(_) => scale = scale / T::lit(2.0),
            }
        }
        let Some(next) = candidate else { break };
        if next.distance(&current) < guard {
            break;
        }
        let next_dist = next.distance(target);
        if next_dist >= dist {
            break;
        }
        if !problem.world.motion_collision_free(chain, &current, &next)? {
            break;
        }
        idx = tree.push(next.clone(), idx);
        stats.nodes_expanded += 1;
        current = next;
        dist = next_dist;
    }
    Ok(idx)
}

/// Joins the branch of `a` (node to root) and the branch of `b` into a start-to-goal path.
fn extract<T: Real>(ta: &PlanTree<T>, ia: usize, tb: &PlanTree<T>, ib: usize) -> Vec<Configuration<T>> {
    let (start_tree, si, goal_tree, gi) = if ta.side() == TreeSide::Start {
        (ta, ia, tb, ib)
    } else {
        (tb, ib, ta, ia)
    };
    let mut waypoints = start_tree.branch(si);
    waypoints.reverse();
    let tail = goal_tree.branch(gi);
    let dedup = T::lit(1e-9);
    let skip = match (waypoints.last(), tail.first()) {
        (Some(a), Some(b)) if a.max_distance(b) <= dedup => 1,
        _ => 0,
    };
    waypoints.extend(tail.into_iter().skip(skip));
    waypoints
}

/// Plans from `start` to `goal`, drawing samples from `sampler`.
///
/// Invalid endpoints are reported as [`Error::InvalidQuery`]; running out of
/// iterations is a normal outcome with `path == None`.
pub fn plan<T: Real, S: Sampler<T> + ?Sized>(
    problem: &Problem<'_, T>,
    sampler: &mut S,
    start: &Configuration<T>,
    goal: &Configuration<T>,
    params: &PlannerParams,
) -> Result<PlanOutcome<T>> {
    params.validate()?;
    for (name, c) in [("start", start), ("goal", goal)] {
        if let Some(why) = problem.endpoint_problem(c)? {
            return Err(Error::InvalidQuery(format!("{name} configuration {why}")));
        }
    }
    let clock = Instant::now();
    let reach = T::lit(params.reach);
    let max_step = T::lit(params.max_step);
    let mut stats = PlanStats::default();
    let mut ta = PlanTree::new(start.clone(), TreeSide::Start);
    let mut tb = PlanTree::new(goal.clone(), TreeSide::Goal);
    let finish = |ta: PlanTree<T>, tb: PlanTree<T>, path: Option<Vec<Configuration<T>>>, mut stats: PlanStats| {
        stats.wall_time_ms = clock.elapsed().as_secs_f64() * 1e3;
        let trees = if ta.side() == TreeSide::Start { [ta, tb] } else { [tb, ta] };
        PlanOutcome {
            path: path.map(|waypoints| Path { waypoints, stats }),
            stats,
            trees,
        }
    };

    if start.max_distance(goal) <= reach && problem.edge_ok(start, goal, max_step)? {
        let path = extract(&ta, 0, &tb, 0);
        return Ok(finish(ta, tb, Some(path), stats));
    }

    let (mut ia, mut ib) = (0usize, 0usize);
    for i in 0..params.max_iterations {
        stats.iterations = i + 1;
        let goal_arg = match params.goal_input {
            GoalInput::Frontier => tb.node(ib),
            GoalInput::OppositeRoot => tb.node(0),
        };
        let sample = sampler.next_config(i, ta.node(ia), goal_arg);
        let near_a = ta.nearest(&sample);
        let new_a = traverse_manifold(problem, &mut ta, near_a, &sample, params, &mut stats)?;
        let target = ta.node(new_a).clone();
        let near_b = tb.nearest(&target);
        let new_b = traverse_manifold(problem, &mut tb, near_b, &target, params, &mut stats)?;
        let (ca, cb) = (ta.node(new_a), tb.node(new_b));
        if ca.max_distance(cb) <= reach && problem.edge_ok(ca, cb, max_step)? {
            let path = extract(&ta, new_a, &tb, new_b);
            return Ok(finish(ta, tb, Some(path), stats));
        }
        std::mem::swap(&mut ta, &mut tb);
        ia = new_b;
        ib = new_a;
    }
    Ok(finish(ta, tb, None, stats))
}

#[cfg(test)]
mod tests;
