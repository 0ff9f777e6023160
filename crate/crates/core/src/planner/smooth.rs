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

use super::path::joint_length;
use super::{traverse_manifold, Path, PlanStats, PlanTree, PlannerParams, Problem, TreeSide};
use crate::error::Result;
use crate::scalar::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shortcut smoothing.
///
/// Picks random waypoint pairs `i < j`, grows a fresh tree from waypoint `i`
/// toward waypoint `j` along the manifold, and splices the new branch in when
/// it ends within reach of `j` through a valid edge and is shorter than the
/// section it replaces.
pub fn smooth<T: Real>(
    problem: &Problem<'_, T>,
    path: &Path<T>,
    params: &PlannerParams,
    attempts: usize,
    seed: u64,
) -> Result<Path<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wps = path.waypoints.clone();
    let reach = T::lit(params.reach);
    let max_step = T::lit(params.max_step);
    let dedup = T::lit(1e-9);
    let mut scratch = PlanStats::default();
    for _ in 0..attempts {
        if wps.len() < 3 {
            break;
        }
        let mut i = rng.gen_range(0..wps.len());
        let mut j = rng.gen_range(0..wps.len());
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        if j < i + 2 {
            continue;
        }
        let mut tree = PlanTree::new(wps[i].clone(), TreeSide::Start);
        let f = traverse_manifold(problem, &mut tree, 0, &wps[j], params, &mut scratch)?;
        let frontier = tree.node(f);
        if frontier.distance(&wps[j]) > reach {
            continue;
        }
        let mut mid = tree.branch(f);
        mid.reverse();
        if frontier.max_distance(&wps[j]) <= dedup {
            mid.pop();
        } else if !problem.edge_ok(frontier, &wps[j], max_step)? {
            continue;
        }
        mid.push(wps[j].clone());
        if joint_length(&mid) >= joint_length(&wps[i..=j]) {
            continue;
        }
        let mut next = wps[..i].to_vec();
        next.extend(mid);
        next.extend_from_slice(&wps[j + 1..]);
        wps = next;
    }
    Ok(Path {
        waypoints: wps,
        stats: path.stats,
    })
}
