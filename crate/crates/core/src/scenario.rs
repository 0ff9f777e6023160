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

//! Benchmark scenarios and demonstration corpora.
//!
//! A scenario is one planning query: a chain, an obstacle layout, a constraint
//! and a start/goal pair on the constraint manifold. Three templates supply the
//! task vocabulary. A corpus adds demonstrations for the training scenarios,
//! produced by the planner with the uniform sampler.

use crate::constraints::{ConstraintKind, ConstraintSpec};
use crate::error::{check_version, from_json_str, Error, Result};
use crate::geometry::{Point2, Rect};
use crate::kinematics::{Configuration, KinematicChain, TaskPose};
use crate::neural::{Demonstration, DemonstrationSet, SceneInput, TaskOneHot};
use crate::planner::{
    plan, smooth, traverse_manifold, validate_path, PlanStats, PlanTree, PlannerParams, Problem,
    TreeSide, DEFAULT_SMOOTHING_ATTEMPTS,
};
use crate::sampler::{NormalizationMap, UniformSampler};
use crate::scalar::Real;
use crate::seed::derive_seed;
use crate::world::{swept_clearance, Obstacle, World, DEFAULT_GRID_SIDE, MOTION_RESOLUTION};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const SCENARIO_VERSION: u32 = 1;
pub const CORPUS_VERSION: u32 = 1;
/// Number of templates, i.e. the size of the one-hot task vocabulary.
pub const VOCABULARY: usize = 3;
/// Half width of the square workspace.
pub const WORKSPACE_HALF: f64 = 2.5;
/// Link lengths of the chain shared by all templates.
pub const LINK_LENGTHS: [f64; 4] = [0.7, 0.6, 0.5, 0.4];
/// Symmetric joint limit of the shared chain.
pub const JOINT_LIMIT: f64 = std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Template {
    #[serde(rename = "reach")]
    Reach,
    #[serde(rename = "carry-level")]
    CarryLevel,
    #[serde(rename = "slide-door")]
    SlideDoor,
}

impl Template {
    pub const ALL: [Template; VOCABULARY] = [Template::Reach, Template::CarryLevel, Template::SlideDoor];

    pub fn name(self) -> &'static str {
        match self {
            Template::Reach => "reach",
            Template::CarryLevel => "carry-level",
            Template::SlideDoor => "slide-door",
        }
    }

    /// Position in the task vocabulary.
    pub fn task_index(self) -> usize {
        match self {
            Template::Reach => 0,
            Template::CarryLevel => 1,
            Template::SlideDoor => 2,
        }
    }

    fn obstacle_count(self) -> (usize, usize) {
        match self {
            Template::Reach => (3, 6),
            Template::CarryLevel | Template::SlideDoor => (2, 4),
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::config("scenario", format!("unknown template {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Scenario<T> {
    pub id: String,
    pub template: Template,
    /// Index of the obstacle layout within its generation run; queries on the
    /// same layout share world and constraint.
    pub layout: usize,
    /// Index into the task vocabulary.
    pub task: usize,
    pub chain: KinematicChain<T>,
    pub world: World<T>,
    pub constraint: ConstraintSpec<T>,
    pub start: Configuration<T>,
    pub goal: Configuration<T>,
    pub split: Split,
}

impl<T: Real> Scenario<T> {
    pub fn problem(&self) -> Problem<'_, T> {
        Problem::new(&self.chain, &self.world, &self.constraint)
    }

    /// Network inputs for this scenario on a `grid_side` occupancy grid.
    pub fn scene_input(&self, grid_side: usize) -> Result<SceneInput<T>> {
        Ok(SceneInput {
            task: TaskOneHot::new(self.task, VOCABULARY)?,
            grid: self.world.rasterize(grid_side).to_input(),
            normalization: NormalizationMap::from_chain(&self.chain),
        })
    }

    /// Why the scenario is unusable as a query, if anything.
    pub fn check(&self) -> Result<Option<String>> {
        let p = self.problem();
        for (name, c) in [("start", &self.start), ("goal", &self.goal)] {
            if let Some(why) = p.endpoint_problem(c)? {
                return Ok(Some(format!("{}: {name} {why}", self.id)));
            }
        }
        if self.task >= VOCABULARY || self.task != self.template.task_index() {
            return Ok(Some(format!("{}: task index does not match template", self.id)));
        }
        Ok(None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    /// Fraction of scenarios tagged as test (rounded up).
    pub test_fraction: f64,
    /// Endpoint draws per obstacle layout before the layout is abandoned.
    pub max_rejections: usize,
    /// Layouts abandoned before generation fails altogether.
    pub max_skipped_layouts: usize,
    /// Smallest joint-space distance between start and goal.
    pub min_separation: f64,
    /// Reject queries whose start reaches the goal by a single manifold extension.
    pub require_blocked: bool,
    /// Uniform extensions of the exploration tree from which goals are drawn.
    pub exploration_iterations: usize,
    /// Queries generated on each obstacle layout.
    pub queries_per_layout: usize,
    /// Prefer goals with the longest route through the exploration tree.
    pub farthest_goals: bool,
    pub planner: PlannerParams,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            test_fraction: 0.2,
            max_rejections: 10_000,
            max_skipped_layouts: 1_000,
            min_separation: 1.0,
            require_blocked: true,
            exploration_iterations: 300,
            queries_per_layout: 30,
            farthest_goals: true,
            planner: PlannerParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated<T> {
    pub scenarios: Vec<Scenario<T>>,
    /// Obstacle layouts given up after `max_rejections` endpoint draws.
    pub skipped_layouts: usize,
}

/// The chain used by every template.
pub fn template_chain<T: Real>() -> KinematicChain<T> {
    KinematicChain::uniform(LINK_LENGTHS.iter().map(|l| T::lit(*l)).collect(), T::lit(JOINT_LIMIT))
        .expect("template chain is valid")
}

fn random_rect<T: Real, R: Rng>(rng: &mut R) -> Obstacle<T> {
    loop {
        let r = rng.gen_range(0.5..2.2);
        let a = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let (cx, cy) = (r * a.cos(), r * a.sin());
        let w = rng.gen_range(0.2..0.6) / 2.0;
        let h = rng.gen_range(0.2..0.6) / 2.0;
        let rect = Rect::new(Point2::new(cx - w, cy - h), Point2::new(cx + w, cy + h));
        if rect.distance_to_point(&Point2::new(0.0, 0.0)) >= 0.4 {
            return Obstacle::rect(T::lit(cx - w), T::lit(cy - h), T::lit(cx + w), T::lit(cy + h));
        }
    }
}

fn random_constraint<T: Real, R: Rng>(template: Template, rng: &mut R) -> ConstraintSpec<T> {
    match template {
        Template::Reach => ConstraintSpec::none(),
        Template::CarryLevel => {
            ConstraintSpec::orientation_band(T::zero(), T::lit(-0.01), T::lit(0.01)).expect("valid band")
        }
        Template::SlideDoor => {
            let r = rng.gen_range(1.0..1.6);
            let a = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let dir = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let reference = TaskPose::new(T::lit(r * a.cos()), T::lit(r * a.sin()), T::lit(dir));
            ConstraintSpec::position_line(reference, T::lit(-0.6), T::lit(0.6)).expect("valid line")
        }
    }
}

/// Draws a valid endpoint; `None` after `budget` failed draws.
fn draw_endpoint<T: Real, R: Rng>(
    problem: &Problem<'_, T>,
    params: &PlannerParams,
    rng: &mut R,
    budget: &mut usize,
) -> Result<Option<Configuration<T>>> {
    while *budget > 0 {
        *budget -= 1;
        let c = problem.chain.sample_uniform(rng);
        let Some(p) = problem.spec.project(problem.chain, &c, params.projection_iters)? else {
            continue;
        };
        if problem.spec.kind() == ConstraintKind::OrientationBand {
            // The band repeats every full turn of summed joint angle; those sheets
            // are disconnected, so endpoints stay on the sheet around the reference.
            let total: T = p.config.as_slice().iter().copied().sum();
            if (total - problem.spec.reference().theta).abs() > T::lit(1.0) {
                continue;
            }
        }
        if problem.endpoint_problem(&p.config)?.is_none() {
            return Ok(Some(p.config));
        }
    }
    Ok(None)
}

/// True when one manifold extension from `start` already reaches `goal`.
pub fn directly_connected<T: Real>(
    problem: &Problem<'_, T>,
    start: &Configuration<T>,
    goal: &Configuration<T>,
    params: &PlannerParams,
) -> Result<bool> {
    let mut tree = PlanTree::new(start.clone(), TreeSide::Start);
    let mut stats = PlanStats::default();
    let f = traverse_manifold(problem, &mut tree, 0, goal, params, &mut stats)?;
    Ok(tree.node(f).distance(goal) <= T::lit(params.reach))
}

/// Grows a tree from `start` with uniform samples and picks a node far enough
/// away that a single extension from `start` does not reach it. Goals drawn
/// this way are connected to the start by construction.
fn reachable_goal<T: Real, R: Rng>(
    problem: &Problem<'_, T>,
    start: &Configuration<T>,
    params: &GenerationParams,
    rng: &mut R,
    budget: &mut usize,
) -> Result<Option<Configuration<T>>> {
    let mut tree = PlanTree::new(start.clone(), TreeSide::Start);
    let mut stats = PlanStats::default();
    for _ in 0..params.exploration_iterations {
        let sample = problem.chain.sample_uniform(rng);
        let near = tree.nearest(&sample);
        traverse_manifold(problem, &mut tree, near, &sample, &params.planner, &mut stats)?;
    }
    let min_sep = T::lit(params.min_separation);
    let mut candidates: Vec<usize> = (1..tree.len())
        .filter(|&i| tree.node(i).distance(start) >= min_sep)
        .collect();
    candidates.shuffle(rng);
    if params.farthest_goals {
        // Parents precede children, so one forward pass gives route lengths.
        let mut route = vec![T::zero(); tree.len()];
        for i in 1..tree.len() {
            let p = tree.parent(i).expect("non-root node has a parent");
            route[i] = route[p] + tree.node(i).distance(tree.node(p));
        }
        candidates.sort_by(|a, b| route[*b].partial_cmp(&route[*a]).expect("finite route"));
    }
    for i in candidates {
        if *budget == 0 {
            return Ok(None);
        }
        *budget -= 1;
        let goal = tree.node(i);
        if problem.endpoint_problem(goal)?.is_some() {
            continue;
        }
        if params.require_blocked && directly_connected(problem, start, goal, &params.planner)? {
            continue;
        }
        return Ok(Some(goal.clone()));
    }
    Ok(None)
}

fn random_layout<T: Real, R: Rng>(
    template: Template,
    chain: &KinematicChain<T>,
    rng: &mut R,
) -> Result<(World<T>, ConstraintSpec<T>)> {
    let (lo, hi) = template.obstacle_count();
    let n = rng.gen_range(lo..=hi);
    let obstacles = (0..n).map(|_| random_rect(rng)).collect();
    let half = T::lit(WORKSPACE_HALF);
    let world = World::new(Rect::new(Point2::new(-half, -half), Point2::new(half, half)), obstacles)?
        .with_clearance(swept_clearance(chain, T::lit(MOTION_RESOLUTION)))?;
    Ok((world, random_constraint::<T, _>(template, rng)))
}

/// One start/goal pair on a fixed layout, `None` once `max_rejections` draws are spent.
fn draw_query<T: Real, R: Rng>(
    problem: &Problem<'_, T>,
    params: &GenerationParams,
    rng: &mut R,
) -> Result<Option<(Configuration<T>, Configuration<T>)>> {
    let mut budget = params.max_rejections;
    while budget > 0 {
        let Some(start) = draw_endpoint(problem, &params.planner, rng, &mut budget)? else {
            break;
        };
        if let Some(goal) = reachable_goal(problem, &start, params, rng, &mut budget)? {
            return Ok(Some((start, goal)));
        }
    }
    Ok(None)
}

/// A layout and `queries` start/goal pairs on it. Layouts where any query
/// runs out of draws are skipped and redrawn.
#[allow(clippy::type_complexity)]
fn generate_layout<T: Real>(
    template: Template,
    chain: &KinematicChain<T>,
    seed: u64,
    queries: usize,
    params: &GenerationParams,
    skipped: &mut usize,
) -> Result<(World<T>, ConstraintSpec<T>, Vec<(Configuration<T>, Configuration<T>)>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'layout: loop {
        let (world, spec) = random_layout(template, chain, &mut rng)?;
        let problem = Problem::new(chain, &world, &spec);
        let mut pairs = Vec::with_capacity(queries);
        for _ in 0..queries {
            match draw_query(&problem, params, &mut rng)? {
                Some(pair) => pairs.push(pair),
                None => {
                    *skipped += 1;
                    if *skipped > params.max_skipped_layouts {
                        return Err(Error::config(
                            "scenario generation",
                            format!("gave up after {skipped} layouts without valid endpoints"),
                        ));
                    }
                    continue 'layout;
                }
            }
        }
        return Ok((world, spec, pairs));
    }
}

/// Generates `count` scenarios of `template`, deterministically per `seed`.
///
/// Scenarios come in groups of `queries_per_layout` sharing one layout (the
/// last group may be smaller); layout `l` depends only on `(seed, template, l)`.
/// A seeded shuffle picks `ceil(test_fraction * count)` scenarios as test.
pub fn generate_scenarios<T: Real>(
    seed: u64,
    count: usize,
    template: Template,
    params: &GenerationParams,
) -> Result<Generated<T>> {
    if !(0.0..1.0).contains(&params.test_fraction) {
        return Err(Error::config("scenario generation", "test fraction must be in [0, 1)"));
    }
    if params.queries_per_layout == 0 {
        return Err(Error::config("scenario generation", "queries per layout must be positive"));
    }
    params.planner.validate()?;
    let chain = template_chain::<T>();
    let mut skipped = 0;
    let mut scenarios = Vec::with_capacity(count);
    let mut layout = 0;
    while scenarios.len() < count {
        let queries = params.queries_per_layout.min(count - scenarios.len());
        let s = derive_seed(seed, &[template.task_index() as u64, layout as u64]);
        let (world, constraint, pairs) = generate_layout(template, &chain, s, queries, params, &mut skipped)?;
        for (start, goal) in pairs {
            let k = scenarios.len();
            scenarios.push(Scenario {
                id: format!("{}-{seed}-{k:04}", template.name()),
                template,
                layout,
                task: template.task_index(),
                chain: chain.clone(),
                world: world.clone(),
                constraint: constraint.clone(),
                start,
                goal,
                split: Split::Train,
            });
        }
        layout += 1;
    }
    let n_test = (params.test_fraction * count as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[u64::MAX])));
    for &i in order.iter().take(n_test) {
        scenarios[i].split = Split::Test;
    }
    Ok(Generated {
        scenarios,
        skipped_layouts: skipped,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ScenarioFile<T> {
    version: u32,
    scenarios: Vec<Scenario<T>>,
}

pub fn scenarios_to_string<T: Real>(scenarios: &[Scenario<T>]) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ScenarioFile {
        version: SCENARIO_VERSION,
        scenarios: scenarios.to_vec(),
    })?)
}

pub fn scenarios_from_str<T: Real>(text: &str) -> Result<Vec<Scenario<T>>> {
    check_version("scenarios", text, SCENARIO_VERSION)?;
    Ok(from_json_str::<ScenarioFile<T>>("scenarios", text)?.scenarios)
}

pub fn save_scenarios<T: Real>(scenarios: &[Scenario<T>], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, scenarios_to_string(scenarios)?)?;
    Ok(())
}

pub fn load_scenarios<T: Real>(path: &std::path::Path) -> Result<Vec<Scenario<T>>> {
    scenarios_from_str(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusParams {
    pub planner: PlannerParams,
    pub smoothing_attempts: usize,
    /// Extra oracle runs, each with a fresh seed, after a failed first run.
    pub retries: usize,
    /// Oracle success rate below which the corpus is rejected.
    pub min_success: f64,
    /// Grid resolution used for the network's scene input.
    pub grid_side: usize,
    /// Largest joint-space distance between consecutive key waypoints.
    pub max_key_spacing: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            planner: PlannerParams::default(),
            smoothing_attempts: DEFAULT_SMOOTHING_ATTEMPTS,
            retries: 3,
            min_success: 0.5,
            grid_side: DEFAULT_GRID_SIDE,
            max_key_spacing: 1.0,
        }
    }
}

/// One demonstrated solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DemoRecord<T> {
    pub scenario_id: String,
    pub seed: u64,
    /// Smoothed planner output; satisfies every path invariant.
    pub path: Vec<Configuration<T>>,
    /// Sparse subsequence of `path`, each reachable from the previous one by a
    /// single manifold extension. These are the training targets.
    pub key_waypoints: Vec<Configuration<T>>,
}

/// Oracle outcome for one training scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRecord {
    pub scenario_id: String,
    pub success: bool,
    /// Planner iterations of every attempt, in order.
    pub iterations: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Corpus<T> {
    pub version: u32,
    pub oracle_seed: u64,
    pub params: CorpusParams,
    pub scenarios: Vec<Scenario<T>>,
    pub demonstrations: Vec<DemoRecord<T>>,
    pub oracle: Vec<OracleRecord>,
}

impl<T: Real> Corpus<T> {
    pub fn scenario(&self, id: &str) -> Option<&Scenario<T>> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Scenario<T>> {
        self.scenarios.iter().filter(move |s| s.split == split)
    }

    /// Fraction of training scenarios the oracle solved (1 when there are none).
    pub fn oracle_success_rate(&self) -> f64 {
        if self.oracle.is_empty() {
            return 1.0;
        }
        self.oracle.iter().filter(|r| r.success).count() as f64 / self.oracle.len() as f64
    }

    /// Fails if any demonstration refers to a missing or test scenario.
    pub fn audit_leakage(&self) -> Result<()> {
        for d in &self.demonstrations {
            match self.scenario(&d.scenario_id) {
                Some(s) if s.split == Split::Train => {}
                Some(_) => {
                    return Err(Error::config(
                        "corpus",
                        format!("demonstration for test scenario {}", d.scenario_id),
                    ))
                }
                None => {
                    return Err(Error::config(
                        "corpus",
                        format!("demonstration for unknown scenario {}", d.scenario_id),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Re-validates every stored demonstration path. Returns the first failure.
    pub fn revalidate(&self) -> Result<Option<String>> {
        for d in &self.demonstrations {
            let Some(s) = self.scenario(&d.scenario_id) else {
                return Ok(Some(format!("unknown scenario {}", d.scenario_id)));
            };
            let r = validate_path(&s.problem(), &d.path, &s.start, &s.goal, &self.params.planner)?;
            if let Some(v) = r.violation {
                return Ok(Some(format!("{}: {v}", d.scenario_id)));
            }
        }
        Ok(None)
    }

    /// Training pairs from the key waypoints of every demonstration.
    pub fn demonstration_set(&self) -> Result<DemonstrationSet<T>> {
        self.audit_leakage()?;
        let mut set = DemonstrationSet::new();
        for s in self.split(Split::Train) {
            set.add_scene(s.id.clone(), s.scene_input(self.params.grid_side)?);
        }
        for d in &self.demonstrations {
            set.push(Demonstration {
                scenario_id: d.scenario_id.clone(),
                waypoints: d.key_waypoints.clone(),
            })?;
        }
        Ok(set)
    }
}

/// Greedy sparse subsequence of a valid path: from each kept waypoint, the
/// farthest later waypoint that one manifold extension reaches and that lies
/// within `max_spacing` (joint-space distance).
pub fn key_waypoints<T: Real>(
    problem: &Problem<'_, T>,
    path: &[Configuration<T>],
    params: &PlannerParams,
    max_spacing: f64,
) -> Result<Vec<Configuration<T>>> {
    if path.len() <= 2 {
        return Ok(path.to_vec());
    }
    let reach = T::lit(params.reach);
    let max_step = T::lit(params.max_step);
    let mut keys = vec![path[0].clone()];
    let mut i = 0;
    let last = path.len() - 1;
    while i < last {
        let mut next = i + 1;
        for j in (i + 2..=last).rev() {
            if path[j].distance(&path[i]).as_f64() > max_spacing {
                continue;
            }
            let mut tree = PlanTree::new(path[i].clone(), TreeSide::Start);
            let mut stats = PlanStats::default();
            let f = traverse_manifold(problem, &mut tree, 0, &path[j], params, &mut stats)?;
            let end = tree.node(f);
            if end.distance(&path[j]) <= reach && problem.edge_ok(end, &path[j], max_step)? {
                next = j;
                break;
            }
        }
        keys.push(path[next].clone());
        i = next;
    }
    Ok(keys)
}

/// Runs the oracle (planner with the uniform sampler) on every training
/// scenario, smooths successful paths, and stores them as demonstrations.
pub fn build_corpus<T: Real>(
    scenarios: Vec<Scenario<T>>,
    params: &CorpusParams,
    oracle_seed: u64,
) -> Result<Corpus<T>> {
    params.planner.validate()?;
    let mut demonstrations = Vec::new();
    let mut oracle = Vec::new();
    for (k, s) in scenarios.iter().enumerate() {
        if s.split != Split::Train {
            continue;
        }
        if let Some(why) = s.check()? {
            return Err(Error::InvalidQuery(why));
        }
        let problem = s.problem();
        let mut record = OracleRecord {
            scenario_id: s.id.clone(),
            success: false,
            iterations: Vec::new(),
        };
        for attempt in 0..=params.retries {
            let seed = derive_seed(oracle_seed, &[k as u64, attempt as u64]);
            let mut sampler = UniformSampler::seeded(s.chain.clone(), seed);
            let out = plan(&problem, &mut sampler, &s.start, &s.goal, &params.planner)?;
            record.iterations.push(out.stats.iterations);
            let Some(path) = out.path else { continue };
            let smoothed = smooth(&problem, &path, &params.planner, params.smoothing_attempts, seed)?;
            let report = validate_path(&problem, &smoothed.waypoints, &s.start, &s.goal, &params.planner)?;
            if !report.is_valid() {
                continue;
            }
            let keys = key_waypoints(&problem, &smoothed.waypoints, &params.planner, params.max_key_spacing)?;
            demonstrations.push(DemoRecord {
                scenario_id: s.id.clone(),
                seed,
                path: smoothed.waypoints,
                key_waypoints: keys,
            });
            record.success = true;
            break;
        }
        oracle.push(record);
    }
    let corpus = Corpus {
        version: CORPUS_VERSION,
        oracle_seed,
        params: params.clone(),
        scenarios,
        demonstrations,
        oracle,
    };
    let rate = corpus.oracle_success_rate();
    if rate < params.min_success {
        return Err(Error::OracleTooWeak {
            rate,
            required: params.min_success,
        });
    }
    Ok(corpus)
}

pub fn corpus_to_string<T: Real>(corpus: &Corpus<T>) -> Result<String> {
    Ok(serde_json::to_string(corpus)?)
}

pub fn corpus_from_str<T: Real>(text: &str) -> Result<Corpus<T>> {
    check_version("corpus", text, CORPUS_VERSION)?;
    from_json_str("corpus", text)
}

pub fn save_corpus<T: Real>(corpus: &Corpus<T>, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, corpus_to_string(corpus)?)?;
    Ok(())
}

pub fn load_corpus<T: Real>(path: &std::path::Path) -> Result<Corpus<T>> {
    corpus_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(template: Template, count: usize, seed: u64) -> Vec<Scenario<f64>> {
        generate_scenarios(seed, count, template, &GenerationParams::default())
            .unwrap()
            .scenarios
    }

    #[test]
    fn zero_count_is_empty() {
        assert!(small(Template::Reach, 0, 1).is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        for t in Template::ALL {
            assert_eq!(small(t, 3, 5), small(t, 3, 5));
        }
        assert_ne!(small(Template::Reach, 2, 5), small(Template::Reach, 2, 6));
    }

    #[test]
    fn generated_endpoints_are_valid() {
        for t in Template::ALL {
            for s in small(t, 6, 3) {
                assert_eq!(s.check().unwrap(), None);
                assert!(!directly_connected(&s.problem(), &s.start, &s.goal, &PlannerParams::default()).unwrap());
                if t == Template::CarryLevel {
                    let total: f64 = s.start.as_slice().iter().sum();
                    assert!(total.abs() <= 1.0);
                }
            }
        }
    }

    #[test]
    fn test_split_is_at_least_ten_percent() {
        for count in [1, 5, 10, 37] {
            let params = GenerationParams {
                test_fraction: 0.1,
                require_blocked: false,
                ..GenerationParams::default()
            };
            let s: Vec<Scenario<f64>> = generate_scenarios(2, count, Template::Reach, &params).unwrap().scenarios;
            let test = s.iter().filter(|x| x.split == Split::Test).count();
            assert!(test as f64 >= 0.1 * count as f64, "{test} of {count}");
        }
    }

    #[test]
    fn template_names_round_trip() {
        for t in Template::ALL {
            assert_eq!(t.name().parse::<Template>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.name()));
        }
        assert!("kitchen".parse::<Template>().is_err());
    }

    #[test]
    fn scenario_file_round_trip_and_errors() {
        let s = small(Template::SlideDoor, 2, 9);
        let text = scenarios_to_string(&s).unwrap();
        assert_eq!(scenarios_from_str::<f64>(&text).unwrap(), s);
        let broken = text.replacen("\"goal\"", "\"gaol\"", 1);
        match scenarios_from_str::<f64>(&broken) {
            Err(Error::Parse { location, message, .. }) => {
                assert!(location.starts_with("scenarios[0]"), "{location}");
                assert!(message.contains("goal"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let future = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            scenarios_from_str::<f64>(&future),
            Err(Error::VersionMismatch { found: 2, .. })
        ));
    }

    #[test]
    fn empty_corpus() {
        let c = build_corpus::<f64>(Vec::new(), &CorpusParams::default(), 0).unwrap();
        assert!(c.demonstrations.is_empty());
        assert_eq!(c.oracle_success_rate(), 1.0);
    }

    #[test]
    fn corpus_demonstrations_validate_and_round_trip() {
        let mut scenarios = small(Template::Reach, 4, 12);
        scenarios.extend(small(Template::CarryLevel, 3, 12));
        let corpus = build_corpus(scenarios, &CorpusParams::default(), 3).unwrap();
        assert!(!corpus.demonstrations.is_empty());
        assert_eq!(corpus.revalidate().unwrap(), None);
        corpus.audit_leakage().unwrap();
        for d in &corpus.demonstrations {
            assert_eq!(d.key_waypoints.first(), d.path.first());
            assert_eq!(d.key_waypoints.last(), d.path.last());
            assert!(d.key_waypoints.len() <= d.path.len());
        }
        let text = corpus_to_string(&corpus).unwrap();
        let back: Corpus<f64> = corpus_from_str(&text).unwrap();
        assert_eq!(back, corpus);
        assert_eq!(back.revalidate().unwrap(), None);
        let set = corpus.demonstration_set().unwrap();
        assert_eq!(set.len(), corpus.demonstrations.len());
        for id in set.scenario_ids() {
            assert_eq!(corpus.scenario(&id).unwrap().split, Split::Train);
        }
    }

    #[test]
    fn leakage_audit_catches_test_demos() {
        let scenarios = small(Template::Reach, 5, 4);
        let mut corpus = build_corpus(scenarios, &CorpusParams::default(), 1).unwrap();
        let test_id = corpus.split(Split::Test).next().unwrap().id.clone();
        let mut d = corpus.demonstrations[0].clone();
        d.scenario_id = test_id;
        corpus.demonstrations.push(d);
        assert!(corpus.audit_leakage().is_err());
        assert!(corpus.demonstration_set().is_err());
    }

    #[test]
    fn weak_oracle_aborts() {
        let scenarios = small(Template::Reach, 4, 12);
        let params = CorpusParams {
            planner: PlannerParams {
                max_iterations: 1,
                max_extension_steps: 1,
                ..PlannerParams::default()
            },
            retries: 0,
            ..CorpusParams::default()
        };
        assert!(matches!(
            build_corpus(scenarios, &params, 0),
            Err(Error::OracleTooWeak { .. })
        ));
    }

    #[test]
    fn missing_corpus_field_is_named() {
        let corpus = build_corpus::<f64>(Vec::new(), &CorpusParams::default(), 0).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&corpus_to_string(&corpus).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("oracle_seed");
        match corpus_from_str::<f64>(&v.to_string()) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("oracle_seed"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
