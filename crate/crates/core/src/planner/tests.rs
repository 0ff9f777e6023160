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

use super::*;
use crate::geometry::{Point2, Rect};
use crate::kinematics::TaskPose;
use crate::sampler::UniformSampler;
use crate::world::{swept_clearance, Obstacle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn cfg(v: &[f64]) -> Configuration<f64> {
    Configuration::from_vec(v.to_vec())
}

fn two_link() -> KinematicChain<f64> {
    KinematicChain::uniform(vec![1.0, 1.0], PI).unwrap()
}

fn three_link() -> KinematicChain<f64> {
    KinematicChain::uniform(vec![1.0, 0.8, 0.6], PI).unwrap()
}

fn level() -> ConstraintSpec<f64> {
    ConstraintSpec::orientation_band(0.0, -0.01, 0.01).unwrap()
}

fn on_manifold(
    spec: &ConstraintSpec<f64>,
    chain: &KinematicChain<f64>,
    world: &World<f64>,
    rng: &mut ChaCha8Rng,
) -> Configuration<f64> {
    loop {
        let c = chain.sample_uniform(rng);
        if let Some(p) = spec.project(chain, &c, 50).unwrap() {
            // the level band repeats every 2 pi of summed joint angle; stay on the
            // sheet around the reference orientation so queries are connected
            let sheet = p.config.as_slice().iter().sum::<f64>().abs() < 0.5;
            let level_kind = spec.kind() == crate::constraints::ConstraintKind::OrientationBand;
            if (sheet || !level_kind) && !world.config_in_collision(chain, &p.config).unwrap() {
                return p.config;
            }
        }
    }
}

/// Two-link chain with a wall to the upper right of the base.
fn walled_world(chain: &KinematicChain<f64>) -> World<f64> {
    World::new(
        Rect::new(Point2::new(-2.5, -2.5), Point2::new(2.5, 2.5)),
        vec![Obstacle::rect(0.6, 0.6, 1.2, 2.4), Obstacle::circle(-1.2, -1.0, 0.3)],
    )
    .unwrap()
    .with_clearance(swept_clearance(chain, MOTION_RESOLUTION))
    .unwrap()
}

#[test]
fn nearest_trivial_cases() {
    let mut t = PlanTree::new(cfg(&[0.0, 0.0]), TreeSide::Start);
    assert_eq!(t.nearest(&cfg(&[3.0, -1.0])), 0);
    t.push(cfg(&[1.0, 1.0]), 0);
    t.push(cfg(&[2.0, 0.5]), 1);
    assert_eq!(t.nearest(&cfg(&[2.0, 0.5])), 2);
    // equidistant from nodes 0 and 1
    t.push(cfg(&[0.0, 0.0]), 2);
    assert_eq!(t.nearest(&cfg(&[0.5, 0.5])), 0);
    assert_eq!(t.nearest(&cfg(&[0.0, 0.0])), 0);
}

#[test]
fn nearest_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let chain = three_link();
    let mut t = PlanTree::new(chain.sample_uniform(&mut rng), TreeSide::Goal);
    for i in 0..99 {
        t.push(chain.sample_uniform(&mut rng), i);
    }
    for _ in 0..100 {
        let q = chain.sample_uniform(&mut rng);
        let dists: Vec<f64> = t.nodes().iter().map(|n| n.distance(&q)).collect();
        let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        let oracle = dists.iter().position(|d| *d == min).unwrap();
        assert_eq!(t.nearest(&q), oracle);
    }
}

#[test]
fn branch_walks_to_root() {
    let mut t = PlanTree::new(cfg(&[0.0]), TreeSide::Start);
    let a = t.push(cfg(&[1.0]), 0);
    let _ = t.push(cfg(&[5.0]), 0);
    let b = t.push(cfg(&[2.0]), a);
    assert_eq!(t.branch(b), vec![cfg(&[2.0]), cfg(&[1.0]), cfg(&[0.0])]);
    assert_eq!(t.parent(b), Some(a));
    assert_eq!(t.parent(0), None);
}

#[test]
fn traverse_to_existing_node_adds_nothing() {
    let chain = two_link();
    let world = World::empty(3.0);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let mut t = PlanTree::new(cfg(&[0.3, 0.2]), TreeSide::Start);
    let mut stats = PlanStats::default();
    let f = traverse_manifold(&problem, &mut t, 0, &cfg(&[0.3, 0.2]), &PlannerParams::default(), &mut stats)
        .unwrap();
    assert_eq!(f, 0);
    assert_eq!(t.len(), 1);
}

#[test]
fn unconstrained_traverse_is_straight() {
    let chain = three_link();
    let world = World::empty(3.0);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams::default();
    let a = cfg(&[-2.0, 1.0, 0.5]);
    let b = cfg(&[1.5, -0.5, 2.5]);
    let mut t = PlanTree::new(a.clone(), TreeSide::Start);
    let mut stats = PlanStats::default();
    let f = traverse_manifold(&problem, &mut t, 0, &b, &params, &mut stats).unwrap();
    assert!(t.node(f).distance(&b) <= params.reach);
    let dir: Vec<f64> = (0..3).map(|i| b[i] - a[i]).collect();
    let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    for n in t.nodes() {
        let v: Vec<f64> = (0..3).map(|i| n[i] - a[i]).collect();
        let along = v.iter().zip(&dir).map(|(x, y)| x * y).sum::<f64>() / (dn * dn);
        let off = v
            .iter()
            .zip(&dir)
            .map(|(x, y)| (x - along * y).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(off < 1e-9, "node off the line by {off}");
    }
    for (i, n) in t.nodes().iter().enumerate().skip(1) {
        assert!(n.max_distance(t.node(t.parent(i).unwrap())) <= params.max_step + 1e-12);
    }
    assert_eq!(stats.nodes_expanded, t.len() - 1);
}

#[test]
fn constrained_traverse_stays_on_manifold() {
    let chain = three_link();
    let world = World::empty(3.0);
    let spec = level();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut reached = 0;
    let trials = 40;
    for _ in 0..trials {
        let a = on_manifold(&spec, &chain, &world, &mut rng);
        let nudge: Vec<f64> = a.as_slice().iter().map(|v| v + rng.gen_range(-0.6..0.6)).collect();
        let Some(b) = spec.project(&chain, &chain.clamp(&nudge), 50).unwrap() else {
            continue;
        };
        let b = b.config;
        let mut t = PlanTree::new(a.clone(), TreeSide::Start);
        let mut stats = PlanStats::default();
        let f = traverse_manifold(&problem, &mut t, 0, &b, &params, &mut stats).unwrap();
        for n in t.nodes() {
            assert!(spec.error(&chain, n).unwrap().norm < spec.epsilon());
        }
        assert_eq!(t.audit(&problem, &params).unwrap(), None);
        if t.node(f).distance(&b) <= params.reach {
            reached += 1;
        }
    }
    assert!(reached >= trials * 9 / 10, "reached {reached}/{trials}");
}

#[test]
fn identical_endpoints_give_single_waypoint() {
    let chain = two_link();
    let world = World::empty(3.0);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let c = cfg(&[0.4, -0.3]);
    let mut s = UniformSampler::seeded(chain.clone(), 0);
    let out = plan(&problem, &mut s, &c, &c, &PlannerParams::default()).unwrap();
    let path = out.path.unwrap();
    assert_eq!(path.waypoints, vec![c]);
    assert_eq!(out.stats.iterations, 0);
}

#[test]
fn invalid_queries_are_errors() {
    let chain = two_link();
    let world = walled_world(&chain);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let mut s = UniformSampler::seeded(chain.clone(), 0);
    let free = cfg(&[-PI / 2.0, 0.0]);
    // straight up and bent right: the elbow sits inside the wall
    let blocked = cfg(&[PI / 4.0, 0.0]);
    assert!(world.config_in_collision(&chain, &blocked).unwrap());
    let params = PlannerParams::default();
    assert!(matches!(
        plan(&problem, &mut s, &free, &blocked, &params),
        Err(Error::InvalidQuery(_))
    ));
    let outside = cfg(&[4.0, 0.0]);
    assert!(matches!(
        plan(&problem, &mut s, &outside, &free, &params),
        Err(Error::InvalidQuery(_))
    ));
    let level_spec = level();
    let tilted = Problem::new(&chain, &world, &level_spec);
    assert!(matches!(
        plan(&tilted, &mut s, &free, &free, &params),
        Err(Error::InvalidQuery(_))
    ));
}

#[test]
fn two_link_reach_succeeds_and_validates() {
    let chain = two_link();
    let world = walled_world(&chain);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams::default();
    let start = cfg(&[-PI / 2.0, 0.3]);
    let goal = cfg(&[-0.9 * PI, 0.2]);
    let mut s = UniformSampler::seeded(chain.clone(), 7);
    let out = plan(&problem, &mut s, &start, &goal, &params).unwrap();
    let path = out.path.as_ref().expect("planning failed");
    assert!(out.stats.iterations <= 2000);
    let report = validate_path(&problem, &path.waypoints, &start, &goal, &params).unwrap();
    assert!(report.is_valid(), "{:?}", report.violation);
    for t in &out.trees {
        assert_eq!(t.audit(&problem, &params).unwrap(), None);
    }
    assert_eq!(out.trees[0].side(), TreeSide::Start);
}

#[test]
fn unconstrained_empty_world_always_succeeds() {
    let chain = three_link();
    let world = World::empty(3.0);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams {
        max_iterations: 500,
        ..PlannerParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..100 {
        let a = chain.sample_uniform(&mut rng);
        let b = chain.sample_uniform(&mut rng);
        let mut s = UniformSampler::seeded(chain.clone(), seed);
        let out = plan(&problem, &mut s, &a, &b, &params).unwrap();
        let path = out.path.expect("no path in an empty world");
        assert!(validate_path(&problem, &path.waypoints, &a, &b, &params)
            .unwrap()
            .is_valid());
    }
}

#[test]
fn constrained_plans_validate_and_replay() {
    let chain = three_link();
    let world = World::new(
        Rect::new(Point2::new(-3.0, -3.0), Point2::new(3.0, 3.0)),
        vec![Obstacle::rect(-0.3, 1.2, 0.3, 3.0)],
    )
    .unwrap()
    .with_clearance(swept_clearance(&chain, MOTION_RESOLUTION))
    .unwrap();
    let spec = level();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut successes = 0;
    for seed in 0..12 {
        let a = on_manifold(&spec, &chain, &world, &mut rng);
        let b = on_manifold(&spec, &chain, &world, &mut rng);
        let run = || {
            let mut s = UniformSampler::seeded(chain.clone(), seed);
            plan(&problem, &mut s, &a, &b, &params).unwrap()
        };
        let first = run();
        let second = run();
        assert_eq!(first.path, second.path.map(|mut p| {
            p.stats.wall_time_ms = first.stats.wall_time_ms;
            p
        }));
        assert_eq!(first.stats.iterations, second.stats.iterations);
        for t in &first.trees {
            assert_eq!(t.audit(&problem, &params).unwrap(), None);
        }
        if let Some(path) = first.path {
            successes += 1;
            let r = validate_path(&problem, &path.waypoints, &a, &b, &params).unwrap();
            assert!(r.is_valid(), "{:?}", r.violation);
        }
    }
    assert!(successes >= 8, "only {successes}/12 constrained plans succeeded");
}

#[test]
fn goal_input_variants_both_plan() {
    let chain = two_link();
    let world = walled_world(&chain);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let start = cfg(&[-PI / 2.0, 0.3]);
    let goal = cfg(&[-0.9 * PI, 0.2]);
    for goal_input in [GoalInput::Frontier, GoalInput::OppositeRoot] {
        let params = PlannerParams {
            goal_input,
            ..PlannerParams::default()
        };
        let mut s = UniformSampler::seeded(chain.clone(), 3);
        assert!(plan(&problem, &mut s, &start, &goal, &params).unwrap().succeeded());
    }
}

#[test]
fn params_validation() {
    assert!(PlannerParams::default().validate().is_ok());
    let bad = [
        PlannerParams { reach: 0.001, ..PlannerParams::default() },
        PlannerParams { reach: 0.2, ..PlannerParams::default() },
        PlannerParams { max_step: -1.0, ..PlannerParams::default() },
        PlannerParams { max_iterations: 0, ..PlannerParams::default() },
    ];
    for p in bad {
        assert!(p.validate().is_err(), "{p:?}");
    }
}

fn planned_path() -> (KinematicChain<f64>, World<f64>, Path<f64>, Configuration<f64>, Configuration<f64>) {
    let chain = two_link();
    let world = walled_world(&chain);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let start = cfg(&[-PI / 2.0, 0.3]);
    let goal = cfg(&[-0.9 * PI, 0.2]);
    let mut s = UniformSampler::seeded(chain.clone(), 7);
    let out = plan(&problem, &mut s, &start, &goal, &PlannerParams::default()).unwrap();
    (chain.clone(), world, out.path.unwrap(), start, goal)
}

#[test]
fn validator_reports_constraint_gap_and_collision() {
    let chain = three_link();
    let world = World::empty(3.0);
    let spec = level();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = on_manifold(&spec, &chain, &world, &mut rng);
    let mut t = PlanTree::new(a.clone(), TreeSide::Start);
    let target = on_manifold(&spec, &chain, &world, &mut rng);
    let mut stats = PlanStats::default();
    let f = traverse_manifold(&problem, &mut t, 0, &target, &params, &mut stats).unwrap();
    let mut wps = t.branch(f);
    wps.reverse();
    assert!(wps.len() > 3);
    let end = wps.last().unwrap().clone();
    assert!(validate_path(&problem, &wps, &a, &end, &params).unwrap().is_valid());

    let mut bent = wps.clone();
    let mid = bent.len() / 2;
    let mut v = bent[mid].clone().into_vec();
    v[0] += 0.1;
    bent[mid] = Configuration::from_vec(v);
    let r = validate_path(&problem, &bent, &a, &end, &params).unwrap();
    assert!(matches!(r.violation, Some(Violation::Constraint { .. })));
    assert!(r.violation.unwrap().to_string().contains("constraint"));

    // teleport: shift the tail of the path by one radian on a null-space direction
    let mut v = a.clone().into_vec();
    v[1] += 1.0;
    v[2] -= 1.0;
    let b = Configuration::from_vec(v);
    let jump = vec![a.clone(), b.clone()];
    let none = ConstraintSpec::none();
    let free = Problem::new(&chain, &world, &none);
    let r = validate_path(&free, &jump, &a, &b, &params).unwrap();
    assert!(matches!(r.violation, Some(Violation::Gap { .. })));
    assert!(r.violation.unwrap().to_string().contains("gap"));

    let wrong_end = validate_path(&problem, &wps, &a, &target, &params).unwrap();
    if end.max_distance(&target) > 1e-9 {
        assert!(matches!(wrong_end.violation, Some(Violation::Endpoint { which: "goal", .. })));
    }
    assert_eq!(
        validate_path(&problem, &[], &a, &a, &params).unwrap().violation,
        Some(Violation::Empty)
    );
}

#[test]
fn validator_catches_motion_through_obstacle() {
    let chain = two_link();
    // thin wall that the sampled motion check could step over
    let world = World::new(
        Rect::new(Point2::new(-2.5, -2.5), Point2::new(2.5, 2.5)),
        vec![Obstacle::rect(1.5, -0.001, 2.5, 0.001)],
    )
    .unwrap();
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let a = cfg(&[-0.05, 0.0]);
    let b = cfg(&[0.05, 0.0]);
    let params = PlannerParams::default();
    let r = validate_path(&problem, &[a.clone(), b.clone()], &a, &b, &params).unwrap();
    assert!(matches!(r.violation, Some(Violation::Collision { index: 0 })));
    assert!(r.violation.unwrap().to_string().contains("collision"));
}

#[test]
fn smoothing_keeps_two_waypoint_paths() {
    let chain = two_link();
    let world = World::empty(3.0);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let path = Path {
        waypoints: vec![cfg(&[0.0, 0.0]), cfg(&[0.05, 0.0])],
        stats: PlanStats::default(),
    };
    assert_eq!(smooth(&problem, &path, &PlannerParams::default(), 100, 1).unwrap(), path);
}

#[test]
fn smoothing_shortens_a_zigzag() {
    let chain = two_link();
    let world = World::empty(3.0);
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams::default();
    // detour up to 0.6 in the second joint and back, in 0.1 steps
    let mut wps = Vec::new();
    for k in 0..=10 {
        let x = k as f64 * 0.1;
        let y = if k <= 5 { x * 0.6 / 0.5 } else { (1.0 - x) * 0.6 / 0.5 };
        wps.push(cfg(&[x, y * 0.1 / 0.12]));
    }
    let path = Path {
        waypoints: wps.clone(),
        stats: PlanStats::default(),
    };
    assert!(validate_path(&problem, &wps, &wps[0], &wps[10], &params).unwrap().is_valid());
    let smoothed = smooth(&problem, &path, &params, 100, 2).unwrap();
    assert!(smoothed.length() < path.length() - 1e-3);
    assert!(validate_path(&problem, &smoothed.waypoints, &wps[0], &wps[10], &params)
        .unwrap()
        .is_valid());
}

#[test]
fn smoothing_planned_path_validates() {
    let (chain, world, path, start, goal) = planned_path();
    let spec = ConstraintSpec::none();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams::default();
    let smoothed = smooth(&problem, &path, &params, 100, 11).unwrap();
    assert!(smoothed.length() <= path.length());
    let r = validate_path(&problem, &smoothed.waypoints, &start, &goal, &params).unwrap();
    assert!(r.is_valid(), "{:?}", r.violation);
}

#[test]
fn path_json_round_trip_and_errors() {
    let (_, _, path, _, _) = planned_path();
    let text = path_to_string(&path).unwrap();
    assert_eq!(path_from_str::<f64>(&text).unwrap(), path);
    let old = text.replacen("\"version\": 1", "\"version\": 0", 1);
    assert!(matches!(
        path_from_str::<f64>(&old),
        Err(Error::VersionMismatch { found: 0, .. })
    ));
    let missing = r#"{"version": 1, "waypoints": [[0.0, 1.0]]}"#;
    match path_from_str::<f64>(missing) {
        Err(Error::Parse { message, .. }) => assert!(message.contains("stats"), "{message}"),
        other => panic!("expected parse error, got {other:?}"),
    }
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.json");
    save_path(&path, &file).unwrap();
    assert_eq!(load_path::<f64>(&file).unwrap(), path);
}

#[test]
fn position_line_plan_validates() {
    let chain = three_link();
    let world = World::empty(3.0);
    let spec = ConstraintSpec::position_line(TaskPose::new(0.5, 1.0, 0.0), -1.5, 1.5).unwrap();
    let problem = Problem::new(&chain, &world, &spec);
    let params = PlannerParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let a = on_manifold(&spec, &chain, &world, &mut rng);
    let b = on_manifold(&spec, &chain, &world, &mut rng);
    let mut s = UniformSampler::seeded(chain.clone(), 1);
    let out = plan(&problem, &mut s, &a, &b, &params).unwrap();
    if let Some(path) = out.path {
        assert!(validate_path(&problem, &path.waypoints, &a, &b, &params).unwrap().is_valid());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn plans_are_seed_deterministic(seed in 0u64..1000) {
        let chain = two_link();
        let world = walled_world(&chain);
        let spec = ConstraintSpec::none();
        let problem = Problem::new(&chain, &world, &spec);
        let params = PlannerParams { max_iterations: 300, ..PlannerParams::default() };
        let start = cfg(&[-PI / 2.0, 0.3]);
        let goal = cfg(&[-0.9 * PI, 0.2]);
        let go = || {
            let mut s = UniformSampler::seeded(chain.clone(), seed);
            plan(&problem, &mut s, &start, &goal, &params).unwrap()
        };
        let (x, y) = (go(), go());
        prop_assert_eq!(x.stats.iterations, y.stats.iterations);
        prop_assert_eq!(x.path.map(|p| p.waypoints), y.path.map(|p| p.waypoints));
    }
}
