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

use conplan::bench::{aggregate, read_records_csv, BenchReport};
use conplan::planner::{load_path, save_path};
use conplan::scenario::{load_corpus, load_scenarios, save_scenarios, Split};
use conplan::world::Obstacle;
use conplan::{Config, Scenario, World};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn conplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conplan"))
        .args(args)
        .env_remove("COMPNET_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Scenario file with two reach and two carry-level queries, generated once.
fn fixture() -> &'static Path {
    static FILE: OnceLock<PathBuf> = OnceLock::new();
    FILE.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("conplan-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let out = dir.join("scenarios.json");
        let o = conplan(&["gen", "--template", "reach,carry-level", "--count", "2", "--test-fraction", "0.5", "--seed", "3", "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    })
}

fn scenarios() -> Vec<Scenario> {
    load_scenarios(fixture()).unwrap()
}

fn write_variant(dir: &Path, name: &str, s: &Scenario) -> PathBuf {
    let p = dir.join(name);
    save_scenarios(std::slice::from_ref(s), &p).unwrap();
    p
}

#[test]
fn gen_empty_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    let o = conplan(&["gen", "--template", "reach", "--count", "0", "--out", s(&empty)]);
    assert_eq!(code(&o), 0);
    assert!(load_scenarios::<f64>(&empty).unwrap().is_empty());

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert_eq!(code(&conplan(&["gen", "--template", "slide-door", "--count", "1", "--seed", "9", "--out", s(p)])), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let loaded = load_scenarios::<f64>(&a).unwrap();
    assert_eq!(loaded.len(), 1);
    assert!(loaded[0].check().unwrap().is_none());
}

#[test]
fn gen_unknown_template_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = conplan(&["gen", "--template", "juggle", "--count", "1", "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("juggle"));
    assert_eq!(code(&conplan(&["gen", "--count", "1"])), 2);
}

#[test]
fn plan_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let sc = &scenarios()[0];
    let out = dir.path().join("path.json");
    let reference = format!("{}#{}", s(fixture()), sc.id);
    let o = conplan(&["plan", "--scenario", &reference, "--sampler", "uniform", "--seed", "4", "--smooth", "20", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let path = load_path::<f64>(&out).unwrap();
    assert_eq!(path.waypoints.first(), Some(&sc.start));
    assert_eq!(path.waypoints.last(), Some(&sc.goal));
    let v = conplan(&["validate", "--path", s(&out), "--scenario", &reference]);
    assert_eq!(code(&v), 0, "{}", stderr(&v));

    let again = dir.path().join("again.json");
    conplan(&["plan", "--scenario", &reference, "--seed", "4", "--smooth", "20", "--out", s(&again)]);
    assert_eq!(load_path::<f64>(&again).unwrap().waypoints, path.waypoints);
}

#[test]
fn plan_trivial_and_invalid_queries() {
    let dir = tempfile::tempdir().unwrap();
    let mut same = scenarios()[0].clone();
    same.goal = same.start.clone();
    let file = write_variant(dir.path(), "same.json", &same);
    let out = dir.path().join("p.json");
    let o = conplan(&["plan", "--scenario", &format!("{}#{}", s(&file), same.id), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(load_path::<f64>(&out).unwrap().waypoints.len(), 1);

    // Goal configuration placed inside a new obstacle around its end effector.
    let mut blocked = scenarios()[0].clone();
    let tip = blocked.chain.forward_kinematics(&blocked.goal).unwrap();
    let mut obstacles = blocked.world.obstacles().to_vec();
    obstacles.push(Obstacle::circle(tip.x, tip.y, 0.05));
    blocked.world = World::new(blocked.world.bounds(), obstacles)
        .unwrap()
        .with_clearance(blocked.world.clearance())
        .unwrap();
    let file = write_variant(dir.path(), "blocked.json", &blocked);
    let o = conplan(&["plan", "--scenario", &format!("{}#{}", s(&file), blocked.id), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("goal"), "{}", stderr(&o));

    let missing = conplan(&["plan", "--scenario", &format!("{}#nope", s(fixture())), "--out", s(&out)]);
    assert_eq!(code(&missing), 2);
    let no_weights = conplan(&["plan", "--scenario", &format!("{}#{}", s(fixture()), same.id), "--sampler", "neural", "--out", s(&out)]);
    assert_eq!(code(&no_weights), 2);
}

#[test]
fn plan_budget_exhaustion_is_run_failure() {
    let dir = tempfile::tempdir().unwrap();
    let sc = &scenarios()[0];
    let o = conplan(&[
        "plan",
        "--scenario",
        &format!("{}#{}", s(fixture()), sc.id),
        "--max-iterations",
        "1",
        "--max-extension-steps",
        "1",
        "--out",
        s(&dir.path().join("p.json")),
    ]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn validate_names_the_violation() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenarios().into_iter().find(|s| s.id.starts_with("carry-level")).unwrap();
    let reference = format!("{}#{}", s(fixture()), sc.id);
    let out = dir.path().join("path.json");
    assert_eq!(code(&conplan(&["plan", "--scenario", &reference, "--seed", "1", "--out", s(&out)])), 0);
    let path = load_path::<f64>(&out).unwrap();
    assert!(path.waypoints.len() >= 3);

    let mut bent = path.clone();
    let mid = bent.waypoints.len() / 2;
    let mut joints = bent.waypoints[mid].as_slice().to_vec();
    joints[3] += 0.3;
    bent.waypoints[mid] = Config::from_vec(joints);
    let bent_file = dir.path().join("bent.json");
    save_path(&bent, &bent_file).unwrap();
    let o = conplan(&["validate", "--path", s(&bent_file), "--scenario", &reference]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("constraint"), "{}", stderr(&o));

    let mut jump = path.clone();
    jump.waypoints = vec![path.waypoints[0].clone(), path.waypoints[path.waypoints.len() - 1].clone()];
    let jump_file = dir.path().join("jump.json");
    save_path(&jump, &jump_file).unwrap();
    let o = conplan(&["validate", "--path", s(&jump_file), "--scenario", &reference]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("gap"), "{}", stderr(&o));
}

#[test]
fn demos_train_bench_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.json");
    let o = conplan(&["demos", "--scenarios", s(fixture()), "--out", s(&corpus), "--seed", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("oracle success"));
    let c = load_corpus::<f64>(&corpus).unwrap();
    assert!(c.revalidate().unwrap().is_none());
    assert_eq!(c.demonstrations.len(), c.split(Split::Train).count());

    let again = dir.path().join("again.json");
    conplan(&["demos", "--scenarios", s(fixture()), "--out", s(&again), "--seed", "2"]);
    assert_eq!(std::fs::read(&corpus).unwrap(), std::fs::read(&again).unwrap());

    let weights = dir.path().join("w.json");
    let o = conplan(&["train", "--corpus", s(&corpus), "--out", s(&weights), "--epochs", "3", "--heldout-fraction", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("initial loss") && stdout(&o).contains("final loss"));
    let history = std::fs::read_to_string(weights.with_extension("csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 4);

    let report = dir.path().join("report.json");
    let o = conplan(&[
        "bench", "--scenarios", s(&corpus), "--split", "test", "--samplers", "uniform,hybrid", "--weights", s(&weights),
        "--repeats", "2", "--out", s(&report),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("uniform") && stdout(&o).contains("hybrid"));
    let r = BenchReport::load(&report).unwrap();
    assert_eq!(r.records.len(), 2 * 2 * c.split(Split::Test).count());
    assert!(r.aggregates.iter().all(|a| (0.0..=1.0).contains(&a.success_rate)));
    let raw = read_records_csv(&report.with_extension("csv")).unwrap();
    assert_eq!(aggregate(&raw), r.aggregates);

    let o = conplan(&["bench", "--scenarios", s(&corpus), "--samplers", "neural", "--out", s(&report)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn demos_on_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    save_scenarios::<f64>(&[], &empty).unwrap();
    let corpus = dir.path().join("c.json");
    let o = conplan(&["demos", "--scenarios", s(&empty), "--out", s(&corpus)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(load_corpus::<f64>(&corpus).unwrap().demonstrations.is_empty());
}

#[test]
fn weak_oracle_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.json");
    let o = conplan(&[
        "demos", "--scenarios", s(fixture()), "--out", s(&corpus), "--retries", "0", "--max-iterations", "1",
        "--max-extension-steps", "1",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("oracle"), "{}", stderr(&o));
    assert!(!corpus.exists());
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let sc = &scenarios()[0];
    let reference = format!("{}#{}", s(fixture()), sc.id);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    conplan(&["plan", "--scenario", &reference, "--seed", "77", "--out", s(&a)]);
    let o = Command::new(env!("CARGO_BIN_EXE_conplan"))
        .args(["plan", "--scenario", &reference, "--out", s(&b)])
        .env("COMPNET_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(load_path::<f64>(&a).unwrap().waypoints, load_path::<f64>(&b).unwrap().waypoints);
}

#[test]
fn unreadable_inputs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{\"version\": 1, \"scenarios\": [{\"id\": 3}]}").unwrap();
    let o = conplan(&["bench", "--scenarios", s(&junk), "--samplers", "uniform", "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("scenarios[0]"), "{}", stderr(&o));
    let o = conplan(&["train", "--corpus", s(&dir.path().join("none.json")), "--out", s(&dir.path().join("w.json"))]);
    assert_eq!(code(&o), 2);
}
