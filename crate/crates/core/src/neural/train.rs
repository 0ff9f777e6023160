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

//! Imitation training on demonstration waypoints.

use super::{DropoutMode, PlanningNetwork, TaskOneHot};
use crate::error::{Error, Result};
use crate::kinematics::Configuration;
use crate::sampler::NormalizationMap;
use crate::scalar::Real;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// Network inputs shared by every demonstration of one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneInput<T> {
    pub task: TaskOneHot,
    /// Flattened occupancy grid.
    pub grid: Vec<T>,
    pub normalization: NormalizationMap<T>,
}

/// Waypoints `c*_0 .. c*_T` of one demonstrated path, in joint space.
#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration<T> {
    pub scenario_id: String,
    pub waypoints: Vec<Configuration<T>>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DemonstrationSet<T> {
    scenes: BTreeMap<String, SceneInput<T>>,
    demos: Vec<Demonstration<T>>,
}

impl<T: Real> DemonstrationSet<T> {
    pub fn new() -> Self {
        DemonstrationSet {
            scenes: BTreeMap::new(),
            demos: Vec::new(),
        }
    }

    pub fn add_scene(&mut self, scenario_id: impl Into<String>, scene: SceneInput<T>) {
        self.scenes.insert(scenario_id.into(), scene);
    }

    pub fn push(&mut self, demo: Demonstration<T>) -> Result<()> {
        let scene = self.scenes.get(&demo.scenario_id).ok_or_else(|| {
            Error::config(
                "demonstrations",
                format!("no scene registered for scenario {}", demo.scenario_id),
            )
        })?;
        if demo.waypoints.len() < 2 {
            return Err(Error::config(
                "demonstrations",
                format!("demonstration for {} has fewer than 2 waypoints", demo.scenario_id),
            ));
        }
        let dof = scene.normalization.dof();
        if let Some(w) = demo.waypoints.iter().find(|w| w.dof() != dof) {
            return Err(Error::DimensionMismatch {
                expected: dof,
                actual: w.dof(),
            });
        }
        self.demos.push(demo);
        Ok(())
    }

    pub fn demos(&self) -> &[Demonstration<T>] {
        &self.demos
    }

    pub fn scene(&self, id: &str) -> Option<&SceneInput<T>> {
        self.scenes.get(id)
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    /// Distinct scenario ids that have at least one demonstration, sorted.
    pub fn scenario_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.demos.iter().map(|d| d.scenario_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

/// Normalized training pair owned by the trainer.
#[derive(Clone, Debug)]
struct OwnedExample<T> {
    scene: String,
    current: Vec<T>,
    goal: Vec<T>,
    target: Vec<T>,
}

/// Borrowed network input plus supervision target.
#[derive(Clone, Copy, Debug)]
pub struct Example<'a, T> {
    pub grid: &'a [T],
    pub task: &'a [T],
    pub current: &'a [T],
    pub goal: &'a [T],
    pub target: &'a [T],
}

fn extract_pairs<T: Real>(
    set: &DemonstrationSet<T>,
    ids: &[String],
    reverse: bool,
) -> Vec<OwnedExample<T>> {
    let mut out = Vec::new();
    for demo in set.demos.iter().filter(|d| ids.contains(&d.scenario_id)) {
        let scene = &set.scenes[&demo.scenario_id];
        let norm: Vec<Vec<T>> = demo
            .waypoints
            .iter()
            .map(|w| scene.normalization.normalize(w))
            .collect();
        let mut push_dir = |seq: Vec<&Vec<T>>| {
            let goal = seq[seq.len() - 1].clone();
            for w in seq.windows(2) {
                out.push(OwnedExample {
                    scene: demo.scenario_id.clone(),
                    current: w[0].clone(),
                    goal: goal.clone(),
                    target: w[1].clone(),
                });
            }
        };
        push_dir(norm.iter().collect());
        if reverse {
            push_dir(norm.iter().rev().collect());
        }
    }
    out
}

/// Squared-error imitation loss: `(1 / n_b) * sum_i |prediction_i - target_i|^2`.
pub fn loss<T: Real>(predictions: &[Vec<T>], targets: &[Vec<T>], n_b: usize) -> Result<T> {
    if predictions.is_empty() || n_b == 0 {
        return Err(Error::EmptyBatch);
    }
    if predictions.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    let mut total = T::zero();
    for (p, t) in predictions.iter().zip(targets) {
        if p.len() != t.len() {
            return Err(Error::DimensionMismatch {
                expected: t.len(),
                actual: p.len(),
            });
        }
        total = total + p.iter().zip(t).map(|(a, b)| (*a - *b) * (*a - *b)).sum::<T>();
    }
    Ok(total / T::from_count(n_b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Fraction of scenarios whose demonstrations are held out for validation.
    pub heldout_fraction: f64,
    /// Also train on every demonstration traversed goal-to-start.
    pub reverse_augment: bool,
    /// Sanity control: permute targets across examples before training.
    pub permute_targets: bool,
    /// Apply dropout during gradient steps; off only for capacity probes.
    #[serde(default = "enabled")]
    pub dropout: bool,
}

fn enabled() -> bool {
    true
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            batch_size: 32,
            epochs: 300,
            learning_rate: 1e-2,
            momentum: 0.9,
            seed: 0,
            heldout_fraction: 0.15,
            reverse_augment: true,
            permute_targets: false,
            dropout: true,
        }
    }
}

impl TrainingConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("training", "batch size must be positive"));
        }
        if !(self.learning_rate > 0.0) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(
                "training",
                "learning rate must be positive and momentum in [0, 1)",
            ));
        }
        if !(0.0..1.0).contains(&self.heldout_fraction) {
            return Err(Error::config("training", "held-out fraction must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// `NaN` when no scenario is held out.
    pub heldout_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainingReport<T> {
    pub network: PlanningNetwork<T>,
    /// Epoch 0 is the untrained network; losses are deterministic-mode evaluations.
    pub history: Vec<LossRecord>,
    pub train_scenarios: Vec<String>,
    pub heldout_scenarios: Vec<String>,
    pub train_examples: usize,
    /// Largest gradient magnitude seen per stack (obs, task, pnet) on the first batch.
    pub first_batch_grad_max: [f64; 3],
}

impl<T: Real> TrainingReport<T> {
    pub fn initial_loss(&self) -> f64 {
        self.history[0].train_loss
    }

    pub fn final_loss(&self) -> f64 {
        self.history[self.history.len() - 1].train_loss
    }

    pub fn best_loss(&self) -> f64 {
        self.history
            .iter()
            .map(|r| r.train_loss)
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes `epoch,train_loss,heldout_loss` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.history {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn as_examples<'a, T: Real>(
    set: &'a DemonstrationSet<T>,
    owned: &'a [OwnedExample<T>],
    tasks: &'a BTreeMap<String, Vec<T>>,
) -> Vec<Example<'a, T>> {
    owned
        .iter()
        .map(|o| Example {
            grid: &set.scenes[&o.scene].grid,
            task: &tasks[&o.scene],
            current: &o.current,
            goal: &o.goal,
            target: &o.target,
        })
        .collect()
}

/// Deterministic mean loss over `examples` (encoders run once per scene).
pub(crate) fn evaluate<T: Real>(net: &PlanningNetwork<T>, examples: &[Example<'_, T>]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut cache: Vec<(*const T, super::Encoding<T>)> = Vec::new();
    let mut total = 0.0;
    for ex in examples {
        let key = ex.grid.as_ptr();
        let enc = match cache.iter().find(|(k, _)| *k == key) {
            Some((_, e)) => e.clone(),
            None => {
                let e = net.encode(ex.grid, ex.task)?;
                cache.push((key, e.clone()));
                e
            }
        };
        let out = net.step(&enc, ex.current, ex.goal, DropoutMode::Deterministic)?;
        total += out
            .iter()
            .zip(ex.target)
            .map(|(a, b)| (*a - *b).as_f64().powi(2))
            .sum::<f64>();
    }
    Ok(total / examples.len() as f64)
}

/// Loss and gradient of one batch; `rng` drives dropout (deterministic when `None`).
pub fn loss_and_gradient<T: Real>(
    net: &PlanningNetwork<T>,
    batch: &[Example<'_, T>],
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(T, PlanningNetwork<T>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n_b = T::from_count(batch.len());
    let two = T::lit(2.0);
    let mut grads = net.zeros_like();
    let mut total = T::zero();
    let mut mode = match rng {
        Some(r) => DropoutMode::Stochastic(r),
        None => DropoutMode::Deterministic,
    };
    for ex in batch {
        let mut sq = T::zero();
        net.accumulate_gradient(ex, &mut mode, &mut grads, |out| {
            out.iter()
                .zip(ex.target)
                .map(|(o, t)| {
                    sq = sq + (*o - *t) * (*o - *t);
                    two * (*o - *t) / n_b
                })
                .collect()
        });
        total = total + sq;
    }
    Ok((total / n_b, grads))
}

/// Trains `net` on the demonstration pairs `(c_t, c_T) -> c_{t+1}` with
/// dropout active, momentum SGD, and a per-scenario held-out split.
pub fn train<T: Real>(
    mut net: PlanningNetwork<T>,
    demos: &DemonstrationSet<T>,
    cfg: &TrainingConfig,
) -> Result<TrainingReport<T>> {
    cfg.validate()?;
    if demos.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ids = demos.scenario_ids();
    ids.shuffle(&mut rng);
    let n_held = if ids.len() >= 2 {
        ((ids.len() as f64 * cfg.heldout_fraction).ceil() as usize).min(ids.len() - 1)
    } else {
        0
    };
    let n_held = if cfg.heldout_fraction > 0.0 { n_held } else { 0 };
    let heldout_ids: Vec<String> = ids[..n_held].to_vec();
    let train_ids: Vec<String> = ids[n_held..].to_vec();

    let mut fit = extract_pairs(demos, &train_ids, cfg.reverse_augment);
    let held = extract_pairs(demos, &heldout_ids, false);
    if cfg.permute_targets {
        let mut targets: Vec<Vec<T>> = fit.iter().map(|e| e.target.clone()).collect();
        targets.shuffle(&mut rng);
        for (e, t) in fit.iter_mut().zip(targets) {
            e.target = t;
        }
    }
    let tasks: BTreeMap<String, Vec<T>> = demos
        .scenes
        .iter()
        .map(|(k, s)| (k.clone(), s.task.to_vec()))
        .collect();
    let fit_ex = as_examples(demos, &fit, &tasks);
    let held_ex = as_examples(demos, &held, &tasks);

    let lr = T::lit(cfg.learning_rate);
    let mu = T::lit(cfg.momentum);
    let mut velocity = net.zeros_like();
    let mut history = vec![LossRecord {
        epoch: 0,
        train_loss: evaluate(&net, &fit_ex)?,
        heldout_loss: evaluate(&net, &held_ex)?,
    }];
    let mut first_batch_grad_max = [0.0; 3];
    let mut order: Vec<usize> = (0..fit_ex.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<Example<'_, T>> = chunk.iter().map(|&i| fit_ex[i]).collect();
            let noise = if cfg.dropout { Some(&mut rng) } else { None };
            let (batch_loss, grads) = loss_and_gradient(&net, &batch, noise)?;
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    value: batch_loss.as_f64(),
                });
            }
            if epoch == 1 && b == 0 {
                let m = grads.stack_max_abs();
                first_batch_grad_max = [m[0].as_f64(), m[1].as_f64(), m[2].as_f64()];
            }
            for ((p, v), g) in net
                .params_mut()
                .zip(velocity.params_mut())
                .zip(grads.params())
            {
                *v = mu * *v - lr * *g;
                *p = *p + *v;
            }
        }
        let record = LossRecord {
            epoch,
            train_loss: evaluate(&net, &fit_ex)?,
            heldout_loss: evaluate(&net, &held_ex)?,
        };
        if !record.train_loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: usize::MAX,
                value: record.train_loss,
            });
        }
        history.push(record);
    }
    Ok(TrainingReport {
        network: net,
        history,
        train_scenarios: train_ids,
        heldout_scenarios: heldout_ids,
        train_examples: fit_ex.len(),
        first_batch_grad_max,
    })
}
