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

//! Next-configuration generators used by the planner.

use crate::error::{Error, Result};
use crate::kinematics::{Configuration, KinematicChain};
use crate::neural::{DropoutMode, Encoding, PlanningNetwork, SceneInput};
use crate::scalar::Real;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Goal-bias probability of the uniform sampler.
pub const DEFAULT_GOAL_BIAS: f64 = 0.1;
/// Planner iterations served by the neural sampler before the hybrid falls back to uniform.
pub const DEFAULT_EXPLOIT_BUDGET: usize = 50;

/// Per-joint affine map between the limit box and `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NormalizationMap<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Real> NormalizationMap<T> {
    pub fn from_chain(chain: &KinematicChain<T>) -> Self {
        NormalizationMap {
            lo: chain.joint_limits().iter().map(|l| l.lo).collect(),
            hi: chain.joint_limits().iter().map(|l| l.hi).collect(),
        }
    }

    pub fn dof(&self) -> usize {
        self.lo.len()
    }

    /// `v_i = 2 (c_i - lo_i) / (hi_i - lo_i) - 1`
    pub fn normalize(&self, c: &Configuration<T>) -> Vec<T> {
        let two = T::lit(2.0);
        c.as_slice()
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (lo, hi))| two * (*v - *lo) / (*hi - *lo) - T::one())
            .collect()
    }

    /// Inverse of [`normalize`](Self::normalize); inputs outside `[-1, 1]` are clamped first.
    pub fn unnormalize(&self, v: &[T]) -> Configuration<T> {
        let half = T::lit(0.5);
        Configuration::from_vec(
            v.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(x, (lo, hi))| {
                    let x = x.max(-T::one()).min(T::one());
                    let c = *lo + (x + T::one()) * half * (*hi - *lo);
                    c.max(*lo).min(*hi)
                })
                .collect(),
        )
    }
}

/// Which generator produced a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Uniform,
    Neural,
    Hybrid,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::Uniform, SamplerKind::Neural, SamplerKind::Hybrid];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Neural => "neural",
            SamplerKind::Hybrid => "hybrid",
        }
    }

    pub fn needs_network(self) -> bool {
        !matches!(self, SamplerKind::Uniform)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("sampler", format!("unknown sampler {s:?}")))
    }
}

/// Source of configurations for the planner's sampling step.
///
/// `iteration` is the planner loop index, `current` and `goal` the pair
/// `(c_t, c_T)` tracked by the planner.
pub trait Sampler<T: Real> {
    fn next_config(
        &mut self,
        iteration: usize,
        current: &Configuration<T>,
        goal: &Configuration<T>,
    ) -> Configuration<T>;
}

impl<T: Real, S: Sampler<T> + ?Sized> Sampler<T> for Box<S> {
    fn next_config(
        &mut self,
        iteration: usize,
        current: &Configuration<T>,
        goal: &Configuration<T>,
    ) -> Configuration<T> {
        (**self).next_config(iteration, current, goal)
    }
}

/// Uniform samples from the joint-limit box, returning `goal` with probability `goal_bias`.
#[derive(Clone, Debug)]
pub struct UniformSampler<T, R = ChaCha8Rng> {
    chain: KinematicChain<T>,
    goal_bias: f64,
    rng: R,
}

impl<T: Real> UniformSampler<T> {
    pub fn seeded(chain: KinematicChain<T>, seed: u64) -> Self {
        UniformSampler::with_rng(chain, DEFAULT_GOAL_BIAS, ChaCha8Rng::seed_from_u64(seed))
    }
}

impl<T: Real, R: Rng> UniformSampler<T, R> {
    pub fn with_rng(chain: KinematicChain<T>, goal_bias: f64, rng: R) -> Self {
        UniformSampler {
            chain,
            goal_bias: goal_bias.clamp(0.0, 1.0),
            rng,
        }
    }
}

impl<T: Real, R: Rng> Sampler<T> for UniformSampler<T, R> {
    fn next_config(
        &mut self,
        _iteration: usize,
        _current: &Configuration<T>,
        goal: &Configuration<T>,
    ) -> Configuration<T> {
        if self.rng.gen_bool(self.goal_bias) {
            return self.chain.clamp(goal.as_slice());
        }
        self.chain.sample_uniform(&mut self.rng)
    }
}

/// Draws from the planning network with dropout active.
#[derive(Clone, Debug)]
pub struct NeuralSampler<T, R = ChaCha8Rng> {
    network: Arc<PlanningNetwork<T>>,
    encoding: Encoding<T>,
    normalization: NormalizationMap<T>,
    rng: R,
}

impl<T: Real> NeuralSampler<T> {
    pub fn seeded(network: Arc<PlanningNetwork<T>>, scene: &SceneInput<T>, seed: u64) -> Result<Self> {
        NeuralSampler::with_rng(network, scene, ChaCha8Rng::seed_from_u64(seed))
    }
}

impl<T: Real, R: RngCore> NeuralSampler<T, R> {
    /// Encodes the scene once; fails when the network does not fit the scene.
    pub fn with_rng(network: Arc<PlanningNetwork<T>>, scene: &SceneInput<T>, rng: R) -> Result<Self> {
        let shape = network.shape();
        if shape.dof != scene.normalization.dof() {
            return Err(Error::DimensionMismatch {
                expected: shape.dof,
                actual: scene.normalization.dof(),
            });
        }
        let encoding = network.encode(&scene.grid, &scene.task.to_vec())?;
        Ok(NeuralSampler {
            network,
            encoding,
            normalization: scene.normalization.clone(),
            rng,
        })
    }

    /// Network output before unnormalization, in `[-1, 1]^d`.
    pub fn raw_sample(&mut self, current: &Configuration<T>, goal: &Configuration<T>) -> Vec<T> {
        let c = self.normalization.normalize(current);
        let g = self.normalization.normalize(goal);
        self.network
            .step(&self.encoding, &c, &g, DropoutMode::Stochastic(&mut self.rng))
            .expect("dimensions checked at construction")
    }
}

impl<T: Real, R: RngCore> Sampler<T> for NeuralSampler<T, R> {
    fn next_config(
        &mut self,
        _iteration: usize,
        current: &Configuration<T>,
        goal: &Configuration<T>,
    ) -> Configuration<T> {
        let v = self.raw_sample(current, goal);
        self.normalization.unnormalize(&v)
    }
}

/// Neural sampling for the first `exploit_budget` planner iterations, uniform afterwards.
#[derive(Clone, Debug)]
pub struct HybridSampler<T, R = ChaCha8Rng> {
    neural: NeuralSampler<T, R>,
    uniform: UniformSampler<T, R>,
    exploit_budget: usize,
    last_source: Option<SamplerKind>,
    switches: usize,
}

impl<T: Real, R: Rng> HybridSampler<T, R> {
    pub fn new(
        neural: NeuralSampler<T, R>,
        uniform: UniformSampler<T, R>,
        exploit_budget: usize,
    ) -> Self {
        HybridSampler {
            neural,
            uniform,
            exploit_budget,
            last_source: None,
            switches: 0,
        }
    }

    /// Generator used for the most recent sample.
    pub fn last_source(&self) -> Option<SamplerKind> {
        self.last_source
    }

    /// Number of times consecutive samples came from different generators.
    pub fn switches(&self) -> usize {
        self.switches
    }
}

impl<T: Real, R: Rng> Sampler<T> for HybridSampler<T, R> {
    fn next_config(
        &mut self,
        iteration: usize,
        current: &Configuration<T>,
        goal: &Configuration<T>,
    ) -> Configuration<T> {
        let source = if iteration < self.exploit_budget {
            SamplerKind::Neural
        } else {
            SamplerKind::Uniform
        };
        if self.last_source.is_some_and(|s| s != source) {
            self.switches += 1;
        }
        self.last_source = Some(source);
        match source {
            SamplerKind::Neural => self.neural.next_config(iteration, current, goal),
            _ => self.uniform.next_config(iteration, current, goal),
        }
    }
}

/// Everything needed to build a sampler for one query.
#[derive(Clone, Debug)]
pub struct SamplerSetup<'a, T> {
    pub chain: &'a KinematicChain<T>,
    pub scene: &'a SceneInput<T>,
    pub network: Option<Arc<PlanningNetwork<T>>>,
    pub exploit_budget: usize,
    pub goal_bias: f64,
}

impl<'a, T: Real> SamplerSetup<'a, T> {
    pub fn new(chain: &'a KinematicChain<T>, scene: &'a SceneInput<T>) -> Self {
        SamplerSetup {
            chain,
            scene,
            network: None,
            exploit_budget: DEFAULT_EXPLOIT_BUDGET,
            goal_bias: DEFAULT_GOAL_BIAS,
        }
    }

    pub fn with_network(mut self, network: Option<Arc<PlanningNetwork<T>>>) -> Self {
        self.network = network;
        self
    }

    /// Builds a sampler of the requested kind seeded with `seed`.
    ///
    /// Neural and hybrid samplers need a network; its absence is reported here.
    pub fn build(&self, kind: SamplerKind, seed: u64) -> Result<Box<dyn Sampler<T> + Send>> {
        let uniform = || {
            UniformSampler::with_rng(
                self.chain.clone(),
                self.goal_bias,
                ChaCha8Rng::seed_from_u64(seed),
            )
        };
        let neural = || -> Result<NeuralSampler<T>> {
            let net = self.network.clone().ok_or_else(|| {
                Error::config("sampler", format!("{kind} sampler requires network weights"))
            })?;
            NeuralSampler::with_rng(net, self.scene, ChaCha8Rng::seed_from_u64(seed))
        };
        Ok(match kind {
            SamplerKind::Uniform => Box::new(uniform()),
            SamplerKind::Neural => Box::new(neural()?),
            SamplerKind::Hybrid => Box::new(HybridSampler::new(neural()?, uniform(), self.exploit_budget)),
        })
    }
}
