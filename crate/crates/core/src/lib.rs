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

//! Constrained motion planning for planar manipulators.
//!
//! Planning happens on the zero set of a task-space constraint: samples are
//! pulled onto the manifold with a damped pseudo-inverse projection, trees
//! grow along it by projected interpolation, and a bidirectional search joins
//! a start tree and a goal tree. The configuration sampler that drives the
//! search is pluggable: a uniform baseline, a stochastic feed-forward network
//! trained by imitation of baseline demonstrations, or a hybrid that falls back
//! from the network to uniform sampling after a fixed budget.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the persisted formats
//! and the benchmark pipeline use.

pub mod bench;
pub mod constraints;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod linalg;
pub mod neural;
pub mod planner;
pub mod sampler;
pub mod scalar;
pub mod scenario;
pub mod seed;
pub mod world;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Chain = kinematics::KinematicChain<f64>;
pub type Config = kinematics::Configuration<f64>;
pub type Pose = kinematics::TaskPose<f64>;
pub type Constraint = constraints::ConstraintSpec<f64>;
pub type World = world::World<f64>;
pub type Network = neural::PlanningNetwork<f64>;
pub type Scenario = scenario::Scenario<f64>;
pub type Corpus = scenario::Corpus<f64>;
pub type PlanPath = planner::Path<f64>;
