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

//! The planning network and its encoders.
//!
//! Three feed-forward stacks are trained jointly:
//!
//! * the observation encoder maps a flattened occupancy grid to `Z_o`,
//! * the task encoder maps a one-hot task vector to `Z_c`,
//! * the planning network maps `[Z_c, Z_o, c_t, c_T]` to the next
//!   configuration, all configurations normalized to `[-1, 1]`.
//!
//! Dropout on the planning network's hidden layers stays active at inference
//! time when sampling stochastically; that randomness is what turns the
//! network into a sampler.

mod io;
mod train;

pub use io::{load_weights, save_weights, weights_from_str, weights_to_string, WEIGHTS_VERSION};
pub use train::{
    loss, loss_and_gradient, train, Demonstration, DemonstrationSet, Example, LossRecord, SceneInput,
    TrainingConfig, TrainingReport,
};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Architecture hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkShape {
    /// Number of occupancy cells (grid side squared).
    pub grid_cells: usize,
    /// Task vocabulary size.
    pub vocab: usize,
    /// Degrees of freedom of the chain.
    pub dof: usize,
    pub obs_hidden: Vec<usize>,
    /// Dimension of `Z_o`.
    pub obs_latent: usize,
    pub task_hidden: Vec<usize>,
    /// Dimension of `Z_c`.
    pub task_latent: usize,
    pub pnet_hidden: Vec<usize>,
    pub dropout: f64,
}

impl NetworkShape {
    /// Default layout for a `side x side` grid, `vocab` tasks and `dof` joints.
    pub fn new(grid_side: usize, vocab: usize, dof: usize) -> Self {
        NetworkShape {
            grid_cells: grid_side * grid_side,
            vocab,
            dof,
            obs_hidden: vec![128],
            obs_latent: 64,
            task_hidden: Vec::new(),
            task_latent: 32,
            pnet_hidden: vec![256, 128],
            dropout: 0.5,
        }
    }

    /// Side of the square occupancy grid this network reads.
    pub fn grid_side(&self) -> usize {
        (self.grid_cells as f64).sqrt().round() as usize
    }

    pub fn pnet_input(&self) -> usize {
        self.task_latent + self.obs_latent + 2 * self.dof
    }

    fn validate(&self) -> Result<()> {
        let sizes = [
            self.grid_cells,
            self.vocab,
            self.dof,
            self.obs_latent,
            self.task_latent,
        ];
        if sizes.contains(&0)
            || self.obs_hidden.contains(&0)
            || self.task_hidden.contains(&0)
            || self.pnet_hidden.contains(&0)
        {
            return Err(Error::config("network", "layer sizes must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("network", "dropout must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Fully connected layer, `out = W in + b` with `W` stored out x in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Dense<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weights: Matrix::zeros(outputs, inputs),
            bias: vec![T::zero(); outputs],
        }
    }

    fn init<R: Rng>(inputs: usize, outputs: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..inputs * outputs)
            .map(|_| T::lit(rng.gen_range(-bound..bound)))
            .collect();
        Dense {
            weights: Matrix::from_row_major(outputs, inputs, data),
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    /// `W x + b`, skipping zero inputs (the occupancy input is sparse).
    fn apply(&self, x: &[T]) -> Vec<T> {
        let nz: Vec<usize> = (0..x.len()).filter(|&i| x[i] != T::zero()).collect();
        (0..self.outputs())
            .map(|r| {
                let row = self.weights.row(r);
                nz.iter().fold(self.bias[r], |s, &i| s + row[i] * x[i])
            })
            .collect()
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.as_mut_slice().iter_mut().chain(self.bias.iter_mut())
    }

    fn params(&self) -> impl Iterator<Item = &T> {
        self.weights.as_slice().iter().chain(self.bias.iter())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation `z` and activation `a`.
    fn derivative<T: Real>(self, z: T, a: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - a * a,
        }
    }
}

/// Dropout behaviour of a forward pass.
pub enum DropoutMode<'a> {
    /// No dropout; a pure function of inputs and weights.
    Deterministic,
    /// Inverted dropout with masks drawn from the given generator.
    Stochastic(&'a mut dyn RngCore),
}

impl std::fmt::Debug for DropoutMode<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DropoutMode::Deterministic => write!(f, "Deterministic"),
            DropoutMode::Stochastic(_) => write!(f, "Stochastic"),
        }
    }
}

/// Activations recorded during a forward pass, consumed by backprop.
#[derive(Clone, Debug, Default)]
struct StackTrace<T> {
    /// Input of every layer.
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
    post: Vec<Vec<T>>,
    /// Dropout multipliers (empty when no dropout was applied on that layer).
    masks: Vec<Vec<T>>,
}

fn run_stack<T: Real>(
    layers: &[Dense<T>],
    input: &[T],
    last_activation: Activation,
    dropout: Option<(f64, &mut DropoutMode<'_>)>,
    mut trace: Option<&mut StackTrace<T>>,
) -> Vec<T> {
    let mut x = input.to_vec();
    let n = layers.len();
    let (p, mut mode) = match dropout {
        Some((p, m)) => (p, Some(m)),
        None => (0.0, None),
    };
    let keep_scale = T::lit(1.0 / (1.0 - p));
    for (l, layer) in layers.iter().enumerate() {
        let z = layer.apply(&x);
        let act = if l + 1 == n {
            last_activation
        } else {
            Activation::Relu
        };
        let mut a: Vec<T> = z.iter().map(|v| act.apply(*v)).collect();
        let mut mask = Vec::new();
        if l + 1 < n && p > 0.0 {
            if let Some(DropoutMode::Stochastic(rng)) = mode.as_deref_mut() {
                mask = (0..a.len())
                    .map(|_| {
                        if rng.gen_bool(1.0 - p) {
                            keep_scale
                        } else {
                            T::zero()
                        }
                    })
                    .collect();
                for (ai, m) in a.iter_mut().zip(&mask) {
                    *ai = *ai * *m;
                }
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.inputs.push(std::mem::take(&mut x));
            t.pre.push(z);
            t.masks.push(mask);
            t.post.push(a.clone());
        }
        x = a;
    }
    x
}

/// Backpropagates `grad_out` (w.r.t. the stack output) and accumulates into `grads`.
/// Returns the gradient w.r.t. the stack input when `need_input_grad`.
fn backprop_stack<T: Real>(
    layers: &[Dense<T>],
    trace: &StackTrace<T>,
    last_activation: Activation,
    grad_out: &[T],
    grads: &mut [Dense<T>],
    need_input_grad: bool,
) -> Vec<T> {
    let n = layers.len();
    let mut g = grad_out.to_vec();
    for l in (0..n).rev() {
        let act = if l + 1 == n {
            last_activation
        } else {
            Activation::Relu
        };
        let mask = &trace.masks[l];
        let pre = &trace.pre[l];
        let post = &trace.post[l];
        let dz: Vec<T> = (0..g.len())
            .map(|i| {
                let m = if mask.is_empty() { T::one() } else { mask[i] };
                if m == T::zero() {
                    return T::zero();
                }
                // post = act(pre) * m
                let a = post[i] / m;
                g[i] * m * act.derivative(pre[i], a)
            })
            .collect();
        let input = &trace.inputs[l];
        let nz: Vec<usize> = (0..input.len()).filter(|&i| input[i] != T::zero()).collect();
        let gl = &mut grads[l];
        for (r, &d) in dz.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            gl.bias[r] = gl.bias[r] + d;
            let row = gl.weights.row_mut(r);
            for &i in &nz {
                row[i] = row[i] + d * input[i];
            }
        }
        if l > 0 || need_input_grad {
            g = layers[l].weights.tr_mul_vec(&dz);
        }
    }
    if need_input_grad {
        g
    } else {
        Vec::new()
    }
}

/// Cached encoder outputs for one scene and task.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding<T> {
    pub obs: Vec<T>,
    pub task: Vec<T>,
}

/// Observation encoder, task encoder and planning network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PlanningNetwork<T> {
    shape: NetworkShape,
    obs: Vec<Dense<T>>,
    task: Vec<Dense<T>>,
    pnet: Vec<Dense<T>>,
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<(usize, usize)> {
    let mut dims = vec![input];
    dims.extend_from_slice(hidden);
    dims.push(output);
    dims.windows(2).map(|w| (w[0], w[1])).collect()
}

impl<T: Real> PlanningNetwork<T> {
    /// Randomly initialized network (He-uniform on ReLU layers, Glorot on the tanh output).
    pub fn new(shape: NetworkShape, seed: u64) -> Result<Self> {
        shape.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut build = |sizes: Vec<(usize, usize)>, tanh_last: bool| -> Vec<Dense<T>> {
            let n = sizes.len();
            sizes
                .into_iter()
                .enumerate()
                .map(|(i, (fi, fo))| {
                    let bound = if tanh_last && i + 1 == n {
                        (6.0 / (fi + fo) as f64).sqrt()
                    } else {
                        (6.0 / fi as f64).sqrt()
                    };
                    Dense::init(fi, fo, bound, &mut rng)
                })
                .collect()
        };
        let obs = build(
            layer_sizes(shape.grid_cells, &shape.obs_hidden, shape.obs_latent),
            false,
        );
        let task = build(
            layer_sizes(shape.vocab, &shape.task_hidden, shape.task_latent),
            false,
        );
        let pnet = build(
            layer_sizes(shape.pnet_input(), &shape.pnet_hidden, shape.dof),
            true,
        );
        Ok(PlanningNetwork {
            shape,
            obs,
            task,
            pnet,
        })
    }

    /// Network with every weight and bias zero.
    pub fn zeros(shape: NetworkShape) -> Result<Self> {
        shape.validate()?;
        let mk = |sizes: Vec<(usize, usize)>| -> Vec<Dense<T>> {
            sizes.into_iter().map(|(i, o)| Dense::zeros(i, o)).collect()
        };
        Ok(PlanningNetwork {
            obs: mk(layer_sizes(
                shape.grid_cells,
                &shape.obs_hidden,
                shape.obs_latent,
            )),
            task: mk(layer_sizes(shape.vocab, &shape.task_hidden, shape.task_latent)),
            pnet: mk(layer_sizes(shape.pnet_input(), &shape.pnet_hidden, shape.dof)),
            shape,
        })
    }

    pub(crate) fn from_parts(
        shape: NetworkShape,
        obs: Vec<Dense<T>>,
        task: Vec<Dense<T>>,
        pnet: Vec<Dense<T>>,
    ) -> Result<Self> {
        shape.validate()?;
        let check = |name: &str, layers: &[Dense<T>], sizes: Vec<(usize, usize)>| -> Result<()> {
            if layers.len() != sizes.len()
                || layers.iter().zip(&sizes).any(|(l, (i, o))| {
                    l.inputs() != *i || l.outputs() != *o || l.bias.len() != *o
                })
            {
                return Err(Error::config(
                    "network",
                    format!("{name} layers do not match the declared shape"),
                ));
            }
            Ok(())
        };
        check(
            "observation encoder",
            &obs,
            layer_sizes(shape.grid_cells, &shape.obs_hidden, shape.obs_latent),
        )?;
        check(
            "task encoder",
            &task,
            layer_sizes(shape.vocab, &shape.task_hidden, shape.task_latent),
        )?;
        check(
            "planning network",
            &pnet,
            layer_sizes(shape.pnet_input(), &shape.pnet_hidden, shape.dof),
        )?;
        Ok(PlanningNetwork {
            shape,
            obs,
            task,
            pnet,
        })
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected != actual {
            return Err(Error::DimensionMismatch { expected, actual });
        }
        Ok(())
    }

    /// Runs both encoders (deterministic, no dropout).
    pub fn encode(&self, grid: &[T], task: &[T]) -> Result<Encoding<T>> {
        Self::check_len(self.shape.grid_cells, grid.len())?;
        Self::check_len(self.shape.vocab, task.len())?;
        Ok(Encoding {
            obs: run_stack(&self.obs, grid, Activation::Relu, None, None),
            task: run_stack(&self.task, task, Activation::Relu, None, None),
        })
    }

    fn pnet_input(enc: &Encoding<T>, current: &[T], goal: &[T]) -> Vec<T> {
        let mut x = Vec::with_capacity(enc.task.len() + enc.obs.len() + 2 * current.len());
        x.extend_from_slice(&enc.task);
        x.extend_from_slice(&enc.obs);
        x.extend_from_slice(current);
        x.extend_from_slice(goal);
        x
    }

    /// Next normalized configuration from cached encodings.
    pub fn step(
        &self,
        enc: &Encoding<T>,
        current: &[T],
        goal: &[T],
        mut mode: DropoutMode<'_>,
    ) -> Result<Vec<T>> {
        Self::check_len(self.shape.dof, current.len())?;
        Self::check_len(self.shape.dof, goal.len())?;
        Self::check_len(self.shape.obs_latent, enc.obs.len())?;
        Self::check_len(self.shape.task_latent, enc.task.len())?;
        let x = Self::pnet_input(enc, current, goal);
        Ok(run_stack(
            &self.pnet,
            &x,
            Activation::Tanh,
            Some((self.shape.dropout, &mut mode)),
            None,
        ))
    }

    /// Full forward pass: encoders followed by the planning network.
    pub fn forward(
        &self,
        grid: &[T],
        task: &[T],
        current: &[T],
        goal: &[T],
        mode: DropoutMode<'_>,
    ) -> Result<Vec<T>> {
        let enc = self.encode(grid, task)?;
        self.step(&enc, current, goal, mode)
    }

    /// Forward pass recording activations, then backprop of `grad_fn(output)`.
    /// Returns the network output.
    pub(crate) fn accumulate_gradient(
        &self,
        example: &Example<'_, T>,
        mode: &mut DropoutMode<'_>,
        grads: &mut PlanningNetwork<T>,
        grad_fn: impl FnOnce(&[T]) -> Vec<T>,
    ) -> Vec<T> {
        let mut obs_t = StackTrace::default();
        let mut task_t = StackTrace::default();
        let mut pnet_t = StackTrace::default();
        let z_o = run_stack(&self.obs, example.grid, Activation::Relu, None, Some(&mut obs_t));
        let z_c = run_stack(&self.task, example.task, Activation::Relu, None, Some(&mut task_t));
        let enc = Encoding { obs: z_o, task: z_c };
        let x = Self::pnet_input(&enc, example.current, example.goal);
        let out = run_stack(
            &self.pnet,
            &x,
            Activation::Tanh,
            Some((self.shape.dropout, mode)),
            Some(&mut pnet_t),
        );
        let g_out = grad_fn(&out);
        let g_in = backprop_stack(
            &self.pnet,
            &pnet_t,
            Activation::Tanh,
            &g_out,
            &mut grads.pnet,
            true,
        );
        let (tl, ol) = (self.shape.task_latent, self.shape.obs_latent);
        backprop_stack(
            &self.task,
            &task_t,
            Activation::Relu,
            &g_in[..tl],
            &mut grads.task,
            false,
        );
        backprop_stack(
            &self.obs,
            &obs_t,
            Activation::Relu,
            &g_in[tl..tl + ol],
            &mut grads.obs,
            false,
        );
        out
    }

    pub(crate) fn zeros_like(&self) -> PlanningNetwork<T> {
        PlanningNetwork::zeros(self.shape.clone()).expect("shape already validated")
    }

    /// Every weight and bias, encoders first.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.obs
            .iter_mut()
            .chain(self.task.iter_mut())
            .chain(self.pnet.iter_mut())
            .flat_map(Dense::params_mut)
    }

    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.obs
            .iter()
            .chain(self.task.iter())
            .chain(self.pnet.iter())
            .flat_map(Dense::params)
    }

    pub fn parameter_count(&self) -> usize {
        self.params().count()
    }

    /// Largest absolute gradient entry of each stack, in (obs, task, pnet) order.
    pub(crate) fn stack_max_abs(&self) -> [T; 3] {
        let m = |layers: &[Dense<T>]| {
            layers.iter().flat_map(Dense::params).fold(T::zero(), |m, v| m.max(v.abs()))
        };
        [m(&self.obs), m(&self.task), m(&self.pnet)]
    }
}

/// One-hot task vector over a fixed vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskOneHot {
    index: usize,
    vocab: usize,
}

impl TaskOneHot {
    pub fn new(index: usize, vocab: usize) -> Result<Self> {
        if index >= vocab {
            return Err(Error::config(
                "task encoding",
                format!("task index {index} outside vocabulary of {vocab}"),
            ));
        }
        Ok(TaskOneHot { index, vocab })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn to_vec<T: Real>(&self) -> Vec<T> {
        (0..self.vocab)
            .map(|i| if i == self.index { T::one() } else { T::zero() })
            .collect()
    }
}
