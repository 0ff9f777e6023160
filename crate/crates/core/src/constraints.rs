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

//! Task-space-region style constraints and the projection operator.
//!
//! A constraint is a set of intervals on the displacement of the end effector
//! from a reference pose, measured in the reference frame:
//!
//! ```text
//! dx = cos(t_r) (x - x_r) + sin(t_r) (y - y_r)
//! dy = -sin(t_r) (x - x_r) + cos(t_r) (y - y_r)
//! dt = wrap(t - t_r)
//! ```
//!
//! Each active coordinate contributes `d - hi` above its interval, `d - lo`
//! below it and zero inside. The constraint manifold is the set of
//! configurations where every contribution vanishes.

use crate::error::{Error, Result};
use crate::kinematics::{Configuration, KinematicChain, TaskPose};
use crate::linalg::{damped_pinv_apply, Matrix};
use crate::scalar::{wrap_angle, Real};
use serde::{Deserialize, Serialize};

/// Default task-space tolerance on the constraint norm.
pub const DEFAULT_EPSILON: f64 = 1e-4;
/// Diagonal damping added to `J J^T` by the projection step.
pub const PROJECTION_DAMPING: f64 = 1e-8;
/// Default iteration budget of [`ConstraintSpec::project`].
pub const DEFAULT_PROJECTION_ITERS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Unconstrained (reach) planning; `F` is identically zero.
    None,
    /// Bounds on end-effector orientation only.
    OrientationBand,
    /// End effector kept on a segment of the reference x-axis.
    PositionLine,
    /// Bounds on all three task coordinates.
    PoseRegion,
}

impl ConstraintKind {
    /// Task coordinates constrained by this kind, in canonical order.
    pub fn coords(self) -> &'static [TaskCoord] {
        match self {
            ConstraintKind::None => &[],
            ConstraintKind::OrientationBand => &[TaskCoord::Theta],
            ConstraintKind::PositionLine => &[TaskCoord::X, TaskCoord::Y],
            ConstraintKind::PoseRegion => &[TaskCoord::X, TaskCoord::Y, TaskCoord::Theta],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskCoord {
    X,
    Y,
    Theta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CoordBound<T> {
    pub coord: TaskCoord,
    pub lo: T,
    pub hi: T,
}

impl<T: Real> CoordBound<T> {
    pub fn new(coord: TaskCoord, lo: T, hi: T) -> Self {
        CoordBound { coord, lo, hi }
    }

    /// Distance outside the interval, signed; zero inside.
    fn excess(&self, d: T) -> T {
        if d > self.hi {
            d - self.hi
        } else if d < self.lo {
            d - self.lo
        } else {
            T::zero()
        }
    }
}

/// A constraint `F(c)` with `k = bounds.len()` active task coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "SpecDef<T>", into = "SpecDef<T>")]
pub struct ConstraintSpec<T> {
    kind: ConstraintKind,
    reference: TaskPose<T>,
    bounds: Vec<CoordBound<T>>,
    epsilon: T,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct SpecDef<T> {
    kind: ConstraintKind,
    reference: TaskPose<T>,
    bounds: Vec<CoordBound<T>>,
    epsilon: T,
}

impl<T: Real> TryFrom<SpecDef<T>> for ConstraintSpec<T> {
    type Error = Error;
    fn try_from(d: SpecDef<T>) -> Result<Self> {
        ConstraintSpec::new(d.kind, d.reference, d.bounds, d.epsilon)
    }
}

impl<T: Real> From<ConstraintSpec<T>> for SpecDef<T> {
    fn from(s: ConstraintSpec<T>) -> Self {
        SpecDef {
            kind: s.kind,
            reference: s.reference,
            bounds: s.bounds,
            epsilon: s.epsilon,
        }
    }
}

/// Constraint violation `dx = F(c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementVector<T> {
    pub components: Vec<T>,
    pub norm: T,
}

/// A configuration accepted by the projection operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection<T> {
    pub config: Configuration<T>,
    /// Number of pseudo-inverse updates performed.
    pub steps: usize,
}

impl<T: Real> ConstraintSpec<T> {
    pub fn new(
        kind: ConstraintKind,
        reference: TaskPose<T>,
        bounds: Vec<CoordBound<T>>,
        epsilon: T,
    ) -> Result<Self> {
        let expected = kind.coords();
        if bounds.len() != expected.len()
            || bounds.iter().zip(expected).any(|(b, c)| b.coord != *c)
        {
            return Err(Error::InvalidConstraint(format!(
                "{kind:?} expects bounds on {expected:?}"
            )));
        }
        if let Some(b) = bounds.iter().find(|b| !(b.lo <= b.hi)) {
            return Err(Error::InvalidConstraint(format!(
                "bound on {:?} has lo {} > hi {}",
                b.coord, b.lo, b.hi
            )));
        }
        if !(epsilon > T::zero()) {
            return Err(Error::InvalidConstraint("epsilon must be positive".into()));
        }
        Ok(ConstraintSpec {
            kind,
            reference: TaskPose::new(reference.x, reference.y, reference.theta),
            bounds,
            epsilon,
        })
    }

    pub fn none() -> Self {
        ConstraintSpec {
            kind: ConstraintKind::None,
            reference: TaskPose::origin(),
            bounds: Vec::new(),
            epsilon: T::lit(DEFAULT_EPSILON),
        }
    }

    /// Orientation of the end effector held within `[theta_ref + lo, theta_ref + hi]`.
    pub fn orientation_band(theta_ref: T, lo: T, hi: T) -> Result<Self> {
        Self::new(
            ConstraintKind::OrientationBand,
            TaskPose::new(T::zero(), T::zero(), theta_ref),
            vec![CoordBound::new(TaskCoord::Theta, lo, hi)],
            T::lit(DEFAULT_EPSILON),
        )
    }

    /// End effector on the segment `reference + s * (cos t_r, sin t_r)`, `s` in `[s_lo, s_hi]`.
    pub fn position_line(reference: TaskPose<T>, s_lo: T, s_hi: T) -> Result<Self> {
        Self::new(
            ConstraintKind::PositionLine,
            reference,
            vec![
                CoordBound::new(TaskCoord::X, s_lo, s_hi),
                CoordBound::new(TaskCoord::Y, T::zero(), T::zero()),
            ],
            T::lit(DEFAULT_EPSILON),
        )
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Result<Self> {
        if !(epsilon > T::zero()) {
            return Err(Error::InvalidConstraint("epsilon must be positive".into()));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn reference(&self) -> TaskPose<T> {
        self.reference
    }

    pub fn bounds(&self) -> &[CoordBound<T>] {
        &self.bounds
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    /// Number of constrained task coordinates.
    pub fn k(&self) -> usize {
        self.bounds.len()
    }

    fn displacement(&self, pose: &TaskPose<T>, coord: TaskCoord) -> T {
        let r = &self.reference;
        let (s, c) = r.theta.sin_cos();
        let ex = pose.x - r.x;
        let ey = pose.y - r.y;
        match coord {
            TaskCoord::X => c * ex + s * ey,
            TaskCoord::Y => -s * ex + c * ey,
            TaskCoord::Theta => wrap_angle(pose.theta - r.theta),
        }
    }

    /// Task-space displacement `d_i` of every active coordinate.
    pub fn task_displacement(
        &self,
        chain: &KinematicChain<T>,
        c: &Configuration<T>,
    ) -> Result<Vec<T>> {
        if self.bounds.is_empty() {
            chain.check_dimension(c)?;
            return Ok(Vec::new());
        }
        let pose = chain.forward_kinematics(c)?;
        Ok(self
            .bounds
            .iter()
            .map(|b| self.displacement(&pose, b.coord))
            .collect())
    }

    /// `F(c)`: per-coordinate excess outside the bounds and its Euclidean norm.
    pub fn error(
        &self,
        chain: &KinematicChain<T>,
        c: &Configuration<T>,
    ) -> Result<DisplacementVector<T>> {
        let d = self.task_displacement(chain, c)?;
        let components: Vec<T> = d
            .iter()
            .zip(&self.bounds)
            .map(|(di, b)| b.excess(*di))
            .collect();
        let norm = components.iter().fold(T::zero(), |a, v| a + *v * *v).sqrt();
        Ok(DisplacementVector { components, norm })
    }

    pub fn is_satisfied(&self, chain: &KinematicChain<T>, c: &Configuration<T>) -> bool {
        self.error(chain, c)
            .map(|e| e.norm < self.epsilon)
            .unwrap_or(false)
    }

    /// k x d Jacobian of `F`. Rows of coordinates strictly inside their interval are zero.
    pub fn jacobian(&self, chain: &KinematicChain<T>, c: &Configuration<T>) -> Result<Matrix<T>> {
        let d = chain.dof();
        if self.bounds.is_empty() {
            chain.check_dimension(c)?;
            return Ok(Matrix::zeros(0, d));
        }
        let pose = chain.forward_kinematics(c)?;
        let kin = chain.jacobian(c)?;
        let (s, co) = self.reference.theta.sin_cos();
        let mut j = Matrix::zeros(self.bounds.len(), d);
        for (row, b) in self.bounds.iter().enumerate() {
            let di = self.displacement(&pose, b.coord);
            if di > b.lo && di < b.hi {
                continue;
            }
            for col in 0..d {
                let v = match b.coord {
                    TaskCoord::X => co * kin.get(0, col) + s * kin.get(1, col),
                    TaskCoord::Y => -s * kin.get(0, col) + co * kin.get(1, col),
                    TaskCoord::Theta => kin.get(2, col),
                };
                j.set(row, col, v);
            }
        }
        Ok(j)
    }

    /// Iterative pseudo-inverse projection onto the manifold.
    ///
    /// Repeats `c <- clamp(c - J^+ F(c))` until `|F(c)| < epsilon`, giving up
    /// (returning `None`) after `max_iters` updates.
    pub fn project(
        &self,
        chain: &KinematicChain<T>,
        c: &Configuration<T>,
        max_iters: usize,
    ) -> Result<Option<Projection<T>>> {
        chain.check_dimension(c)?;
        if self.bounds.is_empty() {
            return Ok(Some(Projection {
                config: c.clone(),
                steps: 0,
            }));
        }
        let damping = T::lit(PROJECTION_DAMPING);
        let mut q = c.clone();
        for step in 0..=max_iters {
            let err = self.error(chain, &q)?;
            if err.norm < self.epsilon {
                return Ok(Some(Projection { config: q, steps: step }));
            }
            if step == max_iters || !err.norm.is_finite() {
                break;
            }
            let mut j = self.jacobian(chain, &q)?;
            let mut delta = damped_pinv_apply(&j, &err.components, damping);
            // Joints already at a limit and pushed further out are frozen and the
            // step is re-solved with the remaining joints.
            for _ in 0..chain.dof() {
                let mut frozen = false;
                for (i, lim) in chain.joint_limits().iter().enumerate() {
                    let next = q[i] - delta[i];
                    let pinned = (q[i] <= lim.lo && next < lim.lo) || (q[i] >= lim.hi && next > lim.hi);
                    if pinned && (0..j.rows()).any(|r| j.get(r, i) != T::zero()) {
                        for r in 0..j.rows() {
                            j.set(r, i, T::zero());
                        }
                        frozen = true;
                    }
                }
                if !frozen {
                    break;
                }
                delta = damped_pinv_apply(&j, &err.components, damping);
            }
            if delta.iter().any(|v| !v.is_finite()) {
                break;
            }
            let next: Vec<T> = q
                .as_slice()
                .iter()
                .zip(&delta)
                .map(|(a, b)| *a - *b)
                .collect();
            q = chain.clamp(&next);
        }
        Ok(None)
    }
}
