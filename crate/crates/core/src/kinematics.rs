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

//! Planar serial chains of revolute joints.
//!
//! Joint `i` rotates link `i` relative to link `i - 1`; the base pose places
//! the root of the chain in the workspace. Angles are kept unwrapped inside
//! their joint limits so that the joint-space metric stays Euclidean.

use crate::error::{Error, Result};
use crate::geometry::{Point2, Segment};
use crate::linalg::Matrix;
use crate::scalar::{wrap_angle, Real};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// End-effector (or reference) pose in the plane. `theta` lies in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TaskPose<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> TaskPose<T> {
    /// Builds a pose, normalizing the angle.
    pub fn new(x: T, y: T, theta: T) -> Self {
        TaskPose {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub fn origin() -> Self {
        TaskPose::new(T::zero(), T::zero(), T::zero())
    }
}

/// Lower and upper bound of a revolute joint, in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct JointLimit<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> JointLimit<T> {
    pub fn new(lo: T, hi: T) -> Self {
        JointLimit { lo, hi }
    }

    pub fn span(&self) -> T {
        self.hi - self.lo
    }

    pub fn mid(&self) -> T {
        (self.lo + self.hi) / T::lit(2.0)
    }

    pub fn clamp(&self, v: T) -> T {
        v.max(self.lo).min(self.hi)
    }

    pub fn contains(&self, v: T) -> bool {
        v >= self.lo && v <= self.hi
    }
}

/// Joint-angle vector.
///
/// A configuration only carries values; validity against a particular chain is
/// established through [`KinematicChain::configuration`] or
/// [`KinematicChain::clamp`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent, bound = "T: Real")]
pub struct Configuration<T>(Vec<T>);

impl<T: Real> Configuration<T> {
    /// Wraps a raw vector without checking it against any chain.
    pub fn from_vec(joints: Vec<T>) -> Self {
        Configuration(joints)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &Configuration<T>) -> T {
        crate::scalar::l2_distance(&self.0, &other.0)
    }

    pub fn max_distance(&self, other: &Configuration<T>) -> T {
        crate::scalar::max_distance(&self.0, &other.0)
    }

    /// `self + t (other - self)`, without clamping.
    pub fn lerp(&self, other: &Configuration<T>, t: T) -> Configuration<T> {
        Configuration(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a + t * (*b - *a))
                .collect(),
        )
    }
}

impl<T> std::ops::Index<usize> for Configuration<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Planar serial manipulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "ChainDef<T>", into = "ChainDef<T>")]
pub struct KinematicChain<T> {
    link_lengths: Vec<T>,
    joint_limits: Vec<JointLimit<T>>,
    base_pose: TaskPose<T>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ChainDef<T> {
    link_lengths: Vec<T>,
    joint_limits: Vec<JointLimit<T>>,
    base_pose: TaskPose<T>,
}

impl<T: Real> TryFrom<ChainDef<T>> for KinematicChain<T> {
    type Error = Error;
    fn try_from(d: ChainDef<T>) -> Result<Self> {
        KinematicChain::new(d.link_lengths, d.joint_limits, d.base_pose)
    }
}

impl<T: Real> From<KinematicChain<T>> for ChainDef<T> {
    fn from(c: KinematicChain<T>) -> Self {
        ChainDef {
            link_lengths: c.link_lengths,
            joint_limits: c.joint_limits,
            base_pose: c.base_pose,
        }
    }
}

impl<T: Real> KinematicChain<T> {
    pub fn new(
        link_lengths: Vec<T>,
        joint_limits: Vec<JointLimit<T>>,
        base_pose: TaskPose<T>,
    ) -> Result<Self> {
        if link_lengths.is_empty() {
            return Err(Error::InvalidChain("at least one link is required".into()));
        }
        if link_lengths.len() != joint_limits.len() {
            return Err(Error::InvalidChain(format!(
                "{} links but {} joint limits",
                link_lengths.len(),
                joint_limits.len()
            )));
        }
        if let Some(i) = link_lengths.iter().position(|l| !(*l > T::zero())) {
            return Err(Error::InvalidChain(format!("link {i} has non-positive length")));
        }
        let two_pi = T::PI() + T::PI();
        for (i, lim) in joint_limits.iter().enumerate() {
            if !(lim.lo < lim.hi) || lim.span() > two_pi {
                return Err(Error::InvalidChain(format!(
                    "joint {i} limits [{}, {}] must satisfy lo < hi and hi - lo <= 2pi",
                    lim.lo, lim.hi
                )));
            }
        }
        Ok(KinematicChain {
            link_lengths,
            joint_limits,
            base_pose: TaskPose::new(base_pose.x, base_pose.y, base_pose.theta),
        })
    }

    /// Chain rooted at the origin with identical symmetric limits on every joint.
    pub fn uniform(link_lengths: Vec<T>, limit: T) -> Result<Self> {
        let limits = vec![JointLimit::new(-limit, limit); link_lengths.len()];
        Self::new(link_lengths, limits, TaskPose::origin())
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[T] {
        &self.link_lengths
    }

    pub fn joint_limits(&self) -> &[JointLimit<T>] {
        &self.joint_limits
    }

    pub fn base_pose(&self) -> TaskPose<T> {
        self.base_pose
    }

    pub fn total_length(&self) -> T {
        self.link_lengths.iter().copied().sum()
    }

    /// Summed lengths of links `j..`, i.e. the lever arm of joint `j` at full extension.
    pub fn reach_from_joint(&self, j: usize) -> T {
        self.link_lengths[j..].iter().copied().sum()
    }

    pub fn check_dimension(&self, c: &Configuration<T>) -> Result<()> {
        if c.dof() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                actual: c.dof(),
            });
        }
        Ok(())
    }

    pub fn within_limits(&self, c: &Configuration<T>) -> bool {
        c.dof() == self.dof()
            && c
                .as_slice()
                .iter()
                .zip(&self.joint_limits)
                .all(|(v, l)| l.contains(*v))
    }

    /// Validated constructor: the vector must have the chain's dimension and lie in the limits.
    pub fn configuration(&self, joints: Vec<T>) -> Result<Configuration<T>> {
        let c = Configuration::from_vec(joints);
        self.check_dimension(&c)?;
        if let Some(i) = c
            .as_slice()
            .iter()
            .zip(&self.joint_limits)
            .position(|(v, l)| !l.contains(*v))
        {
            return Err(Error::InvalidConfiguration(format!(
                "joint {i} value {} outside [{}, {}]",
                c[i], self.joint_limits[i].lo, self.joint_limits[i].hi
            )));
        }
        Ok(c)
    }

    /// Clamps every component into its joint limits. Panics on a dimension mismatch.
    pub fn clamp(&self, joints: &[T]) -> Configuration<T> {
        assert_eq!(joints.len(), self.dof(), "dimension mismatch in clamp");
        Configuration::from_vec(
            joints
                .iter()
                .zip(&self.joint_limits)
                .map(|(v, l)| l.clamp(*v))
                .collect(),
        )
    }

    pub fn midpoint(&self) -> Configuration<T> {
        Configuration::from_vec(self.joint_limits.iter().map(JointLimit::mid).collect())
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration<T> {
        Configuration::from_vec(
            self.joint_limits
                .iter()
                .map(|l| rng.gen_range(l.lo..=l.hi))
                .collect(),
        )
    }

    /// Joint positions from the base to the end effector (d + 1 points) and the
    /// absolute orientation of every link.
    fn chain_points(&self, q: &[T]) -> (Vec<Point2<T>>, Vec<T>) {
        let mut pts = Vec::with_capacity(q.len() + 1);
        let mut angles = Vec::with_capacity(q.len());
        let mut p = Point2::new(self.base_pose.x, self.base_pose.y);
        let mut th = self.base_pose.theta;
        pts.push(p);
        for (len, qi) in self.link_lengths.iter().zip(q) {
            th = th + *qi;
            p = Point2::new(p.x + *len * th.cos(), p.y + *len * th.sin());
            pts.push(p);
            angles.push(th);
        }
        (pts, angles)
    }

    pub fn forward_kinematics(&self, c: &Configuration<T>) -> Result<TaskPose<T>> {
        self.check_dimension(c)?;
        let (pts, angles) = self.chain_points(c.as_slice());
        let ee = pts[pts.len() - 1];
        Ok(TaskPose::new(ee.x, ee.y, angles[angles.len() - 1]))
    }

    /// Analytic 3 x d Jacobian of (x, y, theta) with respect to the joints.
    pub fn jacobian(&self, c: &Configuration<T>) -> Result<Matrix<T>> {
        self.check_dimension(c)?;
        let (pts, _) = self.chain_points(c.as_slice());
        let ee = pts[pts.len() - 1];
        let d = self.dof();
        let mut j = Matrix::zeros(3, d);
        for (i, p) in pts.iter().take(d).enumerate() {
            j.set(0, i, -(ee.y - p.y));
            j.set(1, i, ee.x - p.x);
            j.set(2, i, T::one());
        }
        Ok(j)
    }

    /// Link segments joined end-to-end from the base.
    pub fn link_segments(&self, c: &Configuration<T>) -> Result<Vec<Segment<T>>> {
        self.check_dimension(c)?;
        let (pts, _) = self.chain_points(c.as_slice());
        Ok(pts.windows(2).map(|w| Segment::new(w[0], w[1])).collect())
    }
}
