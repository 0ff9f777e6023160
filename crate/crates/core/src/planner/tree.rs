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

use super::{PlannerParams, Problem};
use crate::error::Result;
use crate::kinematics::Configuration;
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeSide {
    Start,
    Goal,
}

/// Append-only search tree; every node except the root records its parent.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanTree<T> {
    nodes: Vec<Configuration<T>>,
    parents: Vec<Option<usize>>,
    side: TreeSide,
}

impl<T: Real> PlanTree<T> {
    pub fn new(root: Configuration<T>, side: TreeSide) -> Self {
        PlanTree {
            nodes: vec![root],
            parents: vec![None],
            side,
        }
    }

    pub fn side(&self) -> TreeSide {
        self.side
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &Configuration<T> {
        &self.nodes[i]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parents[i]
    }

    pub fn nodes(&self) -> &[Configuration<T>] {
        &self.nodes
    }

    /// Appends `c` below `parent` and returns its index.
    pub fn push(&mut self, c: Configuration<T>, parent: usize) -> usize {
        assert!(parent < self.nodes.len(), "parent index out of range");
        self.nodes.push(c);
        self.parents.push(Some(parent));
        self.nodes.len() - 1
    }

    /// Index of the node closest to `c` in Euclidean joint distance; ties go to the lowest index.
    pub fn nearest(&self, c: &Configuration<T>) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, n) in self.nodes.iter().enumerate() {
            let d: T = n
                .as_slice()
                .iter()
                .zip(c.as_slice())
                .map(|(a, b)| (*a - *b) * (*a - *b))
                .sum();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Configurations from node `i` up to the root, inclusive.
    pub fn branch(&self, mut i: usize) -> Vec<Configuration<T>> {
        let mut out = vec![self.nodes[i].clone()];
        while let Some(p) = self.parents[i] {
            out.push(self.nodes[p].clone());
            i = p;
        }
        out
    }

    /// Re-checks every edge against the constrained-edge contract.
    /// Returns a description of the first broken edge.
    pub fn audit(&self, problem: &Problem<'_, T>, params: &PlannerParams) -> Result<Option<String>> {
        let eps = problem.spec.epsilon();
        let max_step = T::lit(params.max_step);
        for (i, n) in self.nodes.iter().enumerate() {
            if problem.spec.error(problem.chain, n)?.norm >= eps {
                return Ok(Some(format!("node {i} violates the constraint")));
            }
            let Some(p) = self.parents[i] else {
                if i != 0 {
                    return Ok(Some(format!("node {i} has no parent")));
                }
                continue;
            };
            if p >= i {
                return Ok(Some(format!("node {i} has parent {p} with a larger index")));
            }
            if !problem.edge_ok(&self.nodes[p], n, max_step)? {
                return Ok(Some(format!("edge {p} -> {i} breaks the edge contract")));
            }
        }
        Ok(None)
    }
}
