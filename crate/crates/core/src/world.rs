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

//! Planar workspace: obstacles, collision queries and occupancy rasterization.

use crate::error::{Error, Result};
use crate::geometry::{Circle, Point2, Rect, Segment};
use crate::kinematics::{Configuration, KinematicChain};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Joint-space interpolation resolution (max-norm, radians) of motion checks.
pub const MOTION_RESOLUTION: f64 = 0.01;
/// Side length of the default occupancy grid.
pub const DEFAULT_GRID_SIDE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "type", rename_all = "snake_case")]
pub enum Obstacle<T> {
    Rect { min: Point2<T>, max: Point2<T> },
    Circle { center: Point2<T>, radius: T },
}

impl<T: Real> Obstacle<T> {
    pub fn rect(x0: T, y0: T, x1: T, y1: T) -> Self {
        Obstacle::Rect {
            min: Point2::new(x0, y0),
            max: Point2::new(x1, y1),
        }
    }

    pub fn circle(cx: T, cy: T, radius: T) -> Self {
        Obstacle::Circle {
            center: Point2::new(cx, cy),
            radius,
        }
    }

    pub fn contains(&self, p: &Point2<T>) -> bool {
        match *self {
            Obstacle::Rect { min, max } => Rect::new(min, max).contains(p),
            Obstacle::Circle { center, radius } => Circle::new(center, radius).contains(p),
        }
    }

    /// Does the segment touch the obstacle itself (no clearance)?
    pub fn touches(&self, s: &Segment<T>) -> bool {
        match *self {
            Obstacle::Rect { min, max } => Rect::new(min, max).intersects_segment(s),
            Obstacle::Circle { center, radius } => s.distance_to_point(&center) <= radius,
        }
    }

    pub fn distance_to_segment(&self, s: &Segment<T>) -> T {
        match *self {
            Obstacle::Rect { min, max } => Rect::new(min, max).distance_to_segment(s),
            Obstacle::Circle { center, radius } => Circle::new(center, radius).distance_to_segment(s),
        }
    }

    fn bounding_box(&self) -> (Point2<T>, Point2<T>) {
        match *self {
            Obstacle::Rect { min, max } => (min, max),
            Obstacle::Circle { center, radius } => (
                Point2::new(center.x - radius, center.y - radius),
                Point2::new(center.x + radius, center.y + radius),
            ),
        }
    }
}

/// Obstacles in a bounded planar workspace.
///
/// `clearance` inflates every obstacle for the planner's collision queries:
/// a link collides when it comes closer than `clearance`. Zero means exact
/// contact tests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", try_from = "WorldDef<T>", into = "WorldDef<T>")]
pub struct World<T> {
    obstacles: Vec<Obstacle<T>>,
    bounds: Rect<T>,
    clearance: T,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct WorldDef<T> {
    obstacles: Vec<Obstacle<T>>,
    bounds: Rect<T>,
    #[serde(default)]
    clearance: T,
}

impl<T: Real> TryFrom<WorldDef<T>> for World<T> {
    type Error = Error;
    fn try_from(d: WorldDef<T>) -> Result<Self> {
        World::new(d.bounds, d.obstacles)?.with_clearance(d.clearance)
    }
}

impl<T: Real> From<World<T>> for WorldDef<T> {
    fn from(w: World<T>) -> Self {
        WorldDef {
            obstacles: w.obstacles,
            bounds: w.bounds,
            clearance: w.clearance,
        }
    }
}

impl<T: Real> World<T> {
    pub fn new(bounds: Rect<T>, obstacles: Vec<Obstacle<T>>) -> Result<Self> {
        if !(bounds.min.x < bounds.max.x && bounds.min.y < bounds.max.y) {
            return Err(Error::InvalidWorld("empty workspace bounds".into()));
        }
        for (i, o) in obstacles.iter().enumerate() {
            match *o {
                Obstacle::Rect { min, max } if !(min.x < max.x && min.y < max.y) => {
                    return Err(Error::InvalidWorld(format!("rectangle {i} is degenerate")));
                }
                Obstacle::Circle { radius, .. } if !(radius > T::zero()) => {
                    return Err(Error::InvalidWorld(format!("circle {i} has radius <= 0")));
                }
                _ => {}
            }
            let (lo, hi) = o.bounding_box();
            if lo.x < bounds.min.x || lo.y < bounds.min.y || hi.x > bounds.max.x || hi.y > bounds.max.y
            {
                return Err(Error::InvalidWorld(format!("obstacle {i} leaves the workspace")));
            }
        }
        Ok(World {
            obstacles,
            bounds,
            clearance: T::zero(),
        })
    }

    /// Square workspace `[-half, half]^2` without obstacles.
    pub fn empty(half: T) -> Self {
        World::new(
            Rect::new(Point2::new(-half, -half), Point2::new(half, half)),
            Vec::new(),
        )
        .expect("square workspace")
    }

    pub fn with_clearance(mut self, clearance: T) -> Result<Self> {
        if !(clearance >= T::zero()) {
            return Err(Error::InvalidWorld("clearance must be >= 0".into()));
        }
        self.clearance = clearance;
        Ok(self)
    }

    pub fn obstacles(&self) -> &[Obstacle<T>] {
        &self.obstacles
    }

    pub fn bounds(&self) -> Rect<T> {
        self.bounds
    }

    pub fn clearance(&self) -> T {
        self.clearance
    }

    fn segment_blocked(&self, s: &Segment<T>) -> bool {
        if self.clearance > T::zero() {
            self.obstacles
                .iter()
                .any(|o| o.distance_to_segment(s) < self.clearance)
        } else {
            self.obstacles.iter().any(|o| o.touches(s))
        }
    }

    /// True when any link segment comes within the clearance of any obstacle.
    pub fn config_in_collision(
        &self,
        chain: &KinematicChain<T>,
        c: &Configuration<T>,
    ) -> Result<bool> {
        if self.obstacles.is_empty() {
            chain.check_dimension(c)?;
            return Ok(false);
        }
        Ok(chain
            .link_segments(c)?
            .iter()
            .any(|s| self.segment_blocked(s)))
    }

    /// Exact contact test against the obstacles themselves, ignoring clearance.
    pub fn segments_touch_obstacles(&self, segments: &[Segment<T>]) -> bool {
        segments
            .iter()
            .any(|s| self.obstacles.iter().any(|o| o.touches(s)))
    }

    /// Checks the straight joint-space motion `a -> b` at the default resolution.
    pub fn motion_collision_free(
        &self,
        chain: &KinematicChain<T>,
        a: &Configuration<T>,
        b: &Configuration<T>,
    ) -> Result<bool> {
        self.motion_collision_free_at(chain, a, b, T::lit(MOTION_RESOLUTION))
    }

    /// Checks every interpolated configuration `(a (n - k) + b k) / n`, `k = 0..=n`,
    /// with `n` chosen so consecutive samples are at most `resolution` apart in max-norm.
    pub fn motion_collision_free_at(
        &self,
        chain: &KinematicChain<T>,
        a: &Configuration<T>,
        b: &Configuration<T>,
        resolution: T,
    ) -> Result<bool> {
        chain.check_dimension(a)?;
        chain.check_dimension(b)?;
        if self.obstacles.is_empty() {
            return Ok(true);
        }
        let n = interpolation_count(a.max_distance(b), resolution);
        for k in 0..=n {
            let q = interpolate(a, b, k, n);
            if self.config_in_collision(chain, &q)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn rasterize(&self, side: usize) -> OccupancyGrid<T> {
        let w = (self.bounds.max.x - self.bounds.min.x) / T::from_count(side);
        let h = (self.bounds.max.y - self.bounds.min.y) / T::from_count(side);
        let half = T::lit(0.5);
        let mut cells = vec![0u8; side * side];
        for row in 0..side {
            let cy = self.bounds.max.y - (T::from_count(row) + half) * h;
            for col in 0..side {
                let cx = self.bounds.min.x + (T::from_count(col) + half) * w;
                let p = Point2::new(cx, cy);
                if self.obstacles.iter().any(|o| o.contains(&p)) {
                    cells[row * side + col] = 1;
                }
            }
        }
        OccupancyGrid {
            side,
            bounds: self.bounds,
            cells,
        }
    }
}

/// Number of interpolation intervals so that each is at most `resolution` long.
pub(crate) fn interpolation_count<T: Real>(span: T, resolution: T) -> usize {
    if span <= T::zero() {
        return 0;
    }
    (span / resolution).ceil().to_usize().unwrap_or(usize::MAX).max(1)
}

/// Sample `k` of `n` on the segment `a -> b`, written so that swapping the
/// endpoints (and `k <-> n - k`) yields bit-identical samples.
pub(crate) fn interpolate<T: Real>(
    a: &Configuration<T>,
    b: &Configuration<T>,
    k: usize,
    n: usize,
) -> Configuration<T> {
    if n == 0 {
        return a.clone();
    }
    let wa = T::from_count(n - k);
    let wb = T::from_count(k);
    let nn = T::from_count(n);
    Configuration::from_vec(
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (*x * wa + *y * wb) / nn)
            .collect(),
    )
}

/// Clearance that makes sampled motion checks at `resolution` sound for the
/// exact obstacles: between two samples no point of the chain moves farther
/// than half of `resolution * sum_j reach(j)` from its nearest sample.
pub fn swept_clearance<T: Real>(chain: &KinematicChain<T>, resolution: T) -> T {
    let lever: T = (0..chain.dof()).map(|j| chain.reach_from_joint(j)).sum();
    T::lit(0.5) * resolution * lever * T::lit(1.05)
}

/// Binary occupancy of a `side x side` grid laid over the workspace bounds.
///
/// Cells are stored row-major with row 0 at the top (largest y) and column 0
/// at the left (smallest x). A cell is occupied iff its center lies in an obstacle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OccupancyGrid<T> {
    pub side: usize,
    pub bounds: Rect<T>,
    pub cells: Vec<u8>,
}

impl<T: Real> OccupancyGrid<T> {
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.side + col] != 0
    }

    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| **c != 0).count()
    }

    /// Flat row-major 0/1 vector, the network's observation input.
    pub fn to_input(&self) -> Vec<T> {
        self.cells
            .iter()
            .map(|c| if *c != 0 { T::one() } else { T::zero() })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cfg(v: &[f64]) -> Configuration<f64> {
        Configuration::from_vec(v.to_vec())
    }

    fn two_link() -> KinematicChain<f64> {
        KinematicChain::uniform(vec![1.0, 1.0], PI).unwrap()
    }

    fn bounds() -> Rect<f64> {
        Rect::new(Point2::new(-3.0, -3.0), Point2::new(3.0, 3.0))
    }

    #[test]
    fn empty_world_never_collides() {
        let w = World::empty(3.0);
        let chain = two_link();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let q = chain.sample_uniform(&mut rng);
            assert!(!w.config_in_collision(&chain, &q).unwrap());
        }
    }

    #[test]
    fn covering_obstacle_always_collides() {
        let w = World::new(bounds(), vec![Obstacle::rect(-3.0, -3.0, 3.0, 3.0)]).unwrap();
        let chain = two_link();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert!(w
                .config_in_collision(&chain, &chain.sample_uniform(&mut rng))
                .unwrap());
        }
    }

    #[test]
    fn circle_on_link_collides() {
        let w = World::new(bounds(), vec![Obstacle::circle(1.5, 0.0, 0.2)]).unwrap();
        assert!(w.config_in_collision(&two_link(), &cfg(&[0.0, 0.0])).unwrap());
        assert!(!w.config_in_collision(&two_link(), &cfg(&[PI / 2.0, 0.0])).unwrap());
    }

    #[test]
    fn clearance_inflates_obstacles() {
        let w = World::new(bounds(), vec![Obstacle::circle(1.5, 0.5, 0.2)]).unwrap();
        let chain = two_link();
        assert!(!w.config_in_collision(&chain, &cfg(&[0.0, 0.0])).unwrap());
        let w = w.with_clearance(0.31).unwrap();
        assert!(w.config_in_collision(&chain, &cfg(&[0.0, 0.0])).unwrap());
    }

    #[test]
    fn invalid_worlds_rejected() {
        assert!(World::new(bounds(), vec![Obstacle::rect(0.0, 0.0, 0.0, 1.0)]).is_err());
        assert!(World::new(bounds(), vec![Obstacle::circle(0.0, 0.0, 0.0)]).is_err());
        assert!(World::new(bounds(), vec![Obstacle::circle(2.9, 0.0, 0.5)]).is_err());
        assert!(World::<f64>::empty(1.0).with_clearance(-1.0).is_err());
    }

    #[test]
    fn motion_checks() {
        let chain = two_link();
        let w = World::new(bounds(), vec![Obstacle::circle(0.0, 1.5, 0.2)]).unwrap();
        let a = cfg(&[0.0, 0.0]);
        assert!(w.motion_collision_free(&chain, &a, &a).unwrap());
        let inside = cfg(&[PI / 2.0, 0.0]);
        assert!(!w.motion_collision_free(&chain, &inside, &a).unwrap());
        // sweep from +x through +y to -x crosses the circle mid-way
        let b = cfg(&[PI, 0.0]);
        assert!(!w.config_in_collision(&chain, &b).unwrap());
        assert!(!w.motion_collision_free(&chain, &a, &b).unwrap());
        // dense oracle agrees
        let n = 31_416;
        assert!((0..=n).any(|k| w
            .config_in_collision(&chain, &interpolate(&a, &b, k, n))
            .unwrap()));
    }

    #[test]
    fn rasterize_examples() {
        let empty = World::<f64>::empty(3.0).rasterize(32);
        assert_eq!(empty.cells.len(), 1024);
        assert_eq!(empty.occupied(), 0);

        let full = World::new(bounds(), vec![Obstacle::rect(-3.0, -3.0, 3.0, 3.0)])
            .unwrap()
            .rasterize(32);
        assert_eq!(full.occupied(), 1024);

        let upper = World::new(bounds(), vec![Obstacle::rect(-3.0, 0.0, 3.0, 3.0)])
            .unwrap()
            .rasterize(32);
        for row in 0..32 {
            for col in 0..32 {
                assert_eq!(upper.get(row, col), row < 16, "row {row} col {col}");
            }
        }
        assert_eq!(upper.to_input().iter().sum::<f64>(), 512.0);
    }

    #[test]
    fn swept_clearance_certifies_dense_checks() {
        let chain = KinematicChain::uniform(vec![0.5, 0.5, 0.5, 0.5], 2.8).unwrap();
        let clearance = swept_clearance(&chain, MOTION_RESOLUTION);
        let w = World::new(
            bounds(),
            vec![
                Obstacle::rect(0.9, 0.2, 1.3, 0.9),
                Obstacle::circle(-1.0, -0.6, 0.25),
                Obstacle::rect(-0.4, 1.2, 0.3, 1.5),
            ],
        )
        .unwrap()
        .with_clearance(clearance)
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut accepted = 0;
        for _ in 0..400 {
            let a = chain.sample_uniform(&mut rng);
            let b = chain.sample_uniform(&mut rng);
            let b = a.lerp(&b, 0.3);
            if w.motion_collision_free(&chain, &a, &b).unwrap() {
                accepted += 1;
                let n = interpolation_count(a.max_distance(&b), 1e-3);
                for k in 0..=n {
                    let q = interpolate(&a, &b, k, n);
                    assert!(!w.segments_touch_obstacles(&chain.link_segments(&q).unwrap()));
                }
            }
        }
        assert!(accepted > 20);
    }

    proptest! {
        #[test]
        fn motion_check_symmetric(seed in 0u64..5000) {
            let chain = two_link();
            let w = World::new(bounds(), vec![
                Obstacle::circle(0.3, 1.2, 0.3),
                Obstacle::rect(-1.6, -0.4, -1.2, 0.6),
            ]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = chain.sample_uniform(&mut rng);
            let b = chain.sample_uniform(&mut rng);
            prop_assert_eq!(
                w.motion_collision_free(&chain, &a, &b).unwrap(),
                w.motion_collision_free(&chain, &b, &a).unwrap()
            );
        }

        #[test]
        fn refinement_never_clears_a_collision(seed in 0u64..5000) {
            let chain = two_link();
            let w = World::new(bounds(), vec![
                Obstacle::circle(0.3, 1.2, 0.1),
                Obstacle::rect(-1.6, -0.4, -1.5, 0.6),
            ]).unwrap().with_clearance(0.01).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = chain.sample_uniform(&mut rng);
            let b = chain.sample_uniform(&mut rng);
            let coarse = w.motion_collision_free_at(&chain, &a, &b, 0.01).unwrap();
            let fine = w.motion_collision_free_at(&chain, &a, &b, 0.005).unwrap();
            prop_assert!(coarse || !fine);
        }
    }
}
