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

//! 2D primitives and distance queries between link segments and obstacles.

use crate::scalar::Real;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Point2<T>) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Segment<T> {
    pub a: Point2<T>,
    pub b: Point2<T>,
}

impl<T: Real> Segment<T> {
    pub fn new(a: Point2<T>, b: Point2<T>) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> T {
        self.a.distance(&self.b)
    }

    /// Closest distance from `p` to any point of the segment.
    pub fn distance_to_point(&self, p: &Point2<T>) -> T {
        let dx = self.b.x - self.a.x;
        let dy = self.b.y - self.a.y;
        let len2 = dx * dx + dy * dy;
        let t = if len2 > T::zero() {
            (((p.x - self.a.x) * dx + (p.y - self.a.y) * dy) / len2)
                .max(T::zero())
                .min(T::one())
        } else {
            T::zero()
        };
        let cx = self.a.x + t * dx;
        let cy = self.a.y + t * dy;
        (p.x - cx).hypot(p.y - cy)
    }
}

/// Axis-aligned rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Rect<T> {
    pub min: Point2<T>,
    pub max: Point2<T>,
}

impl<T: Real> Rect<T> {
    pub fn new(min: Point2<T>, max: Point2<T>) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: &Point2<T>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn distance_to_point(&self, p: &Point2<T>) -> T {
        let dx = (self.min.x - p.x).max(p.x - self.max.x).max(T::zero());
        let dy = (self.min.y - p.y).max(p.y - self.max.y).max(T::zero());
        dx.hypot(dy)
    }

    /// Liang-Barsky clip: does the closed segment touch the closed rectangle?
    pub fn intersects_segment(&self, s: &Segment<T>) -> bool {
        let dx = s.b.x - s.a.x;
        let dy = s.b.y - s.a.y;
        let mut t0 = T::zero();
        let mut t1 = T::one();
        let checks = [
            (-dx, s.a.x - self.min.x),
            (dx, self.max.x - s.a.x),
            (-dy, s.a.y - self.min.y),
            (dy, self.max.y - s.a.y),
        ];
        for (p, q) in checks {
            if p == T::zero() {
                if q < T::zero() {
                    return false;
                }
            } else {
                let r = q / p;
                if p < T::zero() {
                    t0 = t0.max(r);
                } else {
                    t1 = t1.min(r);
                }
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }

    pub fn distance_to_segment(&self, s: &Segment<T>) -> T {
        if self.intersects_segment(s) {
            return T::zero();
        }
        let corners = [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ];
        let from_ends = self
            .distance_to_point(&s.a)
            .min(self.distance_to_point(&s.b));
        corners
            .iter()
            .fold(from_ends, |m, c| m.min(s.distance_to_point(c)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Circle<T> {
    pub center: Point2<T>,
    pub radius: T,
}

impl<T: Real> Circle<T> {
    pub fn new(center: Point2<T>, radius: T) -> Self {
        Circle { center, radius }
    }

    pub fn contains(&self, p: &Point2<T>) -> bool {
        self.center.distance(p) <= self.radius
    }

    pub fn distance_to_segment(&self, s: &Segment<T>) -> T {
        (s.distance_to_point(&self.center) - self.radius).max(T::zero())
    }
}
