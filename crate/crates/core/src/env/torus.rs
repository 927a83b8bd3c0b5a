use rand::Rng;

use crate::channel::Point3;
use crate::{Error, Result};

/// Square area with periodic boundaries in x and y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Torus {
    pub side: f64,
}

impl Torus {
    pub fn wrap(&self, p: Point3) -> Point3 {
        [p[0].rem_euclid(self.side), p[1].rem_euclid(self.side), p[2]]
    }

    /// Minimum-image displacement from `from` to `to` in x and y; z is plain.
    pub fn displacement(&self, from: &Point3, to: &Point3) -> Point3 {
        let d = |a: f64, b: f64| {
            let x = b - a;
            x - self.side * (x / self.side).round()
        };
        [d(from[0], to[0]), d(from[1], to[1]), to[2] - from[2]]
    }

    pub fn distance(&self, a: &Point3, b: &Point3) -> f64 {
        let d = self.displacement(a, b);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn horizontal_distance(&self, a: &Point3, b: &Point3) -> f64 {
        let d = self.displacement(a, b);
        d[0].hypot(d[1])
    }

    pub fn uniform_point<R: Rng + ?Sized>(&self, rng: &mut R, z: f64) -> Point3 {
        [rng.random::<f64>() * self.side, rng.random::<f64>() * self.side, z]
    }

    /// `count` points at height `z` with pairwise horizontal wrap-around
    /// distance at least `min_spacing`, by rejection sampling.
    pub fn place_spaced<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        count: usize,
        min_spacing: f64,
        z: f64,
        max_tries: usize,
    ) -> Result<Vec<Point3>> {
        let mut points: Vec<Point3> = Vec::with_capacity(count);
        let mut tries = 0;
        while points.len() < count {
            if tries >= max_tries {
                return Err(Error::Placement {
                    tries,
                    reason: format!(
                        "placed {} of {count} points with spacing {min_spacing} m in a {} m square",
                        points.len(),
                        self.side
                    ),
                });
            }
            tries += 1;
            let p = self.uniform_point(rng, z);
            if points.iter().all(|q| self.horizontal_distance(q, &p) >= min_spacing) {
                points.push(p);
            }
        }
        Ok(points)
    }
}
