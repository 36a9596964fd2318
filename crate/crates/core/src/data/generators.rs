//! Synthetic 2-D geometries with exact membership oracles.
//!
//! Each generator is a pure function of `(n, seed)` and every point it
//! emits satisfies the matching `inside_*` predicate.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng;

pub const STAR_OUTER_RADIUS: f64 = 1.0;
pub const STAR_INNER_RADIUS: f64 = 0.5;
pub const CLUSTER_SIGMA: f64 = 0.35;
pub const CLUSTER_CENTERS: [[f64; 2]; 3] = [[0.0, 0.0], [4.0, 0.0], [2.0, 3.5]];
/// Cluster draws are truncated at this many sigmas so membership is exact.
pub const CLUSTER_TRUNCATION: f64 = 4.0;
pub const BANANA_RADII: (f64, f64) = (2.0, 3.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Star,
    Clusters3,
    Banana,
}

impl Shape {
    pub fn min_points(self) -> usize {
        match self {
            Shape::Star | Shape::Banana => 50,
            Shape::Clusters3 => 30,
        }
    }

    pub fn generate(self, n: usize, seed: u64) -> Result<Dataset> {
        match self {
            Shape::Star => gen_star(n, seed),
            Shape::Clusters3 => gen_three_clusters(n, seed),
            Shape::Banana => gen_banana(n, seed),
        }
    }

    pub fn contains(self, p: &[f64]) -> bool {
        match self {
            Shape::Star => inside_star(p),
            Shape::Clusters3 => inside_three_clusters(p),
            Shape::Banana => inside_banana(p),
        }
    }

    /// Axis-aligned box enclosing the region: `(xlo, xhi, ylo, yhi)`.
    pub fn bounding_box(self) -> (f64, f64, f64, f64) {
        match self {
            Shape::Star => (
                -STAR_OUTER_RADIUS,
                STAR_OUTER_RADIUS,
                -STAR_OUTER_RADIUS,
                STAR_OUTER_RADIUS,
            ),
            Shape::Clusters3 => {
                let r = CLUSTER_TRUNCATION * CLUSTER_SIGMA;
                (-r, 4.0 + r, -r, 3.5 + r)
            }
            Shape::Banana => (-BANANA_RADII.1, BANANA_RADII.1, 0.0, BANANA_RADII.1),
        }
    }

    /// Generation parameters, recorded next to generated files.
    pub fn params(self) -> serde_json::Value {
        match self {
            Shape::Star => serde_json::json!({
                "outer_radius": STAR_OUTER_RADIUS,
                "inner_radius": STAR_INNER_RADIUS,
                "center": [0.0, 0.0],
                "points": 5,
            }),
            Shape::Clusters3 => serde_json::json!({
                "sigma": CLUSTER_SIGMA,
                "centers": CLUSTER_CENTERS,
                "truncation_sigmas": CLUSTER_TRUNCATION,
                "assignment": "round-robin",
            }),
            Shape::Banana => serde_json::json!({
                "r_min": BANANA_RADII.0,
                "r_max": BANANA_RADII.1,
                "theta_min": 0.0,
                "theta_max": PI,
            }),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Star => "star",
            Shape::Clusters3 => "clusters3",
            Shape::Banana => "banana",
        })
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Shape::Star),
            "clusters3" => Ok(Shape::Clusters3),
            "banana" => Ok(Shape::Banana),
            other => Err(Error::InvalidInput(format!("unknown shape {other:?}"))),
        }
    }
}

fn check_n(shape: Shape, n: usize) -> Result<()> {
    if n < shape.min_points() {
        return Err(Error::InvalidInput(format!(
            "{shape} generator needs n >= {}, got {n}",
            shape.min_points()
        )));
    }
    Ok(())
}

fn star_vertices() -> [[f64; 2]; 10] {
    let mut v = [[0.0; 2]; 10];
    for (k, p) in v.iter_mut().enumerate() {
        let r = if k % 2 == 0 {
            STAR_OUTER_RADIUS
        } else {
            STAR_INNER_RADIUS
        };
        let angle = FRAC_PI_2 + k as f64 * PI / 5.0;
        *p = [r * angle.cos(), r * angle.sin()];
    }
    v
}

/// Even-odd ray casting against the ten-vertex star polygon.
pub fn inside_star(p: &[f64]) -> bool {
    let (x, y) = (p[0], p[1]);
    let v = star_vertices();
    let mut inside = false;
    let mut j = v.len() - 1;
    for i in 0..v.len() {
        let ([xi, yi], [xj, yj]) = (v[i], v[j]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Five-pointed star filled by rejection sampling from its bounding square.
pub fn gen_star(n: usize, seed: u64) -> Result<Dataset> {
    check_n(Shape::Star, n)?;
    let mut rng = rng::seeded(seed);
    let mut points = Vec::with_capacity(2 * n);
    while points.len() < 2 * n {
        let x = rng.random_range(-STAR_OUTER_RADIUS..STAR_OUTER_RADIUS);
        let y = rng.random_range(-STAR_OUTER_RADIUS..STAR_OUTER_RADIUS);
        if inside_star(&[x, y]) {
            points.extend([x, y]);
        }
    }
    Dataset::new(points, n, 2)
}

pub fn inside_three_clusters(p: &[f64]) -> bool {
    let limit = (CLUSTER_TRUNCATION * CLUSTER_SIGMA).powi(2);
    CLUSTER_CENTERS
        .iter()
        .any(|c| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= limit)
}

/// Three isotropic Gaussian clusters, points assigned round-robin.
pub fn gen_three_clusters(n: usize, seed: u64) -> Result<Dataset> {
    check_n(Shape::Clusters3, n)?;
    let mut rng = rng::seeded(seed);
    let limit = (CLUSTER_TRUNCATION * CLUSTER_SIGMA).powi(2);
    let mut points = Vec::with_capacity(2 * n);
    for i in 0..n {
        let c = CLUSTER_CENTERS[i % 3];
        loop {
            let dx: f64 = StandardNormal.sample(&mut rng);
            let dy: f64 = StandardNormal.sample(&mut rng);
            let (dx, dy) = (CLUSTER_SIGMA * dx, CLUSTER_SIGMA * dy);
            if dx * dx + dy * dy <= limit {
                points.extend([c[0] + dx, c[1] + dy]);
                break;
            }
        }
    }
    Dataset::new(points, n, 2)
}

pub fn inside_banana(p: &[f64]) -> bool {
    let r = p[0].hypot(p[1]);
    let theta = p[1].atan2(p[0]);
    (BANANA_RADII.0..=BANANA_RADII.1).contains(&r) && (0.0..=PI).contains(&theta)
}

/// Crescent: angle uniform on (0, pi), radius uniform on (2, 3).
pub fn gen_banana(n: usize, seed: u64) -> Result<Dataset> {
    check_n(Shape::Banana, n)?;
    let mut rng = rng::seeded(seed);
    let mut points = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let theta = rng.random_range(0.0..PI);
        let r = rng.random_range(BANANA_RADII.0..BANANA_RADII.1);
        points.extend([r * theta.cos(), r * theta.sin()]);
    }
    Dataset::new(points, n, 2)
}
