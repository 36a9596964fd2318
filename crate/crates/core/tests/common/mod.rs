//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use svddbw_core::data::{inside_star, Dataset, Label};
use svddbw_core::rng;

/// Gaussian kernel matrix written out directly.
pub fn kernel(points: &[Vec<f64>], s: f64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|x| {
            points
                .iter()
                .map(|y| {
                    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                    (-d2 / (2.0 * s * s)).exp()
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(k: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    k.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn quad(k: &[Vec<f64>], v: &[f64]) -> f64 {
    mat_vec(k, v).iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `sum a_i K_ii - a'Ka`.
pub fn dual_objective(k: &[Vec<f64>], a: &[f64]) -> f64 {
    a.iter().enumerate().map(|(i, ai)| ai * k[i][i]).sum::<f64>() - quad(k, a)
}

/// Euclidean projection onto `{sum a = 1, 0 <= a <= c}` by bisection on
/// the shift `tau` in `clamp(v - tau, 0, c)`.
pub fn project_capped_simplex(v: &[f64], c: f64) -> Vec<f64> {
    let mass = |tau: f64| v.iter().map(|x| (x - tau).clamp(0.0, c)).sum::<f64>();
    let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - c - 1.0;
    let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().map(|x| (x - tau).clamp(0.0, c)).collect()
}

/// Accelerated projected gradient on `min a'Ka - sum a_i K_ii` over the
/// capped simplex, stopped when an iterate moves less than `tol`.
pub fn projected_gradient(k: &[Vec<f64>], c: f64, tol: f64) -> Vec<f64> {
    let n = k.len();
    // Lipschitz constant of the gradient 2Ka - diag(K): 2 * (max row sum)
    let lip = 2.0 * k.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lip;
    let mut a = project_capped_simplex(&vec![1.0 / n as f64; n], c);
    let mut y = a.clone();
    let mut t = 1.0f64;
    for _ in 0..2_000_000 {
        let ky = mat_vec(k, &y);
        let g: Vec<f64> = (0..n).map(|i| 2.0 * ky[i] - k[i][i]).collect();
        let next = project_capped_simplex(
            &y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect::<Vec<_>>(),
            c,
        );
        let moved = next.iter().zip(&a).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // restart momentum whenever the objective goes up
        let restart = dual_objective(k, &next) < dual_objective(k, &a);
        let beta = if restart { 0.0 } else { (t - 1.0) / t_next };
        y = next.iter().zip(&a).map(|(p, q)| p + beta * (p - q)).collect();
        t = if restart { 1.0 } else { t_next };
        a = next;
        if moved < tol && !restart {
            break;
        }
    }
    a
}

/// Random problem: `n` points in `[-1, 1]^m` with `s` and `f` drawn from
/// the given ranges.
pub struct Instance {
    pub points: Vec<Vec<f64>>,
    pub s: f64,
    pub f: f64,
}

impl Instance {
    pub fn random(seed: u64, max_n: usize, max_m: usize) -> Self {
        let mut r = rng::seeded(seed);
        let n = r.random_range(2..=max_n);
        let m = r.random_range(1..=max_m);
        let points = (0..n)
            .map(|_| (0..m).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        Self {
            points,
            s: r.random_range(0.1..5.0),
            f: r.random_range(0.05..0.5),
        }
    }

    pub fn dataset(&self) -> Dataset {
        Dataset::from_rows(&self.points).unwrap()
    }

    pub fn penalty(&self) -> f64 {
        1.0 / (self.points.len() as f64 * self.f)
    }
}

/// Star training rows as targets plus `others` uniform points from
/// `[-1, 1]^2`, each labeled by the star membership test.
pub fn star_scoring_set(target: &Dataset, others: usize, seed: u64) -> Dataset {
    let mut r = rng::seeded(seed);
    let mut rows: Vec<Vec<f64>> = target.rows().map(<[f64]>::to_vec).collect();
    let mut labels = vec![Label::Target; target.n()];
    for _ in 0..others {
        let p = vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)];
        labels.push(if inside_star(&p) { Label::Target } else { Label::Other });
        rows.push(p);
    }
    Dataset::from_rows(&rows).unwrap().with_labels(labels).unwrap()
}
