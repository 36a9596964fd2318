use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, gaussian_from_sq, squared_distance, KernelMatrix};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Outcome of scoring a single point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreResult {
    /// Squared kernel-space distance to the description's center.
    pub distance_sq: f64,
    pub is_outlier: bool,
}

/// Trained description: support vectors, their multipliers and the
/// threshold `R^2` a scored point is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct SvddModel {
    sv_points: Dataset,
    alphas: Vec<f64>,
    s: f64,
    f: f64,
    c: f64,
    r_squared: f64,
    oof: f64,
    /// `sum_ij a_i a_j K(x_i, x_j)` over the support vectors.
    center_norm_sq: f64,
}

impl SvddModel {
    pub(crate) fn from_parts(
        sv_points: Dataset,
        alphas: Vec<f64>,
        s: f64,
        f: f64,
        c: f64,
        r_squared: f64,
        oof: f64,
    ) -> Result<Self> {
        if sv_points.n() != alphas.len() {
            return Err(Error::Format(format!(
                "{} support vectors but {} multipliers",
                sv_points.n(),
                alphas.len()
            )));
        }
        check_bandwidth(s)?;
        let center_norm_sq = center_norm_sq(&sv_points, &alphas, s);
        Ok(Self {
            sv_points,
            alphas,
            s,
            f,
            c,
            r_squared,
            oof,
            center_norm_sq,
        })
    }

    pub fn sv_points(&self) -> &Dataset {
        &self.sv_points
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn bandwidth(&self) -> f64 {
        self.s
    }

    pub fn outlier_fraction(&self) -> f64 {
        self.f
    }

    /// Penalty constant `C = 1 / (n f)` of the training problem.
    pub fn penalty(&self) -> f64 {
        self.c
    }

    pub fn r_squared(&self) -> f64 {
        self.r_squared
    }

    /// Dual objective value at the solution.
    pub fn oof(&self) -> f64 {
        self.oof
    }

    pub fn nsv(&self) -> usize {
        self.alphas.len()
    }

    pub fn dim(&self) -> usize {
        self.sv_points.m()
    }

    /// `true` for support vectors strictly below the box bound (on the boundary).
    pub fn sv_interior_flags(&self) -> Vec<bool> {
        self.alphas.iter().map(|&a| a < self.c).collect()
    }

    pub fn center_norm_sq(&self) -> f64 {
        self.center_norm_sq
    }

    fn distance_sq_unchecked(&self, z: &[f64]) -> f64 {
        let cross: f64 = self
            .sv_points
            .rows()
            .zip(&self.alphas)
            .map(|(x, a)| a * gaussian_from_sq(squared_distance(x, z), self.s))
            .sum();
        1.0 - 2.0 * cross + self.center_norm_sq
    }

    pub fn distance_sq(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(self.distance_sq_unchecked(z))
    }

    pub fn score(&self, z: &[f64]) -> Result<ScoreResult> {
        let distance_sq = self.distance_sq(z)?;
        Ok(ScoreResult {
            distance_sq,
            is_outlier: distance_sq > self.r_squared,
        })
    }

    /// Scores every row of `data`, in row order.
    pub fn score_all(&self, data: &Dataset) -> Result<Vec<ScoreResult>> {
        if data.m() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.m(),
            });
        }
        Ok(data
            .as_slice()
            .par_chunks_exact(data.m())
            .map(|z| {
                let distance_sq = self.distance_sq_unchecked(z);
                ScoreResult {
                    distance_sq,
                    is_outlier: distance_sq > self.r_squared,
                }
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            s: self.s,
            f: self.f,
            c: self.c,
            r_squared: self.r_squared,
            oof: self.oof,
            sv: self.sv_points.rows().map(<[f64]>::to_vec).collect(),
            alphas: self.alphas.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let sv = Dataset::from_rows(&file.sv)?;
        Self::from_parts(
            sv,
            file.alphas,
            file.s,
            file.f,
            file.c,
            file.r_squared,
            file.oof,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Re-derives the model's defining properties from scratch.
    pub fn check(&self, kkt_tol: f64) -> ModelCheck {
        let alpha_sum: f64 = self.alphas.iter().sum();
        let box_ok = self
            .alphas
            .iter()
            .all(|&a| a > 0.0 && a > kkt_tol * self.c && a <= self.c);
        let boundary_gap = self
            .sv_points
            .rows()
            .zip(&self.alphas)
            .filter(|(_, &a)| a < self.c)
            .map(|(x, _)| (self.distance_sq_unchecked(x) - self.r_squared).abs())
            .fold(0.0, f64::max);
        ModelCheck {
            alpha_sum_error: (alpha_sum - 1.0).abs(),
            box_ok,
            boundary_gap,
            r_squared_ok: self.r_squared >= -1e-9,
        }
    }
}

/// Result of [`SvddModel::check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCheck {
    pub alpha_sum_error: f64,
    pub box_ok: bool,
    /// Largest `|D^2(sv) - R^2|` over unbounded support vectors.
    pub boundary_gap: f64,
    pub r_squared_ok: bool,
}

impl ModelCheck {
    pub fn passes(&self, kkt_tol: f64) -> bool {
        self.alpha_sum_error <= 1e-8
            && self.box_ok
            && self.boundary_gap <= 10.0 * kkt_tol
            && self.r_squared_ok
    }
}

/// On-disk model document.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    s: f64,
    f: f64,
    #[serde(rename = "C")]
    c: f64,
    r_squared: f64,
    oof: f64,
    sv: Vec<Vec<f64>>,
    alphas: Vec<f64>,
}

fn center_norm_sq(sv: &Dataset, alphas: &[f64], s: f64) -> f64 {
    (0..sv.n())
        .into_par_iter()
        .map(|i| {
            let xi = sv.row(i);
            alphas[i]
                * sv.rows()
                    .zip(alphas)
                    .map(|(xj, aj)| aj * gaussian_from_sq(squared_distance(xi, xj), s))
                    .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Threshold `R^2` from precomputed `(K a)` and `a'Ka`: the mean of
/// `K_kk - 2 (K a)_k + a'Ka` over unbounded support vectors (`cut < a_k < C`),
/// or the largest such distance over all support vectors when every one
/// sits at the bound.
pub(crate) fn threshold_from_products(
    alphas: &[f64],
    k_alpha: &[f64],
    quad: f64,
    c: f64,
    cut: f64,
) -> f64 {
    let dist = |k: usize| 1.0 - 2.0 * k_alpha[k] + quad;
    let (sum, count) = alphas
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > cut && a < c)
        .fold((0.0, 0usize), |(s, n), (k, _)| (s + dist(k), n + 1));
    if count > 0 {
        sum / count as f64
    } else {
        alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > cut)
            .map(|(k, _)| dist(k))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }
}

/// Threshold `R^2` for multipliers `alphas` over the points behind `kernel`.
///
/// Multipliers at or below `1e-6 * C` are treated as zero when deciding
/// which points are support vectors.
pub fn compute_threshold(alphas: &[f64], kernel: &KernelMatrix, c: f64) -> f64 {
    let k_alpha = kernel.mul_vec(alphas);
    let quad: f64 = alphas.iter().zip(&k_alpha).map(|(a, b)| a * b).sum();
    threshold_from_products(alphas, &k_alpha, quad, c, super::DEFAULT_KKT_TOL * c)
}
