//! Observation matrices, sweep grids and sample-size schedules.
//!
//! A [`Dataset`] is an immutable `n x m` row-major matrix of finite reals with
//! optional per-row binary labels. Everything downstream (kernels, solvers,
//! selectors) borrows rows from it.

mod csv_io;
pub mod generators;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use csv_io::{load_csv, write_csv, LabelColumn};
pub use generators::{
    gen_banana, gen_star, gen_three_clusters, inside_banana, inside_star, inside_three_clusters,
    Shape,
};

/// Binary tag attached to a row of labeled data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Target,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    m: usize,
    labels: Option<Vec<Label>>,
    names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from row-major values.
    pub fn new(points: Vec<f64>, n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput(format!(
                "dataset must have at least one row and one column (got {n}x{m})"
            )));
        }
        if points.len() != n * m {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {n}x{m} matrix, got {}",
                n * m,
                points.len()
            )));
        }
        if let Some(idx) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                idx / m,
                idx % m
            )));
        }
        Ok(Self {
            points,
            n,
            m,
            labels: None,
            names: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(rows.len() * m);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} columns, expected {m}",
                    row.len()
                )));
            }
            points.extend_from_slice(row);
        }
        Self::new(points, rows.len(), m)
    }

    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} rows",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.m {
            return Err(Error::InvalidInput(format!(
                "{} column names for {} columns",
                names.len(),
                self.m
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Column names, falling back to `x1..xm`.
    pub fn column_names(&self) -> Vec<String> {
        match &self.names {
            Some(names) => names.clone(),
            None => (1..=self.m).map(|j| format!("x{j}")).collect(),
        }
    }

    /// New dataset made of the given rows (labels and names carried over).
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len() * self.m);
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidInput(format!(
                    "row index {i} out of range for {} rows",
                    self.n
                )));
            }
            points.extend_from_slice(self.row(i));
        }
        let mut out = Self::new(points, indices.len(), self.m)?;
        out.labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        out.names = self.names.clone();
        Ok(out)
    }

    /// Rows carrying the given label. Errors when the dataset is unlabeled
    /// or no row matches.
    pub fn filter_label(&self, label: Label) -> Result<Self> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("dataset has no labels".into()))?;
        let idx: Vec<usize> = (0..self.n).filter(|&i| labels[i] == label).collect();
        self.select_rows(&idx)
    }

    /// Stacks two datasets with the same column count. Labels survive only
    /// when both sides are labeled.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if other.m != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: other.m,
            });
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut out = Self::new(points, self.n + other.n, self.m)?;
        if let (Some(a), Some(b)) = (&self.labels, &other.labels) {
            out.labels = Some(a.iter().chain(b).copied().collect());
        }
        out.names = self.names.clone();
        Ok(out)
    }

    /// Per-column z-score transform. Constant columns are only centered.
    pub fn standardized(&self) -> Self {
        let n = self.n as f64;
        let mut out = self.clone();
        for j in 0..self.m {
            let mean = self.rows().map(|r| r[j]).sum::<f64>() / n;
            let var = self.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            for i in 0..self.n {
                let v = &mut out.points[i * self.m + j];
                *v -= mean;
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
        out
    }

    /// Per-column (min, max).
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.m)
            .map(|j| {
                self.rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[j]), hi.max(r[j]))
                })
            })
            .collect()
    }

    /// Largest pairwise Euclidean distance (exact, O(n^2)).
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                best = best.max(crate::kernel::squared_distance(self.row(i), self.row(j)));
            }
        }
        best.sqrt()
    }
}

/// Draws `k` rows uniformly with replacement.
pub fn draw_sample(data: &Dataset, k: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng::seeded(seed);
    draw_sample_with(data, k, &mut rng)
}

pub(crate) fn draw_sample_with<R: Rng + ?Sized>(
    data: &Dataset,
    k: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if k == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..data.n())).collect();
    data.select_rows(&idx)
}

/// Equally spaced bandwidth grid `s_min, s_min + ds, ..., <= s_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub s_min: f64,
    pub s_max: f64,
    pub delta_s: f64,
}

impl SweepGrid {
    pub fn new(s_min: f64, s_max: f64, delta_s: f64) -> Result<Self> {
        let grid = Self {
            s_min,
            s_max,
            delta_s,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// 0.05 to 10 in steps of 0.05, the default for small 2-D shapes.
    pub fn default_2d() -> Self {
        Self {
            s_min: 0.05,
            s_max: 10.0,
            delta_s: 0.05,
        }
    }

    /// 0.5 to 60 in steps of 0.5, for higher-dimensional data.
    pub fn default_large() -> Self {
        Self {
            s_min: 0.5,
            s_max: 60.0,
            delta_s: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.s_min.is_finite() && self.s_max.is_finite() && self.delta_s.is_finite();
        if !finite || self.s_min <= 0.0 || self.s_max <= self.s_min || self.delta_s <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "invalid grid: need 0 < s_min < s_max and delta_s > 0 (got {} .. {} step {})",
                self.s_min, self.s_max, self.delta_s
            )));
        }
        if self.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "grid has {} points; at least 4 are required",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.s_max - self.s_min) / self.delta_s * (1.0 + 1e-12) + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| round12(self.s_min + k as f64 * self.delta_s))
            .collect()
    }
}

fn round12(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(12 - v.abs().log10().ceil() as i32);
    (v * scale).round() / scale
}

/// Increasing sample sizes `n_min, n_min + dn, ..., <= n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSchedule {
    pub n_min: usize,
    pub n_max: usize,
    pub delta_n: usize,
    pub seed: u64,
}

impl SampleSchedule {
    pub fn new(n_min: usize, n_max: usize, delta_n: usize, seed: u64) -> Result<Self> {
        let schedule = Self {
            n_min,
            n_max,
            delta_n,
            seed,
        };
        schedule.validate(None)?;
        Ok(schedule)
    }

    /// Schedule given as fractions of a population of `total` rows, e.g.
    /// `(0.05, 1.0, 0.01)` for 5% to 100% in 1% steps.
    pub fn from_fractions(total: usize, lo: f64, hi: f64, step: f64, seed: u64) -> Result<Self> {
        let frac = |p: f64| ((p * total as f64).round() as usize).max(1);
        Self::new(frac(lo), frac(hi).min(total), frac(step), seed)
    }

    /// Checks the schedule; `population` additionally bounds `n_max`.
    pub fn validate(&self, population: Option<usize>) -> Result<()> {
        if self.n_min == 0 || self.delta_n == 0 || self.n_min > self.n_max {
            return Err(Error::InvalidInput(format!(
                "invalid schedule: need 1 <= n_min <= n_max and delta_n >= 1 (got {}..{} step {})",
                self.n_min, self.n_max, self.delta_n
            )));
        }
        if let Some(total) = population {
            if self.n_max > total {
                return Err(Error::InvalidInput(format!(
                    "n_max = {} exceeds the {total} available rows",
                    self.n_max
                )));
            }
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<usize> {
        (self.n_min..=self.n_max).step_by(self.delta_n).collect()
    }
}
