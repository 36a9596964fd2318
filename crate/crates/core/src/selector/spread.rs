use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax_first, write_rows};
use crate::data::{Dataset, SampleSchedule, SweepGrid};
use crate::error::{Error, Result};
use crate::kernel::{check_bandwidth, gaussian_from_sq, squared_distance};
use crate::rng;

/// Added to the mean in the coefficient of variation.
pub const CV_EPSILON: f64 = 1e-6;

fn check_pairs(data: &Dataset, s: f64) -> Result<()> {
    check_bandwidth(s)?;
    if data.n() < 2 {
        return Err(Error::InvalidInput(format!(
            "kernel statistics need at least 2 rows, got {}",
            data.n()
        )));
    }
    Ok(())
}

fn kernel_row(data: &Dataset, i: usize, s: f64) -> impl Iterator<Item = (usize, f64)> + '_ {
    let xi = data.row(i);
    data.rows()
        .enumerate()
        .map(move |(j, xj)| (j, gaussian_from_sq(squared_distance(xi, xj), s)))
}

/// `Var / (Mean + 1e-6)` of the off-diagonal kernel entries, with the
/// population variance.
pub fn cv_objective(data: &Dataset, s: f64) -> Result<f64> {
    check_pairs(data, s)?;
    let n = data.n();
    let count = (n * (n - 1)) as f64;
    let off_diag = |i: usize| kernel_row(data, i, s).filter(move |&(j, _)| j != i);
    let mean = (0..n)
        .into_par_iter()
        .map(|i| off_diag(i).map(|(_, k)| k).sum::<f64>())
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        / count;
    let var = (0..n)
        .into_par_iter()
        .map(|i| off_diag(i).map(|(_, k)| (k - mean).powi(2)).sum::<f64>())
        .collect::<Vec<f64>>()
        .iter()
        .sum::<f64>()
        / count;
    Ok(var / (mean + CV_EPSILON))
}

/// `(2/n) sum_i max_{j != i} k_ij - (2/n) sum_i min_j k_ij`.
pub fn dfn_objective(data: &Dataset, s: f64) -> Result<f64> {
    check_pairs(data, s)?;
    let n = data.n();
    let (far, near) = (0..n)
        .into_par_iter()
        .map(|i| {
            kernel_row(data, i, s).fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), (j, k)| {
                (if j != i { hi.max(k) } else { hi }, lo.min(k))
            })
        })
        .collect::<Vec<(f64, f64)>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(2.0 / n as f64 * (far - near))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMethod {
    Cv,
    Dfn,
}

impl KernelMethod {
    pub fn objective(self, data: &Dataset, s: f64) -> Result<f64> {
        match self {
            KernelMethod::Cv => cv_objective(data, s),
            KernelMethod::Dfn => dfn_objective(data, s),
        }
    }
}

impl std::fmt::Display for KernelMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelMethod::Cv => "cv",
            KernelMethod::Dfn => "dfn",
        })
    }
}

impl std::str::FromStr for KernelMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cv" => Ok(KernelMethod::Cv),
            "dfn" => Ok(KernelMethod::Dfn),
            other => Err(Error::InvalidInput(format!(
                "unknown method {other:?} (expected cv or dfn)"
            ))),
        }
    }
}

/// Objective values at every grid bandwidth.
pub fn objective_curve(data: &Dataset, grid: &SweepGrid, method: KernelMethod) -> Result<Vec<(f64, f64)>> {
    grid.validate()?;
    grid.values()
        .into_iter()
        .map(|s| Ok((s, method.objective(data, s)?)))
        .collect()
}

fn select(data: &Dataset, grid: &SweepGrid, method: KernelMethod) -> Result<f64> {
    let curve = objective_curve(data, grid, method)?;
    let values: Vec<f64> = curve.iter().map(|&(_, v)| v).collect();
    Ok(curve[argmax_first(&values).expect("grid is not empty")].0)
}

/// Grid bandwidth maximizing [`cv_objective`]; the smallest wins ties.
pub fn cv_select(data: &Dataset, grid: &SweepGrid) -> Result<f64> {
    select(data, grid, KernelMethod::Cv)
}

/// Grid bandwidth maximizing [`dfn_objective`]; the smallest wins ties.
pub fn dfn_select(data: &Dataset, grid: &SweepGrid) -> Result<f64> {
    select(data, grid, KernelMethod::Dfn)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomizedSweepConfig {
    /// Draws per sample size.
    pub repeats: usize,
    pub schedule: SampleSchedule,
    pub method: KernelMethod,
    pub grid: SweepGrid,
    pub with_replacement: bool,
}

impl RandomizedSweepConfig {
    pub fn new(repeats: usize, schedule: SampleSchedule, method: KernelMethod, grid: SweepGrid) -> Self {
        Self {
            repeats,
            schedule,
            method,
            grid,
            with_replacement: true,
        }
    }

    fn validate(&self, population: usize) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidInput("repeats must be at least 1".into()));
        }
        self.grid.validate()?;
        self.schedule.validate(Some(population))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub n: usize,
    pub mean: f64,
    /// Population variance of the per-draw answers.
    pub variance: f64,
    /// Per-draw answers in draw order.
    pub values: Vec<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sizes: Vec<SizeStats>,
}

impl SweepResult {
    /// Writes `n_i,mean,variance,seconds`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows = self.sizes.iter().map(|z| {
            vec![
                z.n.to_string(),
                z.mean.to_string(),
                z.variance.to_string(),
                z.seconds.to_string(),
            ]
        });
        write_rows(path.as_ref(), &["n_i", "mean", "variance", "seconds"], rows)
    }

    /// Writes one `n_i,repeat,s_opt` row per draw.
    pub fn write_draws_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows = self.sizes.iter().flat_map(|z| {
            z.values
                .iter()
                .enumerate()
                .map(move |(r, v)| vec![z.n.to_string(), r.to_string(), v.to_string()])
        });
        write_rows(path.as_ref(), &["n_i", "repeat", "s_opt"], rows)
    }
}

/// Repeats a kernel-statistic selector on random draws at each scheduled
/// size. Draw `r` at size index `i` uses `rng::stream(seed, i, r)`.
pub fn randomized_sweep(data: &Dataset, cfg: &RandomizedSweepConfig) -> Result<SweepResult> {
    cfg.validate(data.n())?;
    let mut sizes = Vec::new();
    for (n_idx, n) in cfg.schedule.values().into_iter().enumerate() {
        let start = Instant::now();
        let values = (0..cfg.repeats)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng::stream(cfg.schedule.seed, n_idx as u32, r as u32);
                let idx: Vec<usize> = if cfg.with_replacement {
                    (0..n).map(|_| rng.random_range(0..data.n())).collect()
                } else {
                    rand::seq::index::sample(&mut rng, data.n(), n).into_vec()
                };
                let sample = data.select_rows(&idx)?;
                select(&sample, &cfg.grid, cfg.method).map_err(|e| e.at_sample_size(n, None))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        sizes.push(SizeStats {
            n,
            mean,
            variance,
            values,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(SweepResult { sizes })
}
