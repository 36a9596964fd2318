//! Support vector data description with a Gaussian kernel.
//!
//! [`solve_dual`] maximizes the kernelized dual for a bandwidth `s` and an
//! expected outlier fraction `f` (penalty `C = 1 / (n f)`), then derives
//! the threshold `R^2` from the unbounded support vectors. Points scoring
//! `D^2(z) > R^2` are outliers.

mod model;
mod smo;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SweepGrid};
use crate::error::{Error, Result};
use crate::kernel::check_bandwidth;

pub use model::{compute_threshold, ModelCheck, ScoreResult, SvddModel, MODEL_FORMAT_VERSION};
pub use smo::DENSE_ROW_LIMIT;

use model::threshold_from_products;
use smo::{KernelSource, Smo};

pub const DEFAULT_KKT_TOL: f64 = 1e-6;

/// Grid points are trained concurrently only below this size; larger
/// problems parallelize inside each solve instead.
const PARALLEL_GRID_LIMIT: usize = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvddConfig {
    /// Gaussian bandwidth.
    pub s: f64,
    /// Expected outlier fraction, `0 < f < 1`.
    pub f: f64,
    pub kkt_tol: f64,
    /// Pair-update budget; `None` means `max(1000 n, 100_000)`.
    pub max_passes: Option<usize>,
}

impl SvddConfig {
    pub fn new(s: f64, f: f64) -> Self {
        Self {
            s,
            f,
            kkt_tol: DEFAULT_KKT_TOL,
            max_passes: None,
        }
    }

    pub fn with_kkt_tol(mut self, tol: f64) -> Self {
        self.kkt_tol = tol;
        self
    }

    pub fn with_max_passes(mut self, passes: usize) -> Self {
        self.max_passes = Some(passes);
        self
    }

    pub fn penalty(&self, n: usize) -> f64 {
        1.0 / (n as f64 * self.f)
    }

    pub fn max_passes_for(&self, n: usize) -> usize {
        self.max_passes.unwrap_or((1000 * n).max(100_000))
    }

    fn validate(&self, n: usize) -> Result<()> {
        check_bandwidth(self.s)?;
        if !(self.f > 0.0) {
            return Err(Error::InvalidInput(format!(
                "outlier fraction must lie in (0, 1), got {}",
                self.f
            )));
        }
        let nc = n as f64 * self.penalty(n);
        // sum a = 1 with a <= C needs n C >= 1 (rounding slack)
        if nc < 1.0 - 1e-12 {
            return Err(Error::Infeasible { nc });
        }
        if self.f >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "outlier fraction must lie in (0, 1), got {}",
                self.f
            )));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "kkt_tol must be positive, got {}",
                self.kkt_tol
            )));
        }
        Ok(())
    }
}

/// Trains a full SVDD model on every row of `data`.
pub fn solve_dual(data: &Dataset, config: &SvddConfig) -> Result<SvddModel> {
    solve_dual_with_stats(data, config).map(|(model, _)| model)
}

/// Solver diagnostics reported alongside a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub max_violation: f64,
}

pub fn solve_dual_with_stats(data: &Dataset, config: &SvddConfig) -> Result<(SvddModel, SolveStats)> {
    solve_dual_indexed(data, config).map(|(model, stats, _)| (model, stats))
}

/// Like [`solve_dual_with_stats`], also returning the row indices of the
/// support vectors in `data`.
pub(crate) fn solve_dual_indexed(
    data: &Dataset,
    config: &SvddConfig,
) -> Result<(SvddModel, SolveStats, Vec<usize>)> {
    let n = data.n();
    config.validate(n)?;
    let c = config.penalty(n);
    let cut = config.kkt_tol * c;

    let mut kernel = KernelSource::new(data, config.s)?;
    let solution = Smo::new(&mut kernel, c, config.kkt_tol).solve(config.max_passes_for(n), cut)?;
    drop(kernel);

    let alpha = &solution.alpha;
    let quad: f64 = alpha.iter().zip(&solution.k_alpha).map(|(a, b)| a * b).sum();
    let oof = alpha.iter().sum::<f64>() - quad;
    let r_squared = threshold_from_products(alpha, &solution.k_alpha, quad, c, cut);

    let keep: Vec<usize> = (0..n).filter(|&i| alpha[i] > cut).collect();
    let sv = data.select_rows(&keep)?;
    let sv = match data.names() {
        Some(names) => sv.with_names(names.to_vec())?,
        None => sv,
    };
    let alphas = keep.iter().map(|&i| alpha[i]).collect();
    let model = SvddModel::from_parts(sv, alphas, config.s, config.f, c, r_squared, oof)?;
    let stats = SolveStats {
        iterations: solution.iterations,
        max_violation: solution.max_violation,
    };
    Ok((model, stats, keep))
}

/// Per-bandwidth training results, aligned with the grid.
#[derive(Debug, Clone)]
pub struct TrainCurve {
    pub s: Vec<f64>,
    /// Dual objective value at each bandwidth.
    pub oof: Vec<f64>,
    pub nsv: Vec<usize>,
    pub seconds: Vec<f64>,
    pub models: Vec<SvddModel>,
}

impl TrainCurve {
    pub fn total_seconds(&self) -> f64 {
        self.seconds.iter().sum()
    }
}

/// Trains one full model per grid bandwidth.
pub fn train_curve(data: &Dataset, grid: &SweepGrid, f: f64) -> Result<TrainCurve> {
    train_curve_with(data, grid, f, DEFAULT_KKT_TOL)
}

pub fn train_curve_with(data: &Dataset, grid: &SweepGrid, f: f64, kkt_tol: f64) -> Result<TrainCurve> {
    grid.validate()?;
    let values = grid.values();
    let run = |&s: &f64| -> Result<(SvddModel, f64)> {
        let start = Instant::now();
        let model = solve_dual(data, &SvddConfig::new(s, f).with_kkt_tol(kkt_tol))
            .map_err(|e| e.at_bandwidth(s))?;
        Ok((model, start.elapsed().as_secs_f64()))
    };
    let results: Vec<Result<(SvddModel, f64)>> = if data.n() <= PARALLEL_GRID_LIMIT {
        values.par_iter().map(run).collect()
    } else {
        values.iter().map(run).collect()
    };
    let mut curve = TrainCurve {
        s: values,
        oof: Vec::new(),
        nsv: Vec::new(),
        seconds: Vec::new(),
        models: Vec::new(),
    };
    for r in results {
        let (model, secs) = r?;
        curve.oof.push(model.oof());
        curve.nsv.push(model.nsv());
        curve.seconds.push(secs);
        curve.models.push(model);
    }
    Ok(curve)
}
