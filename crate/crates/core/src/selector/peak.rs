use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ConvergenceParams, SelectionTrace, TraceEntry};
use crate::data::{Dataset, SampleSchedule, SweepGrid};
use crate::error::{Error, Result};
use crate::pspline::{
    first_difference, first_local_max, first_zero_crossing_of_band, fit_pspline,
    second_difference, Curve, SmootherParams, SplineFit,
};
use crate::rng;
use crate::sampling::{sample_train_with, SamplingTrainConfig};
use crate::svdd::{train_curve, TrainCurve, DEFAULT_KKT_TOL};

const MIN_PEAK_GRID: usize = 6;

/// The OOF falls as `s` grows; the peak search runs on its negation, which
/// rises and bends over at the selected bandwidth.
pub fn peak_curve(s: &[f64], oof: &[f64]) -> Result<Curve> {
    Curve::new(s.to_vec(), oof.iter().map(|v| -v).collect())
}

/// Both peak criteria evaluated on one rising curve.
#[derive(Debug, Clone)]
pub struct PeakAnalysis {
    pub curve: Curve,
    pub first_difference: Curve,
    pub second_difference: Curve,
    pub first_fit: SplineFit,
    pub second_fit: SplineFit,
    /// First grid point where the band of the smoothed second difference
    /// reaches zero.
    pub band_zero: Option<f64>,
    /// First local maximum of the smoothed first difference.
    pub first_max: Option<f64>,
}

impl PeakAnalysis {
    pub fn new(curve: Curve, smoother: &SmootherParams) -> Result<Self> {
        let d1 = first_difference(&curve)?;
        let d2 = second_difference(&curve)?;
        let first_fit = fit_pspline(&d1, smoother)?;
        let second_fit = fit_pspline(&d2, smoother)?;
        let first_max = optional(first_local_max(&first_fit, &d1.xs))?;
        let band_zero = optional(first_zero_crossing_of_band(&second_fit, &d2.xs))?;
        Ok(Self {
            curve,
            first_difference: d1,
            second_difference: d2,
            first_fit,
            second_fit,
            band_zero,
            first_max,
        })
    }

    /// The second-difference answer.
    pub fn s_opt(&self) -> Result<f64> {
        self.band_zero.ok_or(Error::NoZeroCrossing)
    }

    /// The first-difference answer.
    pub fn first_max_s(&self) -> Result<f64> {
        self.first_max.ok_or(Error::NoInteriorMaximum)
    }
}

fn optional(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoInteriorMaximum | Error::NoZeroCrossing) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone)]
pub struct FullPeakResult {
    pub training: TrainCurve,
    pub analysis: PeakAnalysis,
}

impl FullPeakResult {
    pub fn s_opt(&self) -> Result<f64> {
        self.analysis.s_opt()
    }

    pub fn first_max_s(&self) -> Result<f64> {
        self.analysis.first_max_s()
    }
}

/// Trains on every row at each grid bandwidth and locates the first bend
/// of the OOF curve.
pub fn full_peak(
    data: &Dataset,
    grid: &SweepGrid,
    f: f64,
    smoother: &SmootherParams,
) -> Result<FullPeakResult> {
    grid.validate()?;
    if grid.len() < MIN_PEAK_GRID {
        return Err(Error::InvalidInput(format!(
            "peak selection needs at least {MIN_PEAK_GRID} grid points, got {}",
            grid.len()
        )));
    }
    let training = train_curve(data, grid, f)?;
    let analysis = PeakAnalysis::new(peak_curve(&training.s, &training.oof)?, smoother)?;
    if analysis.band_zero.is_none() && analysis.first_max.is_none() {
        return Err(Error::NoInteriorMaximum);
    }
    Ok(FullPeakResult { training, analysis })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPeakConfig {
    pub schedule: SampleSchedule,
    pub grid: SweepGrid,
    pub f: f64,
    pub conv: ConvergenceParams,
    pub smoother: SmootherParams,
    pub max_iters: usize,
    pub stall_iters: usize,
    pub r2_rel_tol: f64,
    pub kkt_tol: f64,
    /// Reuse one random stream for every `s` at a given sample size, so
    /// neighboring grid points see the same draws.
    pub shared_stream: bool,
}

impl SamplingPeakConfig {
    pub fn new(schedule: SampleSchedule, grid: SweepGrid, f: f64) -> Self {
        let defaults = SamplingTrainConfig::new(2, 0);
        Self {
            schedule,
            grid,
            f,
            conv: ConvergenceParams::default(),
            smoother: SmootherParams::default(),
            max_iters: defaults.max_iters,
            stall_iters: defaults.stall_iters,
            r2_rel_tol: defaults.r2_rel_tol,
            kkt_tol: DEFAULT_KKT_TOL,
            shared_stream: true,
        }
    }

    fn train_config(&self, sample_size: usize) -> SamplingTrainConfig {
        SamplingTrainConfig {
            sample_size,
            max_iters: self.max_iters,
            stall_iters: self.stall_iters,
            r2_rel_tol: self.r2_rel_tol,
            seed: self.schedule.seed,
            kkt_tol: self.kkt_tol,
        }
    }
}

/// Runs sampled training over the grid at each scheduled sample size and
/// stops once the selected `s` settles.
///
/// Samples at size index `i` come from `rng::stream(seed, i, 0)` for every
/// grid point, or from `rng::stream(seed, i, j)` at grid index `j` when
/// `shared_stream` is off.
pub fn sampling_peak(data: &Dataset, cfg: &SamplingPeakConfig) -> Result<SelectionTrace> {
    cfg.schedule.validate(Some(data.n()))?;
    cfg.grid.validate()?;
    cfg.conv.validate()?;
    if cfg.grid.len() < MIN_PEAK_GRID {
        return Err(Error::InvalidInput(format!(
            "peak selection needs at least {MIN_PEAK_GRID} grid points, got {}",
            cfg.grid.len()
        )));
    }
    let s_values = cfg.grid.values();
    let mut entries: Vec<TraceEntry> = Vec::new();
    let mut converged_at = None;
    for (n_idx, n) in cfg.schedule.values().into_iter().enumerate() {
        let train = cfg.train_config(n);
        let start = Instant::now();
        let cells: Vec<Result<(f64, f64)>> = s_values
            .par_iter()
            .enumerate()
            .map(|(s_idx, &s)| {
                let t = Instant::now();
                let inner = if cfg.shared_stream { 0 } else { s_idx as u32 };
                let mut rng = rng::stream(cfg.schedule.seed, n_idx as u32, inner);
                let out = sample_train_with(data, s, cfg.f, &train, &mut rng)
                    .map_err(|e| e.at_sample_size(n, Some(s)))?;
                Ok((out.model.oof(), t.elapsed().as_secs_f64()))
            })
            .collect();
        let mut oof = Vec::with_capacity(cells.len());
        let mut solve_seconds = 0.0;
        for cell in cells {
            let (v, secs) = cell?;
            oof.push(v);
            solve_seconds += secs;
        }
        let s_opt = peak_curve(&s_values, &oof)
            .and_then(|c| first_difference(&c))
            .and_then(|d1| {
                let fit = fit_pspline(&d1, &cfg.smoother)?;
                first_local_max(&fit, &d1.xs)
            })
            .map_err(|e| e.at_sample_size(n, None))?;
        entries.push(TraceEntry {
            n,
            s_opt,
            seconds: start.elapsed().as_secs_f64(),
            solve_seconds,
        });
        let so_far: Vec<f64> = entries.iter().map(|e| e.s_opt).collect();
        if cfg.conv.first_converged(&so_far).is_some() {
            converged_at = Some(n);
            break;
        }
    }
    let final_s = entries.last().map(|e| e.s_opt).expect("schedule is not empty");
    Ok(SelectionTrace {
        entries,
        converged: converged_at.is_some(),
        converged_at,
        final_s,
    })
}
