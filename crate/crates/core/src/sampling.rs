//! Approximate SVDD training on small random samples.
//!
//! Each iteration draws `sample_size` rows with replacement, merges them
//! with the current support vectors and solves the full dual on that union.
//! The new support vectors become the working set. Iteration stops once
//! `R^2` has moved by at most `r2_rel_tol` (relative) for `stall_iters`
//! consecutive iterations, or after `max_iters`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::svdd::{solve_dual_indexed, SvddConfig, SvddModel, DEFAULT_KKT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingTrainConfig {
    pub sample_size: usize,
    pub max_iters: usize,
    pub stall_iters: usize,
    pub r2_rel_tol: f64,
    pub seed: u64,
    pub kkt_tol: f64,
}

impl SamplingTrainConfig {
    pub fn new(sample_size: usize, seed: u64) -> Self {
        Self {
            sample_size,
            max_iters: 200,
            stall_iters: 5,
            r2_rel_tol: 0.01,
            seed,
            kkt_tol: DEFAULT_KKT_TOL,
        }
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size < 2 {
            return Err(Error::InvalidInput(format!(
                "sample size must be at least 2, got {}",
                self.sample_size
            )));
        }
        if self.max_iters == 0 || self.stall_iters == 0 {
            return Err(Error::InvalidInput(
                "max_iters and stall_iters must be at least 1".into(),
            ));
        }
        if !(self.r2_rel_tol >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "r2_rel_tol must be >= 0, got {}",
                self.r2_rel_tol
            )));
        }
        Ok(())
    }
}

/// Final model of a sampling run with its iteration history.
#[derive(Debug, Clone)]
pub struct SamplingOutcome {
    pub model: SvddModel,
    pub iterations: usize,
    /// `false` when `max_iters` ran out before `R^2` settled.
    pub converged: bool,
    /// `R^2` after each iteration.
    pub r2_trace: Vec<f64>,
}

impl SamplingOutcome {
    /// Largest relative `R^2` change over the last `k` iterations.
    pub fn tail_oscillation(&self, k: usize) -> f64 {
        let t = &self.r2_trace;
        let start = t.len().saturating_sub(k + 1);
        t[start..]
            .windows(2)
            .map(|w| relative_change(w[0], w[1]))
            .fold(0.0, f64::max)
    }
}

fn relative_change(prev: f64, next: f64) -> f64 {
    let diff = (next - prev).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / prev.abs()
    }
}

/// Trains on samples drawn from a generator seeded with `cfg.seed`.
///
/// A `sample_size` of at least `data.n()` trains once on the full data.
pub fn sample_train(data: &Dataset, s: f64, f: f64, cfg: &SamplingTrainConfig) -> Result<SamplingOutcome> {
    sample_train_with(data, s, f, cfg, &mut rng::seeded(cfg.seed))
}

pub fn sample_train_with(
    data: &Dataset,
    s: f64,
    f: f64,
    cfg: &SamplingTrainConfig,
    rng: &mut Rng,
) -> Result<SamplingOutcome> {
    cfg.validate()?;
    let config = SvddConfig::new(s, f).with_kkt_tol(cfg.kkt_tol);
    let n = data.n();
    if cfg.sample_size >= n {
        let (model, _, _) = solve_dual_indexed(data, &config)?;
        return Ok(SamplingOutcome {
            r2_trace: vec![model.r_squared()],
            model,
            iterations: 1,
            converged: true,
        });
    }

    let mut working: Vec<usize> = Vec::new();
    let mut marks = vec![false; n];
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut stalled = 0;
    let mut last = None;
    for _ in 0..cfg.max_iters {
        for &i in &working {
            marks[i] = true;
        }
        for _ in 0..cfg.sample_size {
            marks[rng.random_range(0..n)] = true;
        }
        let union: Vec<usize> = (0..n).filter(|&i| marks[i]).collect();
        marks.iter_mut().for_each(|m| *m = false);

        let subset = data.select_rows(&union)?;
        let (model, _, keep) = solve_dual_indexed(&subset, &config)?;
        working = keep.into_iter().map(|k| union[k]).collect();

        let r2 = model.r_squared();
        if let Some(&prev) = trace.last() {
            if relative_change(prev, r2) <= cfg.r2_rel_tol {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        trace.push(r2);
        last = Some(model);
        if stalled >= cfg.stall_iters {
            break;
        }
    }
    Ok(SamplingOutcome {
        model: last.expect("max_iters >= 1"),
        iterations: trace.len(),
        converged: stalled >= cfg.stall_iters,
        r2_trace: trace,
    })
}
