//! Bandwidth selection.
//!
//! Two families live here. The peak methods look for the first bend of the
//! OOF-versus-`s` curve, either on full training ([`full_peak`]) or on
//! sampled training at growing sample sizes ([`sampling_peak`]). The kernel
//! statistic methods ([`cv_select`], [`dfn_select`]) maximize a closed-form
//! function of the kernel matrix and can be averaged over random draws with
//! [`randomized_sweep`].

mod peak;
mod spread;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use peak::{
    full_peak, peak_curve, sampling_peak, FullPeakResult, PeakAnalysis, SamplingPeakConfig,
};
pub use spread::{
    cv_objective, cv_select, dfn_objective, dfn_select, objective_curve, randomized_sweep,
    KernelMethod, RandomizedSweepConfig, SizeStats, SweepResult, CV_EPSILON,
};

/// Stopping rule: `|s_i - s_{i-1}| <= eps_s |s_{i-1}|` for `u` consecutive
/// sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceParams {
    pub eps_s: f64,
    pub u: usize,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        Self { eps_s: 0.05, u: 3 }
    }
}

impl ConvergenceParams {
    pub fn new(eps_s: f64, u: usize) -> Result<Self> {
        let p = Self { eps_s, u };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_s > 0.0) || self.u == 0 {
            return Err(Error::InvalidInput(format!(
                "convergence needs eps_s > 0 and u >= 1 (got {}, {})",
                self.eps_s, self.u
            )));
        }
        Ok(())
    }

    fn close(&self, prev: f64, next: f64) -> bool {
        (next - prev).abs() <= self.eps_s * prev.abs()
    }

    /// Index into `values` at which the rule is first met, if ever.
    pub fn first_converged(&self, values: &[f64]) -> Option<usize> {
        let mut run = 0;
        for i in 1..values.len() {
            run = if self.close(values[i - 1], values[i]) { run + 1 } else { 0 };
            if run >= self.u {
                return Some(i);
            }
        }
        None
    }
}

/// One sample size of a sampling-peak run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub n: usize,
    pub s_opt: f64,
    /// Wall-clock time for the whole `s` grid at this size.
    pub seconds: f64,
    /// Sum of the per-`s` training times.
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub entries: Vec<TraceEntry>,
    pub converged: bool,
    /// Sample size at which the stopping rule was met.
    pub converged_at: Option<usize>,
    pub final_s: f64,
}

impl SelectionTrace {
    pub fn s_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.s_opt).collect()
    }

    /// Re-derives `converged_at` from the recorded `s_opt` sequence.
    pub fn replay(&self, conv: &ConvergenceParams) -> Option<usize> {
        conv.first_converged(&self.s_values())
            .map(|i| self.entries[i].n)
    }

    /// Writes `n_i,s_opt,seconds`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows = self
            .entries
            .iter()
            .map(|e| vec![e.n.to_string(), e.s_opt.to_string(), e.seconds.to_string()]);
        write_rows(path.as_ref(), &["n_i", "s_opt", "seconds"], rows)
    }
}

pub(crate) fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Position of the largest value; the first one wins ties.
pub(crate) fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}
