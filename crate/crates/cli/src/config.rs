//! Optional TOML defaults. Keys mirror the long flag names with `_` in
//! place of `-`; any flag given on the command line takes precedence.

use std::path::Path;

use serde::{Deserialize, Serialize};
use svddbw_core::{SampleSchedule, SweepGrid};

use crate::args::{GridArgs, ScheduleArgs};
use crate::error::CliError;

pub const DEFAULT_F: f64 = 0.001;
pub const DEFAULT_REPEATS: usize = 40;
pub const DEFAULT_RESOLUTION: usize = 200;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub s: Option<f64>,
    pub f: Option<f64>,
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub ds: Option<f64>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub n_step: Option<usize>,
    pub frac_min: Option<f64>,
    pub frac_max: Option<f64>,
    pub frac_step: Option<f64>,
    pub eps_s: Option<f64>,
    pub u: Option<usize>,
    pub knots: Option<usize>,
    pub repeats: Option<usize>,
    pub resolution: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("bad config {}: {}", path.display(), e.message())))
    }

    pub fn seed(&self, flag: Option<u64>, command: &str) -> Result<u64, CliError> {
        flag.or(self.seed)
            .ok_or_else(|| CliError::usage(format!("{command} is randomized and needs --seed")))
    }

    pub fn f(&self, flag: Option<f64>) -> f64 {
        flag.or(self.f).unwrap_or(DEFAULT_F)
    }

    pub fn grid(&self, g: &GridArgs, default: SweepGrid) -> Result<SweepGrid, CliError> {
        SweepGrid::new(
            g.s_min.or(self.s_min).unwrap_or(default.s_min),
            g.s_max.or(self.s_max).unwrap_or(default.s_max),
            g.ds.or(self.ds).unwrap_or(default.delta_s),
        )
        .map_err(usage)
    }

    /// Absolute sizes win over fractions; with neither given the schedule
    /// runs from 5% to 100% of `total` in 1% steps.
    pub fn schedule(&self, a: &ScheduleArgs, total: usize, seed: u64) -> Result<SampleSchedule, CliError> {
        let flags_absolute = a.n_min.is_some() || a.n_max.is_some() || a.n_step.is_some();
        let flags_fraction = a.frac_min.is_some() || a.frac_max.is_some() || a.frac_step.is_some();
        let absolute = flags_absolute
            || (!flags_fraction && (self.n_min.is_some() || self.n_max.is_some() || self.n_step.is_some()));
        if absolute {
            let n_min = a.n_min.or(self.n_min).unwrap_or(1.max(total / 20));
            let n_max = a.n_max.or(self.n_max).unwrap_or(total);
            let n_step = a.n_step.or(self.n_step).unwrap_or(1.max(total / 100));
            return SampleSchedule::new(n_min, n_max, n_step, seed).map_err(usage);
        }
        SampleSchedule::from_fractions(
            total,
            a.frac_min.or(self.frac_min).unwrap_or(0.05),
            a.frac_max.or(self.frac_max).unwrap_or(1.0),
            a.frac_step.or(self.frac_step).unwrap_or(0.01),
            seed,
        )
        .map_err(usage)
    }
}

fn usage(e: svddbw_core::Error) -> CliError {
    CliError::usage(e.to_string())
}
