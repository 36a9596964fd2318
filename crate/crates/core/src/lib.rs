//! One-class classification with support vector data description (SVDD)
//! and automatic selection of the Gaussian kernel bandwidth.
//!
//! The crate is organized bottom-up:
//!
//! - [`data`]: datasets, CSV I/O, synthetic 2-D shapes, resampling.
//! - [`kernel`]: Gaussian kernel and kernel matrices.
//! - [`svdd`]: dual solver, threshold, scoring, model persistence.
//! - [`sampling`]: approximate training on repeated small samples.
//! - [`pspline`]: difference curves and penalized B-spline smoothing.
//! - [`selector`]: peak, sampling peak, coefficient-of-variation and
//!   farthest-neighbor bandwidth selectors, plus randomized sweeps.
//! - [`evaluation`]: confusion counts, F1, grid scoring, NSV curves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod evaluation;
pub mod kernel;
pub mod pspline;
pub mod rng;
pub mod sampling;
pub mod selector;
pub mod svdd;

pub use data::{Dataset, Label, SampleSchedule, SweepGrid};
pub use error::{Error, Result};
pub use kernel::{gaussian_kernel, kernel_matrix, KernelMatrix};
pub use svdd::{solve_dual, train_curve, ScoreResult, SvddConfig, SvddModel, TrainCurve};
pub use evaluation::{confusion, f1, f1_sweep, grid_score_2d, nsv_curve, ConfusionCounts, F1Score};
pub use pspline::{fit_pspline, Curve, SmootherParams, SplineFit};
pub use sampling::{sample_train, SamplingTrainConfig};
pub use selector::{
    cv_select, dfn_select, full_peak, randomized_sweep, sampling_peak, ConvergenceParams,
    KernelMethod, RandomizedSweepConfig, SamplingPeakConfig, SelectionTrace,
};
