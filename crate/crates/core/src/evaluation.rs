//! Scoring harness: confusion counts and F1, F1 over a bandwidth grid,
//! 2-D decision grids for plotting, and support-vector counts over `s`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, SweepGrid};
use crate::error::{Error, Result};
use crate::selector::write_rows;
use crate::svdd::{train_curve, SvddModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Which side of the boundary counts as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Target rows are positives; predicting inside is a positive call.
    #[default]
    InsidePositive,
    /// Other rows are positives; predicting outside is a positive call.
    OutsidePositive,
}

pub fn confusion(truth: &[Label], inside: &[bool]) -> Result<ConfusionCounts> {
    confusion_oriented(truth, inside, Orientation::InsidePositive)
}

pub fn confusion_oriented(truth: &[Label], inside: &[bool], orientation: Orientation) -> Result<ConfusionCounts> {
    if truth.len() != inside.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: inside.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("nothing to score".into()));
    }
    let mut c = ConfusionCounts::default();
    for (&label, &is_in) in truth.iter().zip(inside) {
        let (actual, predicted) = match orientation {
            Orientation::InsidePositive => (label == Label::Target, is_in),
            Orientation::OutsidePositive => (label == Label::Other, !is_in),
        };
        match (actual, predicted) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and their harmonic mean; any undefined ratio is 0.
pub fn f1(c: &ConfusionCounts) -> F1Score {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if c.tp == 0 || precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    F1Score { precision, recall, f1 }
}

/// F1 of `model` on the labeled `score` set.
pub fn evaluate(model: &SvddModel, score: &Dataset) -> Result<F1Score> {
    let labels = score
        .labels()
        .ok_or_else(|| Error::InvalidInput("scoring data has no labels".into()))?;
    let inside: Vec<bool> = model.score_all(score)?.iter().map(|r| !r.is_outlier).collect();
    Ok(f1(&confusion(labels, &inside)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Curve {
    pub s: Vec<f64>,
    pub scores: Vec<F1Score>,
    /// Grid bandwidth with the highest F1 (the smallest on ties).
    pub best_s: f64,
}

impl F1Curve {
    pub fn f1_at(&self, s: f64) -> Option<f64> {
        self.s
            .iter()
            .position(|&v| (v - s).abs() <= 1e-9 * s.abs().max(1.0))
            .map(|i| self.scores[i].f1)
    }

    /// Writes `s,precision,recall,f1`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows = self.s.iter().zip(&self.scores).map(|(s, sc)| {
            vec![
                s.to_string(),
                sc.precision.to_string(),
                sc.recall.to_string(),
                sc.f1.to_string(),
            ]
        });
        write_rows(path.as_ref(), &["s", "precision", "recall", "f1"], rows)
    }
}

/// F1 on `score` of a full model trained on `train` at each grid bandwidth.
pub fn f1_sweep(train: &Dataset, score: &Dataset, grid: &SweepGrid, f: f64) -> Result<F1Curve> {
    let labels = score
        .labels()
        .ok_or_else(|| Error::InvalidInput("scoring data has no labels".into()))?;
    if !labels.contains(&Label::Target) || !labels.contains(&Label::Other) {
        return Err(Error::InvalidInput(
            "scoring data needs both target and other rows".into(),
        ));
    }
    let curve = train_curve(train, grid, f)?;
    let scores = curve
        .models
        .iter()
        .map(|m| evaluate(m, score))
        .collect::<Result<Vec<_>>>()?;
    let f1s: Vec<f64> = scores.iter().map(|s| s.f1).collect();
    let best = crate::selector::argmax_first(&f1s).expect("grid is not empty");
    Ok(F1Curve {
        best_s: curve.s[best],
        s: curve.s,
        scores,
    })
}

/// Support-vector count of a full model at each grid bandwidth.
pub fn nsv_curve(data: &Dataset, grid: &SweepGrid, f: f64) -> Result<Vec<(f64, usize)>> {
    let curve = train_curve(data, grid, f)?;
    Ok(curve.s.into_iter().zip(curve.nsv).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBounds {
    pub xlo: f64,
    pub xhi: f64,
    pub ylo: f64,
    pub yhi: f64,
}

impl GridBounds {
    pub fn new(xlo: f64, xhi: f64, ylo: f64, yhi: f64) -> Result<Self> {
        if !(xlo < xhi && ylo < yhi) || ![xlo, xhi, ylo, yhi].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bad grid bounds x {xlo}..{xhi}, y {ylo}..{yhi}"
            )));
        }
        Ok(Self { xlo, xhi, ylo, yhi })
    }

    /// Bounding box of the first two columns, widened by 20% per side.
    pub fn around(data: &Dataset) -> Result<Self> {
        if data.m() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: data.m(),
            });
        }
        let b = data.bounds();
        let pad = |(lo, hi): (f64, f64)| {
            let w = if hi > lo { hi - lo } else { 1.0 };
            (lo - 0.2 * w, hi + 0.2 * w)
        };
        let (xlo, xhi) = pad(b[0]);
        let (ylo, yhi) = pad(b[1]);
        Self::new(xlo, xhi, ylo, yhi)
    }
}

/// Inside/outside flags at the centers of a `resolution x resolution` grid.
/// Row `j` (from `ylo` upward) and column `i` live at `flags[j * resolution + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagGrid {
    pub bounds: GridBounds,
    pub resolution: usize,
    pub flags: Vec<bool>,
}

impl FlagGrid {
    pub fn x(&self, i: usize) -> f64 {
        let b = &self.bounds;
        b.xlo + (i as f64 + 0.5) * (b.xhi - b.xlo) / self.resolution as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        let b = &self.bounds;
        b.ylo + (j as f64 + 0.5) * (b.yhi - b.ylo) / self.resolution as f64
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.flags[j * self.resolution + i]
    }

    pub fn inside_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Writes `x,y,flag` with flag 1 inside and 0 outside.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let r = self.resolution;
        let rows = (0..r * r).map(|k| {
            let (i, j) = (k % r, k / r);
            vec![
                self.x(i).to_string(),
                self.y(j).to_string(),
                u8::from(self.flags[k]).to_string(),
            ]
        });
        write_rows(path.as_ref(), &["x", "y", "flag"], rows)
    }

    /// Two-color heatmap, one pixel per cell, `y` pointing up.
    pub fn to_svg(&self) -> String {
        let r = self.resolution;
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{w}\" viewBox=\"0 0 {r} {r}\" shape-rendering=\"crispEdges\">\n<rect width=\"{r}\" height=\"{r}\" fill=\"#f2f2f2\"/>\n",
            w = (r * 3).max(200)
        );
        for j in 0..r {
            for i in 0..r {
                if self.get(i, j) {
                    let _ = writeln!(
                        svg,
                        "<rect x=\"{i}\" y=\"{}\" width=\"1\" height=\"1\" fill=\"#1f5fa8\"/>",
                        r - 1 - j
                    );
                }
            }
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn write_svg(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_svg()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Scores the centers of a regular grid over `bounds`.
pub fn grid_score_2d(model: &SvddModel, bounds: GridBounds, resolution: usize) -> Result<FlagGrid> {
    if model.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: model.dim(),
        });
    }
    if resolution < 2 {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    let mut grid = FlagGrid {
        bounds,
        resolution,
        flags: Vec::new(),
    };
    let flags = (0..resolution * resolution)
        .into_par_iter()
        .map(|k| {
            let p = [grid.x(k % resolution), grid.y(k / resolution)];
            model.score(&p).map(|r| !r.is_outlier)
        })
        .collect::<Result<Vec<bool>>>()?;
    grid.flags = flags;
    Ok(grid)
}

/// A run of nearby values in a sample, with its most frequent member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueCluster {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Most frequent value (the smallest on ties).
    pub mode: f64,
}

/// Groups sorted values whose neighbors lie within `max_gap` of each other,
/// largest group first (lower values first on equal counts).
pub fn value_clusters(values: &[f64], max_gap: f64) -> Vec<ValueCluster> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for v in sorted {
        match clusters.last_mut() {
            Some(c) if v - c[c.len() - 1] <= max_gap => c.push(v),
            _ => clusters.push(vec![v]),
        }
    }
    let mut out: Vec<ValueCluster> = clusters
        .into_iter()
        .map(|c| {
            let (mut mode, mut best) = (c[0], 0);
            let mut k = 0;
            while k < c.len() {
                let run = c[k..].iter().take_while(|&&v| v == c[k]).count();
                if run > best {
                    best = run;
                    mode = c[k];
                }
                k += run;
            }
            ValueCluster {
                lo: c[0],
                hi: c[c.len() - 1],
                count: c.len(),
                mode,
            }
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then(a.lo.total_cmp(&b.lo)));
    out
}
