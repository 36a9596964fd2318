//! Gaussian kernel `exp(-||x - y||^2 / (2 s^2))` and dense kernel matrices.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Sum of squared coordinate differences, computed directly (no
/// `|x|^2 + |y|^2 - 2 x.y` expansion).
#[inline]
pub fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn gaussian_from_sq(d2: f64, s: f64) -> f64 {
    (-d2 / (2.0 * s * s)).exp()
}

pub(crate) fn check_bandwidth(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(s))
    }
}

pub fn gaussian_kernel(x: &[f64], y: &[f64], s: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    check_bandwidth(s)?;
    Ok(gaussian_from_sq(squared_distance(x, y), s))
}

/// Symmetric `n x n` Gaussian kernel matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    values: Vec<f64>,
    n: usize,
    bandwidth: f64,
}

impl KernelMatrix {
    pub fn new(data: &Dataset, s: f64) -> Result<Self> {
        check_bandwidth(s)?;
        let n = data.n();
        // upper triangle row by row, mirrored afterwards
        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = data.row(i);
                (i + 1..n)
                    .map(|j| gaussian_from_sq(squared_distance(xi, data.row(j)), s))
                    .collect()
            })
            .collect();
        let mut values = vec![0.0; n * n];
        for (i, row) in upper.into_iter().enumerate() {
            values[i * n + i] = 1.0;
            for (off, v) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(Self {
            values,
            n,
            bandwidth: s,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Off-diagonal entries `K[i][j]`, `i != j`, in row-major order.
    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row(i)
                .iter()
                .enumerate()
                .filter(move |(j, _)| *j != i)
                .map(|(_, v)| *v)
        })
    }

    /// `K v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).iter().zip(v).map(|(k, x)| k * x).sum())
            .collect()
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

pub fn kernel_matrix(data: &Dataset, s: f64) -> Result<KernelMatrix> {
    KernelMatrix::new(data, s)
}
